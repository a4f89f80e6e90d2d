#ifndef FYONLINE_VERIFICATION_HPP
#define FYONLINE_VERIFICATION_HPP

#include "common.hpp"
#include "decoder.hpp"
#include "harness.hpp"
#include "learners.hpp"
#include "output_space.hpp"
#include "regularizer.hpp"
#include "rng.hpp"
#include "streams.hpp"
#include "target_loss.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace fyo {

struct PropertyResult {
    std::string name;
    bool passed = true;
    /// Smallest margin observed (negative when violated).
    double worst_slack = std::numeric_limits<double>::infinity();
    long cases = 0;
    std::string counterexample;

    explicit PropertyResult(std::string label = {}) : name(std::move(label)) {}

    void observe(double slack, const std::function<std::string()>& describe) {
        ++cases;
        if (slack < worst_slack) {
            worst_slack = slack;
            if (slack < 0.0 && passed) {
                passed = false;
                counterexample = describe();
            }
        }
    }
};

struct SuiteResult {
    std::string suite;
    std::vector<PropertyResult> properties;
    std::vector<std::string> notes;

    bool passed() const {
        return std::all_of(properties.begin(), properties.end(), [](const PropertyResult& p) { return p.passed; });
    }
};

inline std::string describe_vector(const Vector& v) {
    std::ostringstream out;
    out.precision(17);
    out << "(";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out << (i ? ", " : "") << v[i];
    }
    out << ")";
    return out.str();
}

/// One built-in (space, loss, regularizer) combination.
struct Triple {
    std::string label;
    OutputSpace space;
    TargetLoss loss;
    Regularizer reg;
};

/// The five built-in instantiations at small sizes.
inline std::vector<Triple> builtin_triples() {
    std::vector<Triple> out;
    {
        auto s = OutputSpace::simplex(5);
        out.push_back({"multiclass simplex(5)/zero_one/entropy", s, TargetLoss::builtin(s, "zero_one"),
                       Regularizer::entropy_simplex(s)});
    }
    {
        auto s = OutputSpace::hypercube(6);
        out.push_back({"multilabel hypercube(6)/hamming/sparsemap", s, TargetLoss::builtin(s, "hamming"),
                       Regularizer::squared_l2(s)});
    }
    {
        auto s = OutputSpace::birkhoff(3);
        out.push_back({"ranking birkhoff(3)/rank_mismatch/entropy(mu=1)", s, TargetLoss::builtin(s, "rank_mismatch"),
                       Regularizer::scaled_entropy_birkhoff(s, 1.0)});
    }
    {
        auto s = OutputSpace::permutahedron(4);
        out.push_back({"ranking permutahedron(4)/align/sparsemap", s, TargetLoss::builtin(s, "permutahedron_align"),
                       Regularizer::squared_l2(s)});
    }
    {
        auto s = OutputSpace::ordinal_chain(6);
        out.push_back({"ordinal chain(6)/absolute/sparsemap", s, TargetLoss::builtin(s, "ordinal_absolute"),
                       Regularizer::squared_l2(s)});
    }
    return out;
}

/// Random score vector: half isotropic with a log-uniform scale, half a
/// multiple of a random vertex plus noise (confident regime).
inline Vector random_scores(const OutputSpace& space, CounterRng& rng) {
    const int d = space.dim();
    const double scale = std::pow(10.0, -2.0 + 3.0 * rng.uniform());
    Vector theta(d);
    for (int i = 0; i < d; ++i) {
        theta[i] = scale * rng.normal();
    }
    if (rng.uniform() < 0.5) {
        theta += (3.0 * rng.uniform()) * uniform_vertex(space, rng);
    }
    return theta;
}

inline SuiteResult verify_lemma1(long samples = 10000, std::uint64_t seed = 1) {
    SuiteResult suite{"lemma1", {}, {}};
    for (const Triple& tr : builtin_triples()) {
        PropertyResult prop{"E[L] <= 4γ/(λν)·S on " + tr.label};
        const double factor = decoding_constant(tr.reg, tr.loss);
        for (long i = 0; i < samples; ++i) {
            CounterRng rng(seed, static_cast<std::uint64_t>(i));
            const Vector theta = random_scores(tr.space, rng);
            const Vector y = uniform_vertex(tr.space, rng);
            const Regularizer::Evaluation eval = tr.reg.evaluate(theta, y);
            const DecodePlan pl = plan_from_prediction(tr.space, eval.prediction);
            const double expected = expected_target_loss(pl, tr.loss, y);
            prop.observe(factor * eval.loss + 1e-9 - expected, [&] {
                return "theta=" + describe_vector(theta) + " y=" + describe_vector(y);
            });
        }
        suite.properties.push_back(std::move(prop));
    }
    return suite;
}

/// Regularizers exercised by the loss-property suite.
inline std::vector<std::pair<std::string, Regularizer>> property_regularizers() {
    return {
        {"entropy_simplex(5)", Regularizer::entropy_simplex(OutputSpace::simplex(5))},
        {"entropy_simplex(4) base 2", Regularizer::entropy_simplex(OutputSpace::simplex(4), true)},
        {"squared_l2 hypercube(5)", Regularizer::squared_l2(OutputSpace::hypercube(5))},
        {"scaled_squared_l2(2) permutahedron(4)", Regularizer::scaled_squared_l2(OutputSpace::permutahedron(4), 2.0)},
        {"squared_l2 ordinal_chain(5)", Regularizer::squared_l2(OutputSpace::ordinal_chain(5))},
        {"scaled_entropy_birkhoff(3, mu=1.5)", Regularizer::scaled_entropy_birkhoff(OutputSpace::birkhoff(3), 1.5)},
        {"crf_enumerable hypercube(4, l1)", Regularizer::crf_enumerable(OutputSpace::hypercube(4, Norm::L1))},
    };
}

inline SuiteResult verify_prop1(long fd_cases = 100, long sc_cases = 10000, std::uint64_t seed = 2) {
    SuiteResult suite{"prop1", {}, {}};
    for (const auto& [label, reg] : property_regularizers()) {
        const OutputSpace& space = reg.space();
        PropertyResult fd{"gradient = residual (central differences) on " + label};
        for (long i = 0; i < fd_cases; ++i) {
            CounterRng rng(seed, static_cast<std::uint64_t>(i));
            const Vector theta = random_scores(space, rng);
            const Vector y = uniform_vertex(space, rng);
            const Vector g = reg.fy_gradient(theta, y);
            double worst = 0.0;
            for (int k = 0; k < space.dim(); ++k) {
                Vector plus = theta, minus = theta;
                plus[k] += 1e-6;
                minus[k] -= 1e-6;
                const double fd_k = (reg.fy_loss(plus, y) - reg.fy_loss(minus, y)) / 2e-6;
                worst = std::max(worst, std::abs(fd_k - g[k]));
            }
            fd.observe(1e-5 - worst, [&] { return "theta=" + describe_vector(theta) + " y=" + describe_vector(y); });
        }
        PropertyResult sc{"S >= (λ/2)‖y − ŷ‖² on " + label};
        PropertyResult gn{"‖ŷ − y‖₂² <= (2/λ)·S on " + label};
        PropertyResult nn{"S >= 0, and S = 0 when ŷ = y, on " + label};
        for (long i = 0; i < sc_cases; ++i) {
            CounterRng rng(seed + 1, static_cast<std::uint64_t>(i));
            const Vector theta = random_scores(space, rng);
            const Vector y = uniform_vertex(space, rng);
            const Regularizer::Evaluation eval = reg.evaluate(theta, y);
            const double s = eval.loss / reg.loss_scale();
            const Vector r = y - eval.prediction.point;
            const double dist = norm_of(r, space.norm());
            auto describe = [&] { return "theta=" + describe_vector(theta) + " y=" + describe_vector(y); };
            sc.observe(s - 0.5 * reg.lambda() * dist * dist + 1e-8, describe);
            gn.observe((2.0 / reg.lambda()) * s - r.squaredNorm() + 1e-8, describe);
            nn.observe(eval.loss, describe);
            if (hull_violation(space, eval.prediction.point) <= hull_tolerance &&
                distance(eval.prediction.point, y, space.norm()) == 0.0) {
                nn.observe(1e-12 - std::abs(eval.loss), describe);
            }
        }
        suite.properties.push_back(std::move(fd));
        suite.properties.push_back(std::move(sc));
        suite.properties.push_back(std::move(gn));
        suite.properties.push_back(std::move(nn));
    }
    return suite;
}

using OracleFn = std::function<Vector(const OutputSpace&, const Vector&)>;

/// Deliberately wrong tie-break (last near-optimal vertex instead of the
/// first); negative control for the oracle suite.
inline Vector broken_tiebreak_oracle(const OutputSpace& space, const Vector& c) {
    const std::vector<Vector> vertices = enumerate_vertices(space);
    double best = std::numeric_limits<double>::infinity();
    for (const Vector& v : vertices) best = std::min(best, c.dot(v));
    Vector pick;
    for (const Vector& v : vertices) {
        if (c.dot(v) <= best + tie_tolerance(c)) pick = v;
    }
    return pick;
}

inline std::vector<OutputSpace> oracle_spaces() {
    std::vector<OutputSpace> out;
    for (int d = 2; d <= 8; ++d) out.push_back(OutputSpace::simplex(d));
    for (int d = 1; d <= 8; ++d) out.push_back(OutputSpace::hypercube(d));
    for (int n = 2; n <= 3; ++n) out.push_back(OutputSpace::birkhoff(n));
    for (int d = 2; d <= 5; ++d) out.push_back(OutputSpace::permutahedron(d));
    for (int d = 1; d <= 8; ++d) out.push_back(OutputSpace::ordinal_chain(d));
    return out;
}

/// Random hull point: a Dirichlet(1) mix of a few random vertices, or (every
/// fourth query) the midpoint of two vertices, which creates exact ties.
inline Vector random_hull_point(const OutputSpace& space, CounterRng& rng) {
    if (rng.uniform() < 0.25) {
        return 0.5 * (uniform_vertex(space, rng) + uniform_vertex(space, rng));
    }
    const int k = 1 + static_cast<int>(rng.below(4));
    Vector p = Vector::Zero(space.dim());
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
        const double w = -std::log(1.0 - rng.uniform());
        p += w * uniform_vertex(space, rng);
        total += w;
    }
    return p / total;
}

inline SuiteResult verify_oracles(long queries = 1000, std::uint64_t seed = 3, bool broken_tiebreak = false) {
    SuiteResult suite{"oracles", {}, {}};
    const OracleFn oracle = broken_tiebreak ? OracleFn(broken_tiebreak_oracle) : OracleFn(linear_oracle);
    if (broken_tiebreak) {
        suite.notes.push_back("fault injection: linear oracle replaced by a last-tie variant");
    }
    for (const OutputSpace& space : oracle_spaces()) {
        const std::vector<Vector> vertices = enumerate_vertices(space);
        PropertyResult lin{"linear_oracle = first enumerated minimizer on " + space.name()};
        PropertyResult near{"nearest_vertex attains the enumerated minimum on " + space.name()};
        for (long q = 0; q < queries; ++q) {
            CounterRng rng(seed, static_cast<std::uint64_t>(q));
            Vector c(space.dim());
            const bool ties = q % 2 == 1;
            for (int i = 0; i < space.dim(); ++i) {
                c[i] = ties ? static_cast<double>(rng.below(3)) - 1.0 : rng.normal();
            }
            double best = std::numeric_limits<double>::infinity();
            for (const Vector& v : vertices) best = std::min(best, c.dot(v));
            const Vector* first = nullptr;
            for (const Vector& v : vertices) {
                if (c.dot(v) <= best + tie_tolerance(c)) {
                    first = &v;
                    break;
                }
            }
            const Vector got = oracle(space, c);
            lin.observe(got == *first ? 0.0 : -1.0, [&] {
                return "c=" + describe_vector(c) + " expected " + describe_vector(*first) + " got " + describe_vector(got);
            });

            const Vector p = random_hull_point(space, rng);
            double best_dist = std::numeric_limits<double>::infinity();
            for (const Vector& v : vertices) best_dist = std::min(best_dist, distance(v, p, space.norm()));
            const Vector nv = nearest_vertex(space, p);
            const double dist = distance(nv, p, space.norm());
            near.observe(1e-12 - std::abs(dist - best_dist) + (is_vertex(space, nv) ? 0.0 : -1.0), [&] {
                return "p=" + describe_vector(p) + " got " + describe_vector(nv);
            });
        }
        suite.properties.push_back(std::move(lin));
        suite.properties.push_back(std::move(near));
        PropertyResult nu{"ν from enumeration equals the stored constant on " + space.name()};
        double nu_enum = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < vertices.size(); ++i) {
            for (std::size_t j = i + 1; j < vertices.size(); ++j) {
                nu_enum = std::min(nu_enum, distance(vertices[i], vertices[j], space.norm()));
            }
        }
        if (vertices.size() >= 2) {
            nu.observe(1e-12 - std::abs(nu_enum - space.nu()), [&] {
                return "enumerated " + std::to_string(nu_enum) + " stored " + std::to_string(space.nu());
            });
        }
        suite.properties.push_back(std::move(nu));
    }
    return suite;
}

/// Short runs of every learner family on the built-in problems, checking the
/// per-round decoding inequality, the regret certificates and the expected
/// regret bound at every prefix.
inline SuiteResult verify_bounds(std::uint64_t seed = 4) {
    SuiteResult suite{"bounds", {}, {}};
    struct Case {
        std::string label;
        OutputSpace space;
        std::string loss;
        Regularizer reg;
        int n;
        int T;
        double u_norm;
        LearnerSpec learner;
    };
    const OutputSpace simplex = OutputSpace::simplex(4);
    const OutputSpace cube = OutputSpace::hypercube(20);
    const OutputSpace birk = OutputSpace::birkhoff(3);
    std::vector<Case> cases = {
        {"multiclass simplex(4) base 2, ogd_const", simplex, "zero_one", Regularizer::entropy_simplex(simplex, true), 5,
         2000, 2.0, OgdConstant{}},
        {"multilabel hypercube(20), ogd_const", cube, "hamming", Regularizer::squared_l2(cube), 5, 1000, 2.0,
         OgdConstant{}},
        {"ranking birkhoff(3) mu=1, ogd_const", birk, "rank_mismatch", Regularizer::scaled_entropy_birkhoff(birk, 1.0),
         4, 1000, 2.0, OgdConstant{}},
        {"multiclass simplex(4) base 2, ogd_adaptive", simplex, "zero_one", Regularizer::entropy_simplex(simplex, true),
         5, 2000, 2.0, OgdAdaptive{2.0}},
        {"multiclass simplex(4) base 2, param_free", simplex, "zero_one", Regularizer::entropy_simplex(simplex, true),
         5, 2000, 2.0, ParameterFree{1.0}},
    };
    for (const Case& c : cases) {
        Problem problem{c.space, TargetLoss::builtin(c.space, c.loss), c.reg, c.learner, 1.0};
        Matrix U(c.space.dim(), c.n);
        CounterRng urng(seed, 99);
        for (Eigen::Index i = 0; i < U.size(); ++i) U.data()[i] = urng.normal();
        U *= c.u_norm / U.norm();
        StreamSpec spec{LinearModelSpec{U, InputDistribution::Sphere, LabelRule::Softmax, 0.1}, c.T, 1.0, seed};
        const StreamData data = materialize(spec, c.space);
        const RegretTrace trace = run(problem, data, RunOptions{seed, false, false, {}});
        PropertyResult standing{"standing assertions (decoding inequality, certificates) on " + c.label};
        standing.observe(trace.violations.empty() ? 0.0 : trace.violations.front().slack, [&] {
            return "round " + std::to_string(trace.violations.front().t) + ": " + trace.violations.front().what;
        });
        suite.properties.push_back(std::move(standing));
        const ProblemConstants k = problem.constants();
        double bound = std::numeric_limits<double>::infinity();
        if (std::holds_alternative<OgdConstant>(c.learner)) {
            bound = k.expected_bound(trace.u_norm_sq);
        } else if (const auto* a = std::get_if<OgdAdaptive>(&c.learner)) {
            bound = k.adaptive_bound(a->B);
        }
        if (std::isfinite(bound)) {
            PropertyResult prefix{"expected regret <= theorem bound at every prefix on " + c.label};
            double cum = 0.0;
            for (const RoundRecord& r : trace.records) {
                cum += r.target_expected - r.surrogate_u;
                prefix.observe(bound - cum, [&] { return "prefix " + std::to_string(r.t); });
            }
            suite.properties.push_back(std::move(prefix));
        } else {
            suite.notes.push_back(c.label + ": expected regret " + std::to_string(trace.expected_regret()) +
                                  " (no closed-form constant)");
        }
    }
    return suite;
}

struct AdversaryReport {
    int M = 0;
    double mean_regret = 0.0;
    double threshold = 0.0;
    double standard_error = 0.0;
    double exact_fresh_round_regret = 0.0;
};

/// Multiclass lower-bound construction: expected surrogate regret (closed-form
/// decoder expectation, base-2 logistic surrogate, default-rate OGD) summed
/// over the first M rounds, averaged over label seeds.
inline AdversaryReport adversary_experiment(int d, int T, double B, int seeds) {
    AdversaryReport out;
    const OutputSpace space = OutputSpace::simplex(d);
    Problem problem{space, TargetLoss::builtin(space, "zero_one"), Regularizer::entropy_simplex(space, true),
                    OgdConstant{}, 1.0};
    std::vector<double> regrets;
    for (int s = 0; s < seeds; ++s) {
        const StreamData data = generate_lower_bound_stream(d, T, B, static_cast<std::uint64_t>(s));
        out.M = data.M;
        const RegretTrace trace = run(problem, data, RunOptions{static_cast<std::uint64_t>(s), false, false, {}});
        double r = 0.0;
        for (int t = 0; t < data.M; ++t) {
            r += trace.records[static_cast<std::size_t>(t)].target_expected - trace.records[static_cast<std::size_t>(t)].surrogate_u;
        }
        regrets.push_back(r);
    }
    for (double r : regrets) out.mean_regret += r;
    out.mean_regret /= seeds;
    double var = 0.0;
    for (double r : regrets) var += (r - out.mean_regret) * (r - out.mean_regret);
    out.standard_error = seeds > 1 ? std::sqrt(var / (seeds - 1) / seeds) : 0.0;
    out.threshold = out.M / 4.0;
    const double dd = d;
    out.exact_fresh_round_regret = out.M * ((1.0 - 1.0 / dd) - std::log2(1.0 + (dd - 1.0) / (2.0 * dd)));
    return out;
}

inline SuiteResult verify_adversary(int seeds = 50) {
    SuiteResult suite{"adversary", {}, {}};
    const AdversaryReport rep = adversary_experiment(2, 10000, 30.0, seeds);
    suite.notes.push_back("M = " + std::to_string(rep.M));
    suite.notes.push_back("mean expected surrogate regret over the first M rounds = " + std::to_string(rep.mean_regret) +
                          " (standard error " + std::to_string(rep.standard_error) + ")");
    suite.notes.push_back("exact value M[(1 - 1/d) - log2(1 + (d-1)/(2d))] = " +
                          std::to_string(rep.exact_fresh_round_regret));
    suite.notes.push_back("threshold M/4 = " + std::to_string(rep.threshold));
    PropertyResult prop{"mean regret over the first M rounds >= M/4"};
    prop.observe(rep.mean_regret - rep.threshold, [&] {
        return "mean " + std::to_string(rep.mean_regret) + " < " + std::to_string(rep.threshold);
    });
    suite.properties.push_back(std::move(prop));
    return suite;
}

}  // namespace fyo

#endif
