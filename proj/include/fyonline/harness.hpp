#ifndef FYONLINE_HARNESS_HPP
#define FYONLINE_HARNESS_HPP

#include "common.hpp"
#include "decoder.hpp"
#include "learners.hpp"
#include "regularizer.hpp"
#include "rng.hpp"
#include "streams.hpp"
#include "target_loss.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace fyo {

/// A fully specified learning problem. An OgdConstant learner with eta ≤ 0
/// means "use the default rate".
struct Problem {
    OutputSpace space;
    TargetLoss loss;
    Regularizer reg;
    LearnerSpec learner = OgdConstant{};
    double C = 1.0;

    ProblemConstants constants() const { return ProblemConstants::from(reg, loss, C); }

    LearnerSpec resolved_learner() const {
        if (const auto* c = std::get_if<OgdConstant>(&learner); c && !(c->eta > 0.0)) {
            return OgdConstant{constants().default_eta()};
        }
        return learner;
    }
};

struct RoundRecord {
    int t = 0;
    double target_realized = 0.0;
    double target_expected = 0.0;
    double surrogate_w = 0.0;
    double surrogate_u = 0.0;
    double grad_norm_sq = 0.0;
    double p = 0.0;
};

struct Violation {
    int t = 0;
    std::string what;
    double slack = 0.0;
};

struct RegretTrace {
    std::vector<RoundRecord> records;
    double cum_target_realized = 0.0;
    double cum_target_expected = 0.0;
    double cum_surrogate_w = 0.0;
    double cum_surrogate_u = 0.0;
    double cum_surrogate_zero = 0.0;
    double u_norm_sq = 0.0;
    bool comparator_planted = false;
    bool forced = false;
    LearnerSpec learner;
    RegretCertificate certificate_u;
    RegretCertificate certificate_zero;
    std::vector<Violation> violations;
    /// Σ_t W_t over the rounds played (W̄ = sum / T).
    Matrix estimator_sum;
    Matrix final_estimator;
    /// W_1, ..., W_T when requested.
    std::vector<Matrix> history;
    std::uint64_t decode_seed = 0;

    /// Σ E[L_t] − Σ S_t(U).
    double expected_regret() const { return cum_target_expected - cum_surrogate_u; }
    double realized_regret() const { return cum_target_realized - cum_surrogate_u; }
};

/// Source of rounds for adaptive adversaries: receives the round index, the
/// learner's current estimator and all previously decoded outputs.
using AdaptiveSource = std::function<Sample(int t, const Matrix& W, const std::vector<Vector>& plays)>;

struct RunOptions {
    std::uint64_t decode_seed = 0;
    /// Run even when λ > 4γ/ν fails.
    bool force = false;
    bool keep_history = false;
    /// Comparator U; when absent the stream's planted matrix is used, else a batch fit.
    std::optional<Matrix> comparator;
};

/// Batch proxy comparator: full-gradient descent on Σ_t S_t(U) from U = 0,
/// 500 iterations with step 1/(bT).
inline Matrix fit_comparator(const Problem& problem, const std::vector<Sample>& samples, int iterations = 500) {
    if (samples.empty()) {
        return Matrix();
    }
    const int d = problem.space.dim();
    const auto n = samples.front().x.size();
    Matrix U = Matrix::Zero(d, n);
    const double T = static_cast<double>(samples.size());
    const double step = 1.0 / (problem.constants().b() * T);
    for (int it = 0; it < iterations; ++it) {
        Matrix grad = Matrix::Zero(d, n);
        for (const Sample& s : samples) {
            grad += problem.reg.fy_gradient(U * s.x, s.y) * s.x.transpose();
        }
        U -= step * grad;
    }
    return U;
}

namespace detail {

inline RegretTrace run_loop(const Problem& problem, int T, std::optional<Matrix> comparator, int n,
                            const std::function<Sample(int, const Matrix&, const std::vector<Vector>&)>& next,
                            const RunOptions& options) {
    const ProblemConstants k = problem.constants();
    RegretTrace trace;
    trace.decode_seed = options.decode_seed;
    if (!k.gate()) {
        if (!options.force) {
            k.require_gate();
        }
        trace.forced = true;
    }
    LearnerSpec spec = problem.learner;
    if (const auto* c = std::get_if<OgdConstant>(&spec); c && !(c->eta > 0.0)) {
        spec = OgdConstant{trace.forced ? 2.0 * 0.5 / k.b() : k.default_eta()};
    }
    trace.learner = spec;
    const int d = problem.space.dim();
    const double grad_bound = k.scale * k.C * k.kappa * k.diameter;
    OnlineLearner learner(spec, d, n, grad_bound);
    trace.estimator_sum = Matrix::Zero(d, n);
    const bool have_u = comparator.has_value();
    if (have_u) {
        trace.u_norm_sq = comparator->squaredNorm();
    }
    const double decoding_factor = decoding_constant(problem.reg, problem.loss);
    const Prediction zero_prediction = problem.reg.predict(Vector::Zero(d));
    const double zero_conjugate = problem.reg.conjugate(Vector::Zero(d), zero_prediction);
    std::vector<CertificateRow> rows_u, rows_zero;
    std::vector<Vector> plays;
    for (int t = 1; t <= T; ++t) {
        const Matrix& W = learner.W();
        Sample s = next(t, W, plays);
        if (s.x.size() != n) {
            throw InputError("round " + std::to_string(t) + ": input has the wrong dimension");
        }
        if (s.x.norm() > k.C * (1.0 + 1e-12)) {
            throw InputError("round " + std::to_string(t) + ": input norm exceeds C");
        }
        if (!is_vertex(problem.space, s.y)) {
            throw InputError("round " + std::to_string(t) + ": label is not a vertex");
        }
        trace.estimator_sum += W;
        if (options.keep_history) {
            trace.history.push_back(W);
        }
        RoundRecord r;
        r.t = t;
        try {
            const Vector theta = W * s.x;
            const Regularizer::Evaluation eval = problem.reg.evaluate(theta, s.y);
            const DecodePlan decode_plan = plan_from_prediction(problem.space, eval.prediction);
            CounterRng rng(options.decode_seed, static_cast<std::uint64_t>(t));
            const Vector played = decode(decode_plan, rng);
            r.target_realized = problem.loss.eval(played, s.y);
            r.target_expected = expected_target_loss(decode_plan, problem.loss, s.y);
            r.surrogate_w = eval.loss;
            r.p = decode_plan.p;
            r.grad_norm_sq = eval.gradient.squaredNorm() * s.x.squaredNorm();
            r.surrogate_u = have_u ? problem.reg.fy_loss(*comparator * s.x, s.y) : 0.0;
            const double zero_loss =
                std::max(0.0, (zero_conjugate + problem.reg.psi(s.y)) * problem.reg.loss_scale());
            const double decoding_slack = decoding_factor * r.surrogate_w + 1e-9 - r.target_expected;
            if (decoding_slack < 0.0) {
                trace.violations.push_back({t, "decoding inequality E[L] <= 4γ/(λν)·S", decoding_slack});
            }
            rows_u.push_back({r.surrogate_w, r.surrogate_u, r.grad_norm_sq});
            rows_zero.push_back({r.surrogate_w, zero_loss, r.grad_norm_sq});
            trace.cum_surrogate_zero += zero_loss;
            plays.push_back(played);
            learner.step(eval.gradient * s.x.transpose());
        } catch (const Error& e) {
            throw Error("round " + std::to_string(t) + ": " + e.what());
        }
        trace.cum_target_realized += r.target_realized;
        trace.cum_target_expected += r.target_expected;
        trace.cum_surrogate_w += r.surrogate_w;
        trace.cum_surrogate_u += r.surrogate_u;
        trace.records.push_back(r);
    }
    trace.final_estimator = learner.W();
    if (have_u) {
        trace.certificate_u = regret_certificate(rows_u, trace.u_norm_sq, spec, k);
        if (trace.certificate_u.violated) {
            trace.violations.push_back({T, "regret certificate (comparator U)", trace.certificate_u.slack});
        }
    }
    trace.certificate_zero = regret_certificate(rows_zero, 0.0, spec, k);
    if (trace.certificate_zero.violated) {
        trace.violations.push_back({T, "regret certificate (U = 0)", trace.certificate_zero.slack});
    }
    return trace;
}

}  // namespace detail

/// The online protocol on a materialized stream: for t = 1..T, θ_t = W_t x_t,
/// decode, observe y_t, record both losses and take a learner step on
/// (ŷ_Ω(θ_t) − y_t)x_tᵀ. Checks the decoding inequality every round and the
/// learner's regret certificate for U = comparator and U = 0.
inline RegretTrace run(const Problem& problem, const StreamData& data, const RunOptions& options = {}) {
    std::optional<Matrix> comparator = options.comparator;
    bool planted = false;
    if (!comparator && data.planted) {
        comparator = data.planted;
        planted = true;
    }
    if (!comparator && !data.samples.empty()) {
        comparator = fit_comparator(problem, data.samples);
    }
    const int n = data.samples.empty() ? (comparator ? static_cast<int>(comparator->cols()) : 1)
                                       : static_cast<int>(data.samples.front().x.size());
    if (comparator && (comparator->rows() != problem.space.dim() || comparator->cols() != n)) {
        throw ConfigError("comparator has the wrong shape");
    }
    RegretTrace trace = detail::run_loop(
        problem, static_cast<int>(data.samples.size()), comparator, n,
        [&](int t, const Matrix&, const std::vector<Vector>&) { return data.samples[static_cast<std::size_t>(t - 1)]; },
        options);
    trace.comparator_planted = planted;
    return trace;
}

/// Same protocol against an adaptive source of rounds.
inline RegretTrace run_adaptive(const Problem& problem, int T, int n, const AdaptiveSource& source,
                                const RunOptions& options = {}) {
    return detail::run_loop(problem, T, options.comparator, n, source, options);
}

struct BatchReport {
    Matrix W_bar;
    /// Holdout mean of E[L(ψ_Ω(W̄x); y)] and its Monte Carlo band 4·sd/√n.
    double target_risk = 0.0;
    double target_band = 0.0;
    /// Holdout mean of S_Ω(Ux; y) for the comparator.
    double comparator_risk = 0.0;
    double comparator_band = 0.0;
    /// Excess-risk constant divided by T.
    double bound_term = 0.0;
    int T = 0;
    int holdout = 0;
};

/// Online-to-batch conversion: W̄ = (1/T)Σ W_t, evaluated on held-out samples
/// with the decoder's exact conditional expectation.
inline BatchReport online_to_batch(const Problem& problem, const RegretTrace& trace,
                                   const std::vector<Sample>& holdout, const std::optional<Matrix>& comparator) {
    if (trace.records.empty()) {
        throw InputError("online_to_batch needs a non-empty estimator history");
    }
    BatchReport out;
    out.T = static_cast<int>(trace.records.size());
    out.W_bar = trace.estimator_sum / static_cast<double>(out.T);
    out.holdout = static_cast<int>(holdout.size());
    auto mean_band = [](const std::vector<double>& v, double& mean, double& band) {
        mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var /= std::max<double>(1.0, static_cast<double>(v.size()) - 1.0);
        band = 4.0 * std::sqrt(var / static_cast<double>(v.size()));
    };
    std::vector<double> risks, comp;
    for (const Sample& s : holdout) {
        risks.push_back(expected_target_loss(plan(problem.reg, out.W_bar * s.x), problem.loss, s.y));
        if (comparator) {
            comp.push_back(problem.reg.fy_loss(*comparator * s.x, s.y));
        }
    }
    if (!risks.empty()) {
        mean_band(risks, out.target_risk, out.target_band);
    }
    if (!comp.empty()) {
        mean_band(comp, out.comparator_risk, out.comparator_band);
    }
    if (comparator) {
        out.bound_term = problem.constants().expected_bound(comparator->squaredNorm()) / out.T;
    }
    return out;
}

struct HighProbabilityReport {
    std::vector<double> regrets;
    double quantile = 0.0;
    double bound = 0.0;
    double delta = 0.1;
    int runs = 0;
    bool unreliable = false;
    double eta = 0.0;
};

/// Realized regret Σ L_t(ψ(θ_t)) − Σ S_t(U) over `runs` decode seeds on a fixed
/// stream, with constant-rate OGD at η = a/b. The estimator trajectory does
/// not depend on the decoded outputs, so it is computed once and each seed
/// only redraws the decoder: this equals `runs` independent runs with decode
/// seeds base_seed, base_seed + 1, ...
inline HighProbabilityReport high_prob_eval(const Problem& base, const StreamData& data, int runs, double delta,
                                            std::uint64_t base_seed = 0) {
    if (runs < 1 || !(delta > 0.0 && delta < 1.0)) {
        throw ConfigError("high-probability evaluation needs runs >= 1 and delta in (0, 1)");
    }
    Problem problem = base;
    const ProblemConstants k = problem.constants();
    problem.learner = OgdConstant{k.high_probability_eta()};
    HighProbabilityReport out;
    out.delta = delta;
    out.runs = runs;
    out.eta = k.high_probability_eta();
    out.unreliable = runs < 10.0 / delta;
    const Matrix U = data.planted ? *data.planted : fit_comparator(problem, data.samples);
    const int d = problem.space.dim();
    const int n = data.samples.empty() ? 1 : static_cast<int>(data.samples.front().x.size());
    OnlineLearner learner(problem.learner, d, n);
    std::vector<DecodePlan> plans;
    double sum_u = 0.0;
    for (const Sample& s : data.samples) {
        const Regularizer::Evaluation eval = problem.reg.evaluate(learner.W() * s.x, s.y);
        plans.push_back(plan_from_prediction(problem.space, eval.prediction));
        sum_u += problem.reg.fy_loss(U * s.x, s.y);
        learner.step(eval.gradient * s.x.transpose());
    }
    for (int r = 0; r < runs; ++r) {
        double total = 0.0;
        for (std::size_t t = 0; t < plans.size(); ++t) {
            CounterRng rng(base_seed + static_cast<std::uint64_t>(r), t + 1);
            total += problem.loss.eval(decode(plans[t], rng), data.samples[t].y);
        }
        out.regrets.push_back(total - sum_u);
    }
    std::vector<double> sorted = out.regrets;
    std::sort(sorted.begin(), sorted.end());
    const auto idx = static_cast<std::size_t>(std::ceil((1.0 - delta) * runs)) - 1;
    out.quantile = sorted[std::min(idx, sorted.size() - 1)];
    out.bound = k.high_probability_bound(U.squaredNorm(), delta);
    return out;
}

/// Comparison decoder: y* with probability 1 − p, otherwise a uniformly random
/// class. Simplex only; consumes two uniforms like `decode`.
inline Vector baseline_uniform_exploration_decoder(const DecodePlan& plan, const OutputSpace& space,
                                                   CounterRng& rng) {
    if (space.kind() != SpaceKind::Simplex) {
        throw UnsupportedError("uniform exploration baseline is defined for the simplex only");
    }
    const double u_branch = rng.uniform();
    const double u_class = rng.uniform();
    if (!(u_branch < plan.p)) {
        return plan.y_star;
    }
    const int d = space.dim();
    const int k = std::min(d - 1, static_cast<int>(u_class * d));
    return Vector::Unit(d, k);
}

/// Exact expectation of the baseline decoder's target loss.
inline double baseline_expected_target_loss(const DecodePlan& plan, const TargetLoss& loss, const Vector& y) {
    const int d = loss.space().dim();
    double uniform = 0.0;
    for (int i = 0; i < d; ++i) {
        uniform += loss.eval(Vector::Unit(d, i), y);
    }
    uniform /= d;
    return (1.0 - plan.p) * loss.eval(plan.y_star, y) + plan.p * uniform;
}

}  // namespace fyo

#endif
