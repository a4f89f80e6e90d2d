#ifndef FYONLINE_STREAMS_HPP
#define FYONLINE_STREAMS_HPP

#include "common.hpp"
#include "output_space.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace fyo {

struct Sample {
    Vector x;
    Vector y;
};

enum class InputDistribution { Sphere, Ball, GaussianClipped };
enum class LabelRule { Argmax, Softmax };

/// Labels from a planted linear model: y = argmax_y ⟨U x, y⟩ or a Gibbs draw
/// p(y) ∝ exp⟨U x, y⟩, replaced by a uniform vertex with probability `noise`.
struct LinearModelSpec {
    Matrix U;
    InputDistribution input = InputDistribution::Sphere;
    LabelRule rule = LabelRule::Argmax;
    double noise = 0.0;
};

/// Inputs whose planted scores U₀x stay at distance ≥ margin from the
/// decision frontier; labels are the argmax vertices.
struct SeparableSpec {
    Matrix U0;
    double margin = 0.0;
    InputDistribution input = InputDistribution::Sphere;
    /// Rejection attempts allowed per emitted sample.
    long budget = 100000;
};

/// The multiclass lower-bound construction on Simplex(d).
struct LowerBoundSpec {
    int d = 2;
    double B = 30.0;
};

using Generator = std::variant<LinearModelSpec, SeparableSpec, LowerBoundSpec>;

struct StreamSpec {
    Generator generator;
    int T = 0;
    double C = 1.0;
    std::uint64_t seed = 0;
};

struct StreamData {
    std::vector<Sample> samples;
    /// Comparator planted by the generator, if any.
    std::optional<Matrix> planted;
    /// Number of fresh rounds of the lower-bound construction (0 otherwise).
    int M = 0;
};

namespace detail {

inline constexpr std::uint64_t data_tag = 0x243f6a8885a308d3ULL;
inline constexpr std::uint64_t holdout_offset = 1ULL << 40;

inline CounterRng data_rng(std::uint64_t seed, std::uint64_t index) {
    return CounterRng(splitmix64(seed ^ data_tag), index);
}

}  // namespace detail

inline Vector draw_input(CounterRng& rng, int n, InputDistribution dist, double C) {
    Vector x(n);
    for (int i = 0; i < n; ++i) {
        x[i] = rng.normal();
    }
    switch (dist) {
        case InputDistribution::Sphere: {
            const double norm = x.norm();
            return norm > 0.0 ? Vector(x * (C / norm)) : Vector(Vector::Unit(n, 0) * C);
        }
        case InputDistribution::Ball: {
            const double norm = x.norm();
            const double radius = C * std::pow(rng.uniform(), 1.0 / n);
            return norm > 0.0 ? Vector(x * (radius / norm)) : Vector(Vector::Zero(n));
        }
        case InputDistribution::GaussianClipped: {
            x *= C / std::sqrt(static_cast<double>(n));
            const double norm = x.norm();
            if (norm > C) {
                x *= C / norm;
            }
            return x;
        }
    }
    return x;
}

inline Vector uniform_vertex(const OutputSpace& space, CounterRng& rng) {
    const int d = space.dim();
    switch (space.kind()) {
        case SpaceKind::Simplex:
            return Vector::Unit(d, static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(d))));
        case SpaceKind::Hypercube: {
            Vector y(d);
            for (int i = 0; i < d; ++i) {
                y[i] = static_cast<double>(rng.below(2));
            }
            return y;
        }
        case SpaceKind::OrdinalChain: {
            Vector y = Vector::Zero(d);
            y.head(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(d) + 1))).setOnes();
            return y;
        }
        case SpaceKind::Birkhoff:
        case SpaceKind::Permutahedron: {
            const int k = space.size();
            std::vector<int> perm(k);
            std::iota(perm.begin(), perm.end(), 0);
            for (int i = k - 1; i > 0; --i) {
                std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
            }
            if (space.kind() == SpaceKind::Permutahedron) {
                Vector y(d);
                for (int i = 0; i < d; ++i) {
                    y[i] = perm[i] + 1.0;
                }
                return y;
            }
            Vector y = Vector::Zero(d);
            for (int i = 0; i < k; ++i) {
                y[i * k + perm[i]] = 1.0;
            }
            return y;
        }
        case SpaceKind::Enumerated: {
            const auto& v = *space.listed_vertices();
            return v[rng.below(v.size())];
        }
    }
    return Vector::Zero(d);
}

/// ℓ2 distance from θ to the frontier {θ : argmax_y ⟨θ, y⟩ is not unique}.
/// Equals min over y' ≠ y* of ⟨θ, y* − y'⟩/‖y* − y'‖₂ with y* the argmax;
/// closed forms for the simplex, cube and permutahedron, enumeration otherwise.
inline double frontier_distance(const OutputSpace& space, const Vector& theta) {
    const int d = space.dim();
    switch (space.kind()) {
        case SpaceKind::Simplex: {
            std::vector<double> s(theta.data(), theta.data() + d);
            std::partial_sort(s.begin(), s.begin() + 2, s.end(), std::greater<>());
            return (s[0] - s[1]) / std::sqrt(2.0);
        }
        case SpaceKind::Hypercube:
            return theta.cwiseAbs().minCoeff();
        case SpaceKind::Permutahedron: {
            std::vector<double> s(theta.data(), theta.data() + d);
            std::sort(s.begin(), s.end());
            double gap = std::numeric_limits<double>::infinity();
            for (int i = 1; i < d; ++i) {
                gap = std::min(gap, s[i] - s[i - 1]);
            }
            return gap / std::sqrt(2.0);
        }
        default: {
            const std::vector<Vector> vertices = enumerate_vertices(space);
            std::size_t best = 0;
            for (std::size_t i = 1; i < vertices.size(); ++i) {
                if (theta.dot(vertices[i]) > theta.dot(vertices[best])) {
                    best = i;
                }
            }
            double dist = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < vertices.size(); ++i) {
                if (i != best) {
                    const Vector diff = vertices[best] - vertices[i];
                    dist = std::min(dist, theta.dot(diff) / diff.norm());
                }
            }
            return dist;
        }
    }
}

/// Number of fresh rounds M = ⌊(B² − ln²(dT))/ln²(2d)⌋ of the lower-bound construction.
inline int lower_bound_rounds(int d, int T, double B) {
    const double l_dt = std::log(static_cast<double>(d) * T);
    const double l_2d = std::log(2.0 * d);
    return static_cast<int>(std::floor((B * B - l_dt * l_dt) / (l_2d * l_2d)));
}

/// Lower-bound stream: x_t = e_t for t ≤ M+1 and e_{M+1} afterwards; labels
/// uniform for t ≤ M+1 and frozen after. The planted U′ has column t equal to
/// ln(2d)·e_{i_t} for t ≤ M and last column ln(dT)·e_{i_{M+1}}.
inline StreamData generate_lower_bound_stream(int d, int T, double B, std::uint64_t seed) {
    if (d < 2 || T < 1) {
        throw ConfigError("lower-bound stream needs d >= 2 and T >= 1");
    }
    const int M = lower_bound_rounds(d, T, B);
    if (M < 1) {
        throw ConfigError("lower-bound stream needs B large enough that M >= 1");
    }
    StreamData out;
    out.M = M;
    const int n = M + 1;
    Matrix U = Matrix::Zero(d, n);
    Vector frozen;
    for (int t = 1; t <= T; ++t) {
        Sample s;
        s.x = Vector::Unit(n, std::min(t, n) - 1);
        if (t <= n) {
            CounterRng rng = detail::data_rng(seed, static_cast<std::uint64_t>(t));
            const auto label = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(d)));
            s.y = Vector::Unit(d, label);
            U(label, t - 1) = t <= M ? std::log(2.0 * d) : std::log(static_cast<double>(d) * T);
            frozen = s.y;
        } else {
            s.y = frozen;
        }
        out.samples.push_back(std::move(s));
    }
    out.planted = U;
    return out;
}

inline Sample draw_linear_model_sample(const OutputSpace& space, const LinearModelSpec& spec, double C,
                                       CounterRng& rng) {
    Sample s;
    s.x = draw_input(rng, static_cast<int>(spec.U.cols()), spec.input, C);
    const Vector theta = spec.U * s.x;
    const double noise_draw = rng.uniform();
    if (spec.rule == LabelRule::Argmax) {
        s.y = linear_oracle(space, -theta);
    } else if (space.kind() == SpaceKind::Simplex) {
        const Eigen::ArrayXd e = (theta.array() - theta.maxCoeff()).exp();
        const double u = rng.uniform() * e.sum();
        double acc = 0.0;
        Eigen::Index k = 0;
        for (; k + 1 < e.size(); ++k) {
            acc += e[k];
            if (u < acc) {
                break;
            }
        }
        s.y = Vector::Unit(space.dim(), k);
    } else if (space.kind() == SpaceKind::Hypercube) {
        // The Gibbs distribution over {0,1}^d factorizes into independent coordinates.
        s.y = Vector::Zero(space.dim());
        for (int i = 0; i < space.dim(); ++i) {
            const double prob = 1.0 / (1.0 + std::exp(-theta[i]));
            s.y[i] = rng.uniform() < prob ? 1.0 : 0.0;
        }
    } else {
        const std::vector<Vector> vertices = enumerate_vertices(space);
        Vector scores(static_cast<Eigen::Index>(vertices.size()));
        for (std::size_t i = 0; i < vertices.size(); ++i) {
            scores[static_cast<Eigen::Index>(i)] = theta.dot(vertices[i]);
        }
        const Eigen::ArrayXd e = (scores.array() - scores.maxCoeff()).exp();
        const double u = rng.uniform() * e.sum();
        double acc = 0.0;
        std::size_t k = 0;
        for (; k + 1 < vertices.size(); ++k) {
            acc += e[static_cast<Eigen::Index>(k)];
            if (u < acc) {
                break;
            }
        }
        s.y = vertices[k];
    }
    if (noise_draw < spec.noise) {
        s.y = uniform_vertex(space, rng);
    }
    return s;
}

inline Sample draw_separable_sample(const OutputSpace& space, const SeparableSpec& spec, double C, CounterRng& rng,
                                    int round) {
    for (long attempt = 0; attempt < spec.budget; ++attempt) {
        Vector x = draw_input(rng, static_cast<int>(spec.U0.cols()), spec.input, C);
        const Vector theta = spec.U0 * x;
        if (spec.margin <= 0.0 || frontier_distance(space, theta) >= spec.margin) {
            return {std::move(x), linear_oracle(space, -theta)};
        }
    }
    throw Error("separable stream: rejection budget exhausted at round " + std::to_string(round));
}

/// Materializes T samples. Sample t uses its own random stream keyed by
/// (seed, offset + t), so prefixes and holdout sets never share draws.
inline StreamData materialize(const StreamSpec& spec, const OutputSpace& space, std::uint64_t offset = 0) {
    if (spec.T < 0) {
        throw ConfigError("T must be non-negative");
    }
    if (!(spec.C > 0.0)) {
        throw ConfigError("C must be positive");
    }
    if (const auto* lb = std::get_if<LowerBoundSpec>(&spec.generator)) {
        if (space.kind() != SpaceKind::Simplex || space.dim() != lb->d) {
            throw ConfigError("lower-bound stream needs Simplex(d)");
        }
        if (spec.T == 0) {
            return {};
        }
        return generate_lower_bound_stream(lb->d, spec.T, lb->B, spec.seed);
    }
    StreamData out;
    if (const auto* lm = std::get_if<LinearModelSpec>(&spec.generator)) {
        if (lm->U.rows() != space.dim()) {
            throw ConfigError("planted U must have d rows");
        }
        for (int t = 1; t <= spec.T; ++t) {
            CounterRng rng = detail::data_rng(spec.seed, offset + static_cast<std::uint64_t>(t));
            out.samples.push_back(draw_linear_model_sample(space, *lm, spec.C, rng));
        }
        out.planted = lm->U;
    } else {
        const auto& sep = std::get<SeparableSpec>(spec.generator);
        if (sep.U0.rows() != space.dim()) {
            throw ConfigError("U0 must have d rows");
        }
        for (int t = 1; t <= spec.T; ++t) {
            CounterRng rng = detail::data_rng(spec.seed, offset + static_cast<std::uint64_t>(t));
            out.samples.push_back(draw_separable_sample(space, sep, spec.C, rng, t));
        }
        if (sep.margin > 0.0) {
            // Scores c·U₀x with c·t₀ ≥ D₂/2 satisfy the unit structured margin,
            // so the squared-ℓ2 surrogate of this comparator is zero.
            const double diameter_l2 = space.kappa() * space.diameter();
            out.planted = (diameter_l2 / (2.0 * sep.margin)) * sep.U0;
        } else {
            out.planted = sep.U0;
        }
    }
    return out;
}

inline StreamData materialize_holdout(const StreamSpec& spec, const OutputSpace& space, int count) {
    StreamSpec holdout = spec;
    holdout.T = count;
    return materialize(holdout, space, detail::holdout_offset);
}

}  // namespace fyo

#endif
