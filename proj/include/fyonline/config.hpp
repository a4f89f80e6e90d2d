#ifndef FYONLINE_CONFIG_HPP
#define FYONLINE_CONFIG_HPP

#include "common.hpp"
#include "harness.hpp"
#include "learners.hpp"
#include "output_space.hpp"
#include "regularizer.hpp"
#include "streams.hpp"
#include "target_loss.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

namespace fyo {

using json = nlohmann::json;

/// FNV-1a (64 bit).
inline std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Hash of the canonical serialization (sorted keys, no whitespace).
inline std::string config_hash(const json& config) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(config.dump())));
    return buf;
}

namespace detail {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

inline const json& require_field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw ConfigError(std::string("missing field '") + key + "'");
    }
    return j.at(key);
}

inline Norm parse_norm(const std::string& s) {
    if (s == "l1") return Norm::L1;
    if (s == "l2") return Norm::L2;
    throw ConfigError("unknown norm '" + s + "'");
}

inline Matrix parse_matrix(const json& j, const char* what) {
    if (!j.is_array() || j.empty() || !j.front().is_array()) {
        throw ConfigError(std::string(what) + " must be a non-empty array of rows");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const json& row = j.at(static_cast<std::size_t>(i));
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw ConfigError(std::string(what) + " has ragged rows");
        }
        for (Eigen::Index k = 0; k < cols; ++k) {
            m(i, k) = row.at(static_cast<std::size_t>(k)).get<double>();
        }
    }
    if (!m.allFinite()) {
        throw ConfigError(std::string(what) + " has non-finite entries");
    }
    return m;
}

inline Vector parse_vector(const json& j, const char* what) {
    if (!j.is_array()) {
        throw ConfigError(std::string(what) + " must be an array");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = j.at(i).get<double>();
    }
    return v;
}

inline InputDistribution parse_input(const std::string& s) {
    if (s == "sphere") return InputDistribution::Sphere;
    if (s == "ball") return InputDistribution::Ball;
    if (s == "gaussian_clipped") return InputDistribution::GaussianClipped;
    throw ConfigError("unknown input distribution '" + s + "'");
}

/// Planted matrix with i.i.d. Gaussian entries rescaled to a given Frobenius norm.
inline Matrix random_planted(int rows, int cols, double frobenius, std::uint64_t seed) {
    CounterRng rng(splitmix64(seed ^ 0x13198a2e03707344ULL), 0);
    Matrix U(rows, cols);
    for (int j = 0; j < cols; ++j) {
        for (int i = 0; i < rows; ++i) {
            U(i, j) = rng.normal();
        }
    }
    return U * (frobenius / U.norm());
}

}  // namespace detail

inline OutputSpace parse_space(const json& j) {
    const std::string kind = detail::require_field(j, "kind").get<std::string>();
    const std::string norm_name = detail::get_or<std::string>(j, "norm", "");
    auto norm_or = [&](Norm fallback) { return norm_name.empty() ? fallback : detail::parse_norm(norm_name); };
    const int d = detail::get_or<int>(j, "d", 0);
    const int n = detail::get_or<int>(j, "n", 0);
    if (kind == "simplex") return OutputSpace::simplex(d, norm_or(Norm::L1));
    if (kind == "hypercube") return OutputSpace::hypercube(d, norm_or(Norm::L2));
    if (kind == "birkhoff") return OutputSpace::birkhoff(n, norm_or(Norm::L1));
    if (kind == "permutahedron") return OutputSpace::permutahedron(d, norm_or(Norm::L2));
    if (kind == "ordinal_chain") return OutputSpace::ordinal_chain(d, norm_or(Norm::L2));
    if (kind == "enumerated") {
        const Matrix v = detail::parse_matrix(detail::require_field(j, "vertices"), "vertices");
        std::vector<Vector> vertices;
        for (Eigen::Index i = 0; i < v.rows(); ++i) {
            vertices.push_back(v.row(i).transpose());
        }
        return OutputSpace::enumerated(std::move(vertices), norm_or(Norm::L2));
    }
    throw ConfigError("unknown space kind '" + kind + "'");
}

inline TargetLoss parse_loss(const json& j, const OutputSpace& space) {
    if (j.is_string()) {
        return TargetLoss::builtin(space, j.get<std::string>());
    }
    if (j.contains("loss") && j.at("loss").is_string() && j.at("loss").get<std::string>() != "custom") {
        return TargetLoss::builtin(space, j.at("loss").get<std::string>());
    }
    Matrix V = detail::parse_matrix(detail::require_field(j, "V"), "V");
    Vector b = detail::parse_vector(detail::require_field(j, "b"), "b");
    const double gamma = detail::require_field(j, "gamma").get<double>();
    LabelTerm c;
    if (j.contains("c_linear")) c.linear = detail::parse_vector(j.at("c_linear"), "c_linear");
    c.quadratic = detail::get_or<double>(j, "c_quadratic", 0.0);
    c.constant = detail::get_or<double>(j, "c_constant", 0.0);
    try {
        return TargetLoss::custom(space, std::move(V), std::move(b), gamma, std::move(c));
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
}

/// Regularizer descriptor. entropy_simplex uses the base-2 logistic scaling
/// unless "log_base2": false is given.
inline Regularizer parse_regularizer(const json& j, const OutputSpace& space) {
    const std::string kind = j.is_string() ? j.get<std::string>() : detail::require_field(j, "regularizer").get<std::string>();
    if (kind == "entropy_simplex") return Regularizer::entropy_simplex(space, detail::get_or<bool>(j, "log_base2", true));
    if (kind == "squared_l2" || kind == "sparsemap") return Regularizer::squared_l2(space);
    if (kind == "scaled_squared_l2") return Regularizer::scaled_squared_l2(space, detail::get_or<double>(j, "scale", 1.0));
    if (kind == "scaled_entropy_birkhoff") return Regularizer::scaled_entropy_birkhoff(space, detail::get_or<double>(j, "mu", 1.0));
    if (kind == "crf_enumerable") return Regularizer::crf_enumerable(space);
    throw ConfigError("unknown regularizer '" + kind + "'");
}

/// Learner descriptor; "eta" may be a number, "default" (the surrogate-gap
/// rate) or "high_probability" (a/b).
inline LearnerSpec parse_learner(const json& j, const ProblemConstants& k) {
    const std::string kind = j.is_string() ? j.get<std::string>() : detail::require_field(j, "learner").get<std::string>();
    if (kind == "ogd_const") {
        if (j.is_object() && j.contains("eta") && j.at("eta").is_number()) {
            return OgdConstant{j.at("eta").get<double>()};
        }
        const std::string mode = detail::get_or<std::string>(j, "eta", "default");
        if (mode == "default") return OgdConstant{0.0};
        if (mode == "high_probability") return OgdConstant{k.gate() ? k.high_probability_eta() : 0.0};
        throw ConfigError("unknown eta mode '" + mode + "'");
    }
    if (kind == "ogd_adaptive") return OgdAdaptive{detail::get_or<double>(j, "B", 1.0)};
    if (kind == "param_free") return ParameterFree{detail::get_or<double>(j, "epsilon", 1.0)};
    throw ConfigError("unknown learner '" + kind + "'");
}

inline StreamSpec parse_stream(const json& j, const OutputSpace& space, int T, std::uint64_t seed) {
    StreamSpec spec;
    spec.T = T;
    spec.seed = seed;
    spec.C = detail::get_or<double>(j, "C", 1.0);
    const std::string gen = detail::require_field(j, "generator").get<std::string>();
    const int d = space.dim();
    if (gen == "linear_model" || gen == "separable") {
        Matrix U;
        const char* key = gen == "linear_model" ? "U" : "U0";
        if (j.contains(key)) {
            U = detail::parse_matrix(j.at(key), key);
        } else {
            const int n = detail::get_or<int>(j, "n", 0);
            if (n < 1) {
                throw ConfigError(std::string("stream needs '") + key + "' or 'n' >= 1");
            }
            U = detail::random_planted(d, n, detail::get_or<double>(j, "U_norm", 1.0), seed);
        }
        const InputDistribution input = detail::parse_input(detail::get_or<std::string>(j, "input", "sphere"));
        if (gen == "linear_model") {
            LinearModelSpec lm;
            lm.U = std::move(U);
            lm.input = input;
            const std::string rule = detail::get_or<std::string>(j, "label", "argmax");
            if (rule == "argmax") lm.rule = LabelRule::Argmax;
            else if (rule == "softmax") lm.rule = LabelRule::Softmax;
            else throw ConfigError("unknown label rule '" + rule + "'");
            lm.noise = detail::get_or<double>(j, "noise", 0.0);
            if (!(lm.noise >= 0.0 && lm.noise <= 1.0)) throw ConfigError("noise must lie in [0, 1]");
            spec.generator = std::move(lm);
        } else {
            SeparableSpec sep;
            sep.U0 = std::move(U);
            sep.input = input;
            sep.margin = detail::get_or<double>(j, "margin", 0.0);
            sep.budget = detail::get_or<long>(j, "budget", 100000);
            spec.generator = std::move(sep);
        }
    } else if (gen == "lower_bound") {
        spec.generator = LowerBoundSpec{detail::get_or<int>(j, "d", d), detail::get_or<double>(j, "B", 30.0)};
    } else {
        throw ConfigError("unknown generator '" + gen + "'");
    }
    if (const auto* lm = std::get_if<LinearModelSpec>(&spec.generator); lm && lm->U.rows() != d) {
        throw ConfigError("planted U must have d rows");
    }
    return spec;
}

struct RunConfig {
    json raw;
    std::string hash;
    Problem problem;
    StreamSpec stream;
    int T = 0;
    std::uint64_t seed = 0;
    std::string output;
    bool forced = false;
};

/// Parses and validates a run configuration. Fails with a ConfigError naming
/// λ > 4γ/ν when the triple does not satisfy it, unless `force`.
inline RunConfig parse_run_config(const json& raw, bool force = false, std::optional<std::uint64_t> seed_override = {}) {
    if (!raw.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    try {
        json canonical = raw;
        if (seed_override) {
            canonical["seed"] = *seed_override;
        }
        const OutputSpace space = parse_space(detail::require_field(canonical, "space"));
        const TargetLoss loss = parse_loss(detail::require_field(canonical, "loss"), space);
        const Regularizer reg = parse_regularizer(detail::require_field(canonical, "regularizer"), space);
        const int T = detail::get_or<int>(canonical, "T", 0);
        if (T < 0) throw ConfigError("T must be non-negative");
        const auto seed = detail::get_or<std::uint64_t>(canonical, "seed", 0);
        StreamSpec stream = parse_stream(detail::require_field(canonical, "stream"), space, T, seed);
        const ProblemConstants k = ProblemConstants::from(reg, loss, stream.C);
        bool forced = false;
        if (!k.gate()) {
            if (!force) k.require_gate();
            forced = true;
        }
        LearnerSpec learner = parse_learner(canonical.contains("learner") ? canonical.at("learner") : json("ogd_const"), k);
        std::string output = "out";
        if (canonical.contains("output")) {
            const json& o = canonical.at("output");
            output = o.is_string() ? o.get<std::string>() : detail::get_or<std::string>(o, "dir", "out");
        }
        return RunConfig{canonical, config_hash(canonical), Problem{space, loss, reg, learner, stream.C},
                         std::move(stream), T, seed, output, forced};
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    } catch (const CapacityError& e) {
        throw ConfigError(e.what());
    }
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config '" + path + "'");
    }
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("cannot parse '" + path + "': " + e.what());
    }
}

}  // namespace fyo

#endif
