#ifndef FYONLINE_TRACE_IO_HPP
#define FYONLINE_TRACE_IO_HPP

#include "config.hpp"
#include "harness.hpp"
#include "learners.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>

namespace fyo {

/// Shortest-safe decimal with 17 significant digits, '.' separator, no locale.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

inline std::string trace_csv(const RegretTrace& trace) {
    std::string out = "t,target_realized,target_expected,surrogate_Wt,surrogate_U,grad_norm_sq\n";
    for (const RoundRecord& r : trace.records) {
        out += std::to_string(r.t);
        for (double v : {r.target_realized, r.target_expected, r.surrogate_w, r.surrogate_u, r.grad_norm_sq}) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

/// Writes via a temporary file in the same directory and renames it into place.
inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write '" + tmp.string() + "'");
        }
        out << content;
        if (!out.flush()) {
            throw Error("write failed for '" + tmp.string() + "'");
        }
    }
    std::filesystem::rename(tmp, path);
}

inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json certificate_json(const RegretCertificate& c) {
    return {{"form", c.form},
            {"realized", c.realized},
            {"bound", finite_or_null(c.bound)},
            {"gap_budget", c.gap_budget},
            {"slack", finite_or_null(c.slack)},
            {"violated", c.violated}};
}

/// Constants and the theorem bound that applies to the run's learner.
inline json bound_constants(const Problem& problem, const RegretTrace& trace) {
    const ProblemConstants k = problem.constants();
    json j = {{"nu", k.nu},       {"gamma", k.gamma}, {"lambda", k.lambda}, {"kappa", k.kappa},
              {"D", k.diameter},  {"C", k.C},         {"loss_scale", k.scale}, {"a", k.a()},
              {"b", k.b()},       {"m", k.m()},       {"gate", k.gate()},   {"u_norm_sq", trace.u_norm_sq}};
    if (const auto* c = std::get_if<OgdConstant>(&trace.learner)) {
        j["eta"] = c->eta;
        if (k.gate()) {
            const double eta_default = k.default_eta();
            j["default_eta"] = eta_default;
            j["bound_per_unit_norm"] = k.expected_bound(1.0);
            if (std::abs(c->eta - eta_default) <= 1e-15 * eta_default) {
                j["theorem_bound"] = k.expected_bound(trace.u_norm_sq);
                j["bound_form"] = "expected regret, constant-rate OGD";
            } else if (std::abs(c->eta - k.high_probability_eta()) <= 1e-15 * c->eta) {
                j["theorem_bound"] = k.high_probability_bound(trace.u_norm_sq, 0.1);
                j["bound_form"] = "high-probability regret (delta = 0.1)";
            }
        }
    } else if (const auto* a = std::get_if<OgdAdaptive>(&trace.learner)) {
        j["B"] = a->B;
        if (k.gate()) {
            j["theorem_bound"] = k.adaptive_bound(a->B);
            j["bound_form"] = "expected regret, adaptive OGD";
        }
    } else {
        j["epsilon"] = std::get<ParameterFree>(trace.learner).epsilon;
    }
    if (!j.contains("theorem_bound")) {
        j["theorem_bound"] = nullptr;
    }
    return j;
}

inline json summary_json(const RunConfig& config, const RegretTrace& trace) {
    json violations = json::array();
    for (const Violation& v : trace.violations) {
        violations.push_back({{"t", v.t}, {"what", v.what}, {"slack", v.slack}});
    }
    json summary = {
        {"config_hash", config.hash},
        {"seed", config.seed},
        {"T", trace.records.size()},
        {"forced", trace.forced},
        {"comparator", trace.comparator_planted ? "planted" : "candidate"},
        {"cumulative",
         {{"target_realized", trace.cum_target_realized},
          {"target_expected", trace.cum_target_expected},
          {"surrogate_Wt", trace.cum_surrogate_w},
          {"surrogate_U", trace.cum_surrogate_u},
          {"surrogate_zero", trace.cum_surrogate_zero},
          {"expected_regret", trace.expected_regret()},
          {"realized_regret", trace.realized_regret()}}},
        {"bound_constants", bound_constants(config.problem, trace)},
        {"certificates", {{"comparator", certificate_json(trace.certificate_u)}, {"zero", certificate_json(trace.certificate_zero)}}},
        {"violations", violations}};
    return summary;
}

}  // namespace fyo

#endif
