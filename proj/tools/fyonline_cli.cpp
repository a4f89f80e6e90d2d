#include "fyonline/fyonline.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>

namespace fs = std::filesystem;
using fyo::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_violation = 1;
constexpr int exit_config = 2;

struct Options {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string format = "csv";
    bool force = false;
    int runs = 0;
    double delta = 0.1;
    std::string suite;
    long samples = 0;
    bool broken_tiebreak = false;
    double C = 1.0;
};

std::string records_json(const fyo::RegretTrace& trace) {
    json arr = json::array();
    for (const auto& r : trace.records) {
        arr.push_back({{"t", r.t},
                       {"target_realized", r.target_realized},
                       {"target_expected", r.target_expected},
                       {"surrogate_Wt", r.surrogate_w},
                       {"surrogate_U", r.surrogate_u},
                       {"grad_norm_sq", r.grad_norm_sq}});
    }
    return arr.dump(1) + "\n";
}

struct RunOutcome {
    fyo::RunConfig config;
    fyo::RegretTrace trace;
    json summary;
};

RunOutcome execute(const json& raw, const Options& opt, std::optional<std::uint64_t> seed) {
    fyo::RunConfig config = fyo::parse_run_config(raw, opt.force, seed);
    const fyo::StreamData data = fyo::materialize(config.stream, config.problem.space);
    fyo::RunOptions ro;
    ro.decode_seed = config.seed;
    ro.force = opt.force;
    fyo::RegretTrace trace = fyo::run(config.problem, data, ro);
    json summary = fyo::summary_json(config, trace);
    if (opt.runs > 0) {
        const fyo::HighProbabilityReport hp = fyo::high_prob_eval(config.problem, data, opt.runs, opt.delta, config.seed);
        summary["high_probability"] = {{"runs", hp.runs},       {"delta", hp.delta}, {"eta", hp.eta},
                                       {"quantile", hp.quantile}, {"bound", hp.bound}, {"unreliable", hp.unreliable}};
    }
    return {std::move(config), std::move(trace), std::move(summary)};
}

void write_outputs(const RunOutcome& o, const fs::path& dir, const std::string& stem, const std::string& format) {
    if (format == "json") {
        fyo::write_atomically(dir / (stem + ".trace.json"), records_json(o.trace));
    } else {
        fyo::write_atomically(dir / (stem + ".csv"), fyo::trace_csv(o.trace));
    }
    fyo::write_atomically(dir / (stem + ".summary.json"), o.summary.dump(2) + "\n");
}

int cmd_run(const Options& opt) {
    const json raw = fyo::load_json_file(opt.config);
    std::optional<std::uint64_t> seed;
    if (opt.seed_given) seed = opt.seed;
    RunOutcome o = execute(raw, opt, seed);
    const fs::path dir = opt.out.empty() ? fs::path(o.config.output) : fs::path(opt.out);
    write_outputs(o, dir, "trace", opt.format);
    const json& cum = o.summary["cumulative"];
    const json& bc = o.summary["bound_constants"];
    std::cout << "config " << o.config.hash << "  T=" << o.trace.records.size() << "  seed=" << o.config.seed << "\n";
    if (o.trace.forced) {
        std::cout << "warning: condition λ > 4γ/ν does not hold; run forced\n";
    }
    std::cout << "expected surrogate regret  " << fyo::format_double(cum["expected_regret"].get<double>()) << "\n";
    std::cout << "realized surrogate regret  " << fyo::format_double(cum["realized_regret"].get<double>()) << "\n";
    if (bc["theorem_bound"].is_number()) {
        std::cout << "theorem bound              " << fyo::format_double(bc["theorem_bound"].get<double>()) << "  ("
                  << bc["bound_form"].get<std::string>() << ")\n";
    }
    if (o.summary.contains("high_probability")) {
        const json& hp = o.summary["high_probability"];
        std::cout << "high-probability: " << hp["runs"] << " runs, quantile " << hp["quantile"] << " vs bound "
                  << hp["bound"] << (hp["unreliable"].get<bool>() ? " (warning: runs < 10/delta)" : "") << "\n";
    }
    std::cout << "outputs in " << dir.string() << "\n";
    if (!o.trace.violations.empty()) {
        for (const auto& v : o.trace.violations) {
            std::cerr << "violation at round " << v.t << ": " << v.what << " (slack " << v.slack << ")\n";
        }
        return exit_violation;
    }
    return exit_ok;
}

void print_suite(const fyo::SuiteResult& s) {
    for (const auto& p : s.properties) {
        std::cout << (p.passed ? "PASS  " : "FAIL  ") << p.name << "  [cases " << p.cases << ", worst slack "
                  << fyo::format_double(p.worst_slack) << "]\n";
        if (!p.passed) {
            std::cout << "      counterexample: " << p.counterexample << "\n";
        }
    }
    for (const auto& n : s.notes) {
        std::cout << "note  " << n << "\n";
    }
    std::cout << (s.passed() ? "suite " + s.suite + ": ok\n" : "suite " + s.suite + ": FAILED\n");
}

int cmd_verify(const Options& opt) {
    fyo::SuiteResult result;
    const std::uint64_t seed = opt.seed_given ? opt.seed : 0;
    if (opt.suite == "lemma1") {
        result = fyo::verify_lemma1(opt.samples > 0 ? opt.samples : 10000, seed + 1);
    } else if (opt.suite == "prop1") {
        result = fyo::verify_prop1(100, opt.samples > 0 ? opt.samples : 10000, seed + 2);
    } else if (opt.suite == "oracles") {
        result = fyo::verify_oracles(opt.samples > 0 ? opt.samples : 1000, seed + 3, opt.broken_tiebreak);
    } else if (opt.suite == "bounds") {
        result = fyo::verify_bounds(seed + 4);
    } else if (opt.suite == "adversary") {
        result = fyo::verify_adversary(opt.samples > 0 ? static_cast<int>(opt.samples) : 50);
    } else {
        std::cerr << "unknown suite '" << opt.suite << "' (lemma1|prop1|oracles|bounds|adversary)\n";
        return exit_config;
    }
    print_suite(result);
    return result.passed() ? exit_ok : exit_violation;
}

void set_path(json& j, const std::string& path, const json& value) {
    json* node = &j;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        if (!node->contains(key) || !(*node)[key].is_object()) {
            (*node)[key] = json::object();
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

int cmd_sweep(const Options& opt) {
    const json spec = fyo::load_json_file(opt.config);
    if (!spec.contains("base") || !spec["base"].is_object()) {
        throw fyo::ConfigError("sweep config needs a 'base' run config");
    }
    std::vector<json> configs{spec["base"]};
    if (spec.contains("grid")) {
        for (const auto& [path, values] : spec["grid"].items()) {
            if (!values.is_array() || values.empty()) {
                throw fyo::ConfigError("grid entry '" + path + "' must be a non-empty array");
            }
            std::vector<json> next;
            for (const json& c : configs) {
                for (const json& v : values) {
                    json copy = c;
                    set_path(copy, path, v);
                    next.push_back(std::move(copy));
                }
            }
            configs = std::move(next);
        }
    }
    // Validate everything up front so a bad grid point fails before any work.
    for (const json& c : configs) {
        fyo::parse_run_config(c, opt.force);
    }
    const fs::path dir = opt.out.empty() ? fs::path(spec["base"].value("output", std::string("out"))) : fs::path(opt.out);
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("FY_ONLINE_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) workers = std::min<unsigned>(workers, static_cast<unsigned>(cap));
    }
    workers = std::min<unsigned>(workers, static_cast<unsigned>(configs.size()));
    std::vector<json> index(configs.size());
    std::vector<int> codes(configs.size(), exit_ok);
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            char stem[32];
            std::snprintf(stem, sizeof stem, "run_%04zu", i);
            try {
                RunOutcome o = execute(configs[i], opt, std::nullopt);
                write_outputs(o, dir, stem, opt.format);
                index[i] = {{"run", stem},
                            {"config_hash", o.config.hash},
                            {"expected_regret", o.trace.expected_regret()},
                            {"violations", o.trace.violations.size()}};
                codes[i] = o.trace.violations.empty() ? exit_ok : exit_violation;
            } catch (const std::exception& e) {
                index[i] = {{"run", stem}, {"error", e.what()}};
                codes[i] = exit_violation;
            }
            std::lock_guard<std::mutex> lock(log_mutex);
            std::cout << stem << (codes[i] == exit_ok ? " ok" : " FAILED") << "\n";
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    fyo::write_atomically(dir / "sweep.json", json(index).dump(2) + "\n");
    return *std::max_element(codes.begin(), codes.end());
}

void print_constants_row(const std::string& label, const fyo::Problem& problem) {
    const fyo::ProblemConstants k = problem.constants();
    std::printf("%-44s %9.6f %9.6f %9.6f %5.2f %9.5f %10.6f %10.6f", label.c_str(), k.nu, k.gamma, k.scale * k.lambda,
                k.kappa, k.diameter, k.a(), k.b());
    if (k.gate()) {
        std::printf(" %10.6f %12.6f\n", k.default_eta(), k.expected_bound(1.0));
    } else {
        std::printf(" %10s %12s  (λ > 4γ/ν fails)\n", "-", "-");
    }
}

int cmd_constants(const Options& opt) {
    std::printf("%-44s %9s %9s %9s %5s %9s %10s %10s %10s %12s\n", "triple", "nu", "gamma", "lambda", "kappa", "D", "a",
                "b", "eta", "bound/|U|^2");
    if (!opt.config.empty()) {
        fyo::RunConfig config = fyo::parse_run_config(fyo::load_json_file(opt.config), true);
        print_constants_row(config.problem.space.name() + "/" + config.problem.loss.name() + "/" +
                                config.problem.reg.name(),
                            config.problem);
        return exit_ok;
    }
    auto row = [&](const std::string& label, const fyo::OutputSpace& s, const std::string& loss, const fyo::Regularizer& r) {
        print_constants_row(label, fyo::Problem{s, fyo::TargetLoss::builtin(s, loss), r, fyo::OgdConstant{}, opt.C});
    };
    for (int d : {2, 10}) {
        auto s = fyo::OutputSpace::simplex(d);
        row("simplex(" + std::to_string(d) + ")/zero_one/entropy base 2", s, "zero_one",
            fyo::Regularizer::entropy_simplex(s, true));
        row("simplex(" + std::to_string(d) + ")/zero_one/entropy base e", s, "zero_one",
            fyo::Regularizer::entropy_simplex(s, false));
    }
    for (int d : {16, 17, 25}) {
        auto s = fyo::OutputSpace::hypercube(d);
        row("hypercube(" + std::to_string(d) + ")/hamming/squared_l2", s, "hamming", fyo::Regularizer::squared_l2(s));
    }
    for (double mu : {1.0, 2.0}) {
        auto s = fyo::OutputSpace::birkhoff(3);
        row("birkhoff(3)/rank_mismatch/entropy mu=" + fyo::format_double(mu), s, "rank_mismatch",
            fyo::Regularizer::scaled_entropy_birkhoff(s, mu));
    }
    for (int d : {3, 6}) {
        auto s = fyo::OutputSpace::permutahedron(d);
        row("permutahedron(" + std::to_string(d) + ")/align/squared_l2", s, "permutahedron_align",
            fyo::Regularizer::squared_l2(s));
    }
    auto chain = fyo::OutputSpace::ordinal_chain(25);
    row("ordinal_chain(25)/absolute/squared_l2", chain, "ordinal_absolute", fyo::Regularizer::squared_l2(chain));
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Online structured prediction with Fenchel-Young losses and randomized decoding"};
    app.require_subcommand(1);
    Options opt;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", opt.seed, "64-bit seed override")->each([&](const std::string&) { opt.seed_given = true; });
        sub->add_flag("--force", opt.force, "run even when λ > 4γ/ν fails");
    };

    CLI::App* run = app.add_subcommand("run", "run one experiment config");
    run->add_option("--config", opt.config, "run config (JSON)")->required();
    run->add_option("--out", opt.out, "output directory (overrides the config)");
    run->add_option("--format", opt.format, "trace format")->check(CLI::IsMember({"csv", "json"}));
    run->add_option("--runs", opt.runs, "decode seeds for the high-probability evaluation");
    run->add_option("--delta", opt.delta, "confidence level of the high-probability evaluation");
    add_common(run);

    CLI::App* verify = app.add_subcommand("verify", "run a property suite");
    verify->add_option("suite", opt.suite, "lemma1|prop1|oracles|bounds|adversary")->required();
    verify->add_option("--samples", opt.samples, "sample count override");
    verify->add_flag("--inject-broken-tiebreak", opt.broken_tiebreak)->group("");
    add_common(verify);

    CLI::App* sweep = app.add_subcommand("sweep", "run a grid of configs in parallel");
    sweep->add_option("--config", opt.config, "sweep spec {base, grid}")->required();
    sweep->add_option("--out", opt.out, "output directory");
    sweep->add_option("--format", opt.format, "trace format")->check(CLI::IsMember({"csv", "json"}));
    sweep->add_flag("--force", opt.force, "run even when λ > 4γ/ν fails");

    CLI::App* constants = app.add_subcommand("constants", "print problem constants");
    constants->add_option("--config", opt.config, "config whose triple to evaluate (default: built-in table)");
    constants->add_option("--C", opt.C, "input norm bound for the built-in table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }
    try {
        if (run->parsed()) return cmd_run(opt);
        if (verify->parsed()) return cmd_verify(opt);
        if (sweep->parsed()) return cmd_sweep(opt);
        if (constants->parsed()) return cmd_constants(opt);
    } catch (const fyo::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_violation;
    }
    return exit_ok;
}
