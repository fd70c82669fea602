// Command-line runner: validate, run, presets, report.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "latwalk/error.hpp"
#include "latwalk/experiment.hpp"

namespace {

using latwalk::ExperimentConfig;
using json = nlohmann::json;

constexpr int kExitPass = 0;
constexpr int kExitValidation = 1;
constexpr int kExitAlarm = 2;
constexpr int kExitThreshold = 3;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicas;
};

std::optional<ExperimentConfig> load(const std::string& path, const Overrides& ov) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << path << ": cannot open file\n";
        return std::nullopt;
    }
    auto check = latwalk::validate_config(path);
    if (!check.errors.empty() && (ov.seed || ov.replicas)) {
        // re-validate with overrides applied, in case they fill a missing field
        try {
            json j = json::parse(in);
            if (ov.seed) j["seed"] = *ov.seed;
            if (ov.replicas) j["replicas"] = *ov.replicas;
            check = latwalk::validate_config_json(j);
        } catch (const json::exception&) {
        }
    }
    if (!check.ok()) {
        for (const auto& e : check.errors) std::cerr << "error: " << e << "\n";
        return std::nullopt;
    }
    auto cfg = *check.config;
    if (ov.seed) cfg.seed = *ov.seed;
    if (ov.replicas) cfg.replicas = *ov.replicas;
    return cfg;
}

int cmd_validate(const std::string& path, const Overrides& ov) {
    const auto cfg = load(path, ov);
    if (!cfg) return kExitValidation;
    std::cout << latwalk::normalized_json(*cfg).dump(2) << "\n";
    return kExitPass;
}

int cmd_run(const std::string& path, const Overrides& ov, const std::string& out_dir) {
    const auto cfg = load(path, ov);
    if (!cfg) return kExitValidation;
    latwalk::ResultBundle bundle;
    try {
        bundle = latwalk::run_experiment(*cfg);
    } catch (const latwalk::Error& e) {
        latwalk::write_alarm(*cfg, latwalk::to_string(e.kind()), e.what(), out_dir);
        std::cerr << "alarm (" << latwalk::to_string(e.kind()) << "): " << e.what() << "\n";
        return kExitAlarm;
    }
    latwalk::write_bundle(*cfg, bundle, out_dir);
    for (const auto& c : bundle.checks)
        std::cout << (c.pass ? "pass " : "FAIL ") << c.name << " = " << c.value << " (" << c.limit << ")\n";
    std::cout << (bundle.pass() ? "all thresholds pass" : "threshold failure") << "; results in " << out_dir << "\n";
    return bundle.pass() ? kExitPass : kExitThreshold;
}

int cmd_presets(bool as_json) {
    if (as_json) {
        json out = json::array();
        for (const auto& p : latwalk::builtin_presets())
            out.push_back({{"name", p.name}, {"description", p.description}, {"source", p.source}});
        std::cout << out.dump(2) << "\n";
        return kExitPass;
    }
    for (const auto& p : latwalk::builtin_presets()) std::cout << p.name << "\n    " << p.description << "\n";
    return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"latwalk: random walks on the space of unimodular lattices"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir = "out";
    Overrides ov;
    std::uint64_t seed = 0;
    std::size_t replicas = 0;
    bool presets_json = false;

    auto* validate = app.add_subcommand("validate", "check a config and print its normalized form");
    validate->add_option("--config,config", config, "config JSON")->required();

    auto* run = app.add_subcommand("run", "run an experiment and write results.json plus CSV series");
    run->add_option("--config,config", config, "config JSON")->required();
    run->add_option("--out-dir", out_dir, "output directory")->capture_default_str();

    for (auto* sub : {validate, run}) {
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--replicas", replicas, "override the replica count")->check(CLI::PositiveNumber);
    }

    auto* presets = app.add_subcommand("presets", "list built-in presets");
    presets->add_flag("--json", presets_json, "print preset definitions as JSON");

    auto* report = app.add_subcommand("report", "summarize results.json and CSV series in a directory");
    report->add_option("--out-dir,dir", out_dir, "results directory")->required();

    CLI11_PARSE(app, argc, argv);

    for (auto* sub : {validate, run}) {
        if (sub->count("--seed")) ov.seed = seed;
        if (sub->count("--replicas")) ov.replicas = replicas;
    }

    try {
        if (*validate) return cmd_validate(config, ov);
        if (*run) return cmd_run(config, ov, out_dir);
        if (*presets) return cmd_presets(presets_json);
        if (*report) {
            std::cout << latwalk::render_report(out_dir);
            return kExitPass;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitPass;
}
