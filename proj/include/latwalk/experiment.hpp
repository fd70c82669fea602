#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "latwalk/fractal.hpp"
#include "latwalk/markov.hpp"

namespace latwalk {

inline constexpr const char* kConfigSchema = "latwalk.config/1";
inline constexpr const char* kResultsSchema = "latwalk.results/1";

enum class ExperimentKind { Lyapunov, ExpansionCheck, WalkEquidistribution, FractalDioph, MagicFormula, RenewalIdentity };

std::string to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_kind(const std::string& text);

struct ExperimentConfig {
    std::string schema = kConfigSchema;
    ExperimentKind kind = ExperimentKind::Lyapunov;
    std::uint64_t seed = 0;
    std::size_t replicas = 1;
    /// Replica ids run are replica_offset .. replica_offset + replicas - 1, so
    /// two runs with disjoint id ranges merge into one larger run.
    std::size_t replica_offset = 0;
    std::size_t steps = 0;
    std::string preset;
    std::optional<ChainSpec> chain;
    std::optional<GDIFS> gdifs;
    nlohmann::json observables = nlohmann::json::object();
    nlohmann::json thresholds = nlohmann::json::object();
};

struct ConfigCheck {
    std::optional<ExperimentConfig> config;
    std::vector<std::string> errors;  // field paths, aggregated
    bool ok() const { return errors.empty() && config.has_value(); }
};

ConfigCheck validate_config(const std::filesystem::path& path);
ConfigCheck validate_config_json(const nlohmann::json& j);
/// Canonical JSON of a validated config (presets expanded).
nlohmann::json normalized_json(const ExperimentConfig& config);

/// Chain JSON: {"states": [...], "transition": [[P(i -> j)]...] (rows sum to
/// 1), "coding": [matrix...], "start": [...]?}. I.i.d. JSON: {"elements":
/// [matrix...], "weights": [...]}.
ChainSpec chain_from_json(const nlohmann::json& j, const std::string& path, std::vector<std::string>& errors);
ChainSpec iid_from_json(const nlohmann::json& j, const std::string& path, std::vector<std::string>& errors);
nlohmann::json chain_to_json(const ChainSpec& chain);
Mat matrix_from_json(const nlohmann::json& j, const std::string& path, std::vector<std::string>& errors);
nlohmann::json matrix_to_json(const Mat& m);

struct Preset {
    std::string name;
    std::string description;
    /// One of {"chain": ...}, {"iid": ...}, {"gdifs": ...}.
    nlohmann::json source;
};

const std::vector<Preset>& builtin_presets();
const Preset* find_preset(const std::string& name);

struct Check {
    std::string name;
    double value = 0.0;
    std::string limit;
    bool pass = false;
};

struct ResultBundle {
    nlohmann::json results = nlohmann::json::object();
    std::vector<Check> checks;
    /// file stem -> (step, value) rows
    std::map<std::string, std::vector<std::pair<double, double>>> series;
    bool pass() const;
};

/// Deterministic given (config, seed).
ResultBundle run_experiment(const ExperimentConfig& config);

/// Rounds every floating value to 12 significant digits.
nlohmann::json round_significant(const nlohmann::json& j, int digits = 12);

/// results.json plus one CSV per series.
void write_bundle(const ExperimentConfig& config, const ResultBundle& bundle, const std::filesystem::path& out_dir);
/// Structured record for a runtime alarm.
void write_alarm(const ExperimentConfig& config, const std::string& kind, const std::string& message,
                 const std::filesystem::path& out_dir);

/// Plain-text summary of results.json and the CSV files in a directory.
std::string render_report(const std::filesystem::path& out_dir);

}  // namespace latwalk
