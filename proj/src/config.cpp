#include <cmath>
#include <fstream>
#include <sstream>

#include "latwalk/error.hpp"
#include "latwalk/expansion.hpp"
#include "latwalk/experiment.hpp"
#include "latwalk/groups.hpp"

namespace latwalk {

using json = nlohmann::json;

namespace {

constexpr double kDetTol = 1e-8;

const std::vector<std::pair<ExperimentKind, const char*>> kKindNames{
    {ExperimentKind::Lyapunov, "lyapunov"},
    {ExperimentKind::ExpansionCheck, "expansion_check"},
    {ExperimentKind::WalkEquidistribution, "walk_equidistribution"},
    {ExperimentKind::FractalDioph, "fractal_dioph"},
    {ExperimentKind::MagicFormula, "magic_formula"},
    {ExperimentKind::RenewalIdentity, "renewal_identity"},
};

}  // namespace

std::string to_string(ExperimentKind kind) {
    for (const auto& [k, name] : kKindNames)
        if (k == kind) return name;
    return "unknown";
}

std::optional<ExperimentKind> parse_kind(const std::string& text) {
    for (const auto& [k, name] : kKindNames)
        if (text == name) return k;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// matrices and chains

Mat matrix_from_json(const json& j, const std::string& path, std::vector<std::string>& errors) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) {
        errors.push_back(path + ": expected a matrix (list of rows)");
        return Mat();
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            errors.push_back(path + "[" + std::to_string(r) + "]: ragged row");
            return Mat();
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            if (!row[static_cast<std::size_t>(c)].is_number()) {
                errors.push_back(path + "[" + std::to_string(r) + "][" + std::to_string(c) + "]: not a number");
                return Mat();
            }
            m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
    }
    return m;
}

json matrix_to_json(const Mat& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

namespace {

void check_unimodular(const Mat& m, const std::string& path, std::vector<std::string>& errors) {
    if (m.size() == 0) return;
    if (m.rows() != m.cols()) {
        errors.push_back(path + ": matrix must be square");
        return;
    }
    const double det = m.determinant();
    if (!std::isfinite(det) || std::abs(std::abs(det) - 1.0) > kDetTol)
        errors.push_back(path + ": |det| = " + std::to_string(std::abs(det)) + ", expected 1");
}

std::vector<double> number_list(const json& j, const std::string& path, std::vector<std::string>& errors) {
    std::vector<double> out;
    if (!j.is_array()) {
        errors.push_back(path + ": expected a list of numbers");
        return out;
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) {
            errors.push_back(path + "[" + std::to_string(i) + "]: not a number");
            continue;
        }
        out.push_back(j[i].get<double>());
    }
    return out;
}

void check_codings(const std::vector<Mat>& coding, const std::string& path, std::vector<std::string>& errors) {
    for (std::size_t i = 0; i < coding.size(); ++i) {
        check_unimodular(coding[i], path + "[" + std::to_string(i) + "]", errors);
        if (coding[i].rows() != coding.front().rows())
            errors.push_back(path + "[" + std::to_string(i) + "]: all matrices must have one size");
    }
}

}  // namespace

ChainSpec chain_from_json(const json& j, const std::string& path, std::vector<std::string>& errors) {
    ChainSpec c;
    if (!j.is_object()) {
        errors.push_back(path + ": expected an object");
        return c;
    }
    if (!j.contains("transition")) {
        errors.push_back(path + ".transition: missing");
        return c;
    }
    const Mat rows = matrix_from_json(j["transition"], path + ".transition", errors);
    const auto n = rows.rows();
    if (rows.size() && rows.cols() != n) {
        errors.push_back(path + ".transition: must be square");
        return c;
    }
    if (j.contains("states")) {
        for (const auto& s : j["states"]) c.labels.push_back(s.is_string() ? s.get<std::string>() : s.dump());
        if (static_cast<Eigen::Index>(c.labels.size()) != n) errors.push_back(path + ".states: need one name per row");
    } else {
        for (Eigen::Index i = 0; i < n; ++i) c.labels.push_back("s" + std::to_string(i));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::string name = i < static_cast<Eigen::Index>(c.labels.size()) ? c.labels[static_cast<std::size_t>(i)]
                                                                                : "#" + std::to_string(i);
        if ((rows.row(i).array() < 0.0).any())
            errors.push_back(path + ".transition[" + std::to_string(i) + "]: negative probability out of state '" + name + "'");
        const double sum = rows.row(i).sum();
        if (std::abs(sum - 1.0) > 1e-12) {
            std::ostringstream msg;
            msg.precision(12);
            msg << path << ".transition[" << i << "]: transitions out of state '" << name << "' sum to " << sum;
            errors.push_back(msg.str());
        }
    }
    c.trans = rows.transpose();
    if (!j.contains("coding") || !j["coding"].is_array() || static_cast<Eigen::Index>(j["coding"].size()) != n) {
        errors.push_back(path + ".coding: need one matrix per state");
    } else {
        for (std::size_t i = 0; i < j["coding"].size(); ++i)
            c.coding.push_back(matrix_from_json(j["coding"][i], path + ".coding[" + std::to_string(i) + "]", errors));
        check_codings(c.coding, path + ".coding", errors);
    }
    if (j.contains("start")) {
        const auto start = number_list(j["start"], path + ".start", errors);
        c.start = Eigen::Map<const Vec>(start.data(), static_cast<Eigen::Index>(start.size()));
        if (c.start.size() != n || std::abs(c.start.sum() - 1.0) > 1e-9 || (c.start.array() < 0.0).any())
            errors.push_back(path + ".start: must be a probability vector over the states");
    } else {
        c.start = Vec::Constant(n, n ? 1.0 / static_cast<double>(n) : 0.0);
    }
    return c;
}

ChainSpec iid_from_json(const json& j, const std::string& path, std::vector<std::string>& errors) {
    if (!j.is_object() || !j.contains("elements") || !j["elements"].is_array() || j["elements"].empty()) {
        errors.push_back(path + ".elements: expected a nonempty list of matrices");
        return ChainSpec{};
    }
    std::vector<Mat> elements;
    for (std::size_t i = 0; i < j["elements"].size(); ++i)
        elements.push_back(matrix_from_json(j["elements"][i], path + ".elements[" + std::to_string(i) + "]", errors));
    check_codings(elements, path + ".elements", errors);
    std::vector<double> weights(elements.size(), 1.0);
    if (j.contains("weights")) weights = number_list(j["weights"], path + ".weights", errors);
    if (weights.size() != elements.size()) {
        errors.push_back(path + ".weights: need one weight per element");
        return ChainSpec{};
    }
    for (std::size_t i = 0; i < weights.size(); ++i)
        if (!(weights[i] > 0.0)) errors.push_back(path + ".weights[" + std::to_string(i) + "]: must be positive");
    if (!errors.empty()) return ChainSpec{};
    return ChainSpec::iid(std::move(elements), std::move(weights));
}

json chain_to_json(const ChainSpec& chain) {
    json coding = json::array();
    for (const auto& g : chain.coding) coding.push_back(matrix_to_json(g));
    return json{{"states", chain.labels},
                {"transition", matrix_to_json(chain.trans.transpose())},
                {"coding", coding},
                {"start", std::vector<double>(chain.start.data(), chain.start.data() + chain.start.size())}};
}

// ---------------------------------------------------------------------------
// presets

namespace {

json two_state_chain(const Mat& ga, const Mat& gb) {
    return json{{"states", {"a", "b"}},
                {"transition", {{0.0, 1.0}, {0.5, 0.5}}},
                {"coding", {matrix_to_json(ga), matrix_to_json(gb)}}};
}

std::vector<Preset> make_presets() {
    std::vector<Preset> out;
    const auto sl3 = sl3_paper_example();
    out.push_back({"sl3-paper-example",
                   "i.i.d. uniform law on diag(3,2,1/6) and its two unipotent perturbations in SL_3",
                   json{{"iid", {{"elements", {matrix_to_json(sl3[0]), matrix_to_json(sl3[1]), matrix_to_json(sl3[2])}},
                                 {"weights", {1.0, 1.0, 1.0}}}}}});
    {
        const Mat one = Mat::Identity(1, 1);
        Vec y0(1), y1(1);
        y0 << 0.0;
        y1 << 1.0;
        out.push_back({"cor14-two-state",
                       "two-state chain a -> b, b -> a|b (b universally accessible) coding [[2,0],[0,1/2]] and "
                       "[[3,1],[0,1/3]] in SL_2",
                       json{{"chain", two_state_chain(make_block_element(2.0, one, y0), make_block_element(3.0, one, y1))}}});
    }
    {
        Mat ga = Mat::Zero(2, 2), gb = Mat::Zero(2, 2);
        ga.diagonal() << std::exp(1.0), std::exp(-1.0);
        gb.diagonal() << std::exp(-0.2), std::exp(0.2);
        out.push_back({"renewal-two-state",
                       "the two-state chain of cor14-two-state with flow times t(a) = 1, t(b) = -0.2",
                       json{{"chain", two_state_chain(ga, gb)}}});
    }
    {
        Mat d = Mat::Zero(2, 2);
        d.diagonal() << 2.0, 0.5;
        out.push_back({"diag-2", "Dirac mass at diag(2,1/2)", json{{"iid", {{"elements", {matrix_to_json(d)}}}}}});
        Mat e = Mat::Zero(2, 2);
        e.diagonal() << 0.5, 2.0;
        out.push_back({"symmetric-diag-mixture", "(delta_diag(2,1/2) + delta_diag(1/2,2)) / 2",
                       json{{"iid", {{"elements", {matrix_to_json(d), matrix_to_json(e)}}, {"weights", {0.5, 0.5}}}}}});
        out.push_back({"identity-2", "Dirac mass at the 2x2 identity",
                       json{{"iid", {{"elements", {matrix_to_json(Mat::Identity(2, 2))}}}}}});
    }
    out.push_back({"cantor-third", "middle-third Cantor set: x/3 and x/3 + 2/3 on one vertex",
                   json{{"gdifs",
                         {{"m_dim", 1},
                          {"n_dim", 1},
                          {"vertices", {"v"}},
                          {"edges",
                           {{{"id", "0"}, {"from", "v"}, {"to", "v"}, {"ratio", 1.0 / 3.0}, {"translation", 0.0}},
                            {{"id", "1"}, {"from", "v"}, {"to", "v"}, {"ratio", 1.0 / 3.0}, {"translation", 2.0 / 3.0}}}},
                          {"boxes", {{{"lower", 0.0}, {"upper", 1.0}}}}}}}});
    out.push_back({"two-vertex-golden",
                   "vertices u, v with edges u->v, v->u, v->v of ratio 1/2 (dimension log2 of the golden ratio)",
                   json{{"gdifs",
                         {{"m_dim", 1},
                          {"n_dim", 1},
                          {"vertices", {"u", "v"}},
                          {"edges",
                           {{{"id", "uv"}, {"from", "u"}, {"to", "v"}, {"ratio", 0.5}, {"translation", 0.0}},
                            {{"id", "vu"}, {"from", "v"}, {"to", "u"}, {"ratio", 0.5}, {"translation", 0.5}},
                            {{"id", "vv"}, {"from", "v"}, {"to", "v"}, {"ratio", 0.5}, {"translation", 0.0}}}}}}}});
    return out;
}

}  // namespace

const std::vector<Preset>& builtin_presets() {
    static const std::vector<Preset> presets = make_presets();
    return presets;
}

const Preset* find_preset(const std::string& name) {
    for (const auto& p : builtin_presets())
        if (p.name == name) return &p;
    return nullptr;
}

// ---------------------------------------------------------------------------
// config validation

namespace {

void load_source(const json& src, const std::string& path, ExperimentConfig& cfg, std::vector<std::string>& errors) {
    if (src.contains("chain")) {
        cfg.chain = chain_from_json(src["chain"], path + "chain", errors);
    } else if (src.contains("iid")) {
        cfg.chain = iid_from_json(src["iid"], path + "iid", errors);
    } else if (src.contains("gdifs")) {
        try {
            cfg.gdifs = gdifs_from_json(src["gdifs"]);
        } catch (const Error& e) {
            errors.push_back(e.what());
        } catch (const json::exception& e) {
            errors.push_back(path + "gdifs: " + e.what());
        }
    }
    if (cfg.chain && errors.empty()) {
        try {
            const auto report = validate_chain(*cfg.chain);
            if (!report.irreducible) errors.push_back(path + "chain: transition graph is not irreducible");
        } catch (const Error& e) {
            errors.push_back(path + e.what());
        }
    }
}

std::size_t read_count(const json& j, const char* key, std::size_t fallback, std::vector<std::string>& errors) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_unsigned() && !(j[key].is_number_integer() && j[key].get<long long>() >= 0)) {
        errors.push_back(std::string(key) + ": expected a nonnegative integer");
        return fallback;
    }
    return j[key].get<std::size_t>();
}

void kind_checks(const ExperimentConfig& cfg, std::vector<std::string>& errors) {
    const bool has_chain = cfg.chain.has_value();
    const bool has_gdifs = cfg.gdifs.has_value();
    const auto& obs = cfg.observables;
    switch (cfg.kind) {
        case ExperimentKind::Lyapunov:
        case ExperimentKind::ExpansionCheck:
        case ExperimentKind::WalkEquidistribution:
        case ExperimentKind::RenewalIdentity:
            if (!has_chain) errors.push_back("source: this kind needs a chain, i.i.d. law or chain preset");
            if (cfg.steps == 0) errors.push_back("steps: must be positive");
            break;
        case ExperimentKind::FractalDioph:
            if (!has_gdifs && !obs.contains("alphas"))
                errors.push_back("source: fractal_dioph needs a gdifs (or preset) or observables.alphas");
            break;
        case ExperimentKind::MagicFormula:
            if (!has_gdifs) errors.push_back("source: magic_formula needs a gdifs or gdifs preset");
            break;
    }
    if (obs.contains("representation")) {
        try {
            (void)Representation::parse(obs["representation"].get<std::string>());
        } catch (const std::exception&) {
            errors.push_back("observables.representation: expected standard, adjoint or wedge:k");
        }
    }
    if (cfg.kind == ExperimentKind::WalkEquidistribution && has_chain) {
        if (cfg.steps * std::max<std::size_t>(1, cfg.replicas) < 10'000)
            errors.push_back("steps: walk_equidistribution needs at least 10000 steps in total");
        if (obs.contains("x0")) {
            std::vector<std::string> local;
            const Mat x0 = matrix_from_json(obs["x0"], "observables.x0", local);
            check_unimodular(x0, "observables.x0", local);
            if (local.empty() && x0.rows() != cfg.chain->dim()) local.push_back("observables.x0: dimension mismatch");
            errors.insert(errors.end(), local.begin(), local.end());
        }
    }
    if (cfg.kind == ExperimentKind::RenewalIdentity && has_chain && obs.contains("anchor")) {
        const auto& labels = cfg.chain->labels;
        const auto anchor = obs["anchor"].is_string() ? obs["anchor"].get<std::string>() : obs["anchor"].dump();
        if (std::find(labels.begin(), labels.end(), anchor) == labels.end())
            errors.push_back("observables.anchor: unknown state '" + anchor + "'");
    }
    if (obs.contains("alphas")) {
        if (!obs["alphas"].is_array()) {
            errors.push_back("observables.alphas: expected a list");
        } else {
            for (std::size_t i = 0; i < obs["alphas"].size(); ++i) {
                const auto& a = obs["alphas"][i];
                const json v = a.is_object() ? a.value("value", json()) : a;
                if (v.is_number()) continue;
                try {
                    (void)parse_real(v.get<std::string>());
                } catch (const std::exception&) {
                    errors.push_back("observables.alphas[" + std::to_string(i) + "]: expected a number, decimal string or \"golden\"");
                }
            }
        }
    }
}

}  // namespace

ConfigCheck validate_config_json(const json& j) {
    ConfigCheck out;
    auto& errors = out.errors;
    if (!j.is_object()) {
        errors.push_back("config: expected a JSON object");
        return out;
    }
    ExperimentConfig cfg;
    if (!j.contains("schema"))
        errors.push_back("schema: missing (expected \"" + std::string(kConfigSchema) + "\")");
    else if (j["schema"] != kConfigSchema)
        errors.push_back("schema: unsupported version " + j["schema"].dump());
    if (!j.contains("kind") || !j["kind"].is_string() || !parse_kind(j["kind"].get<std::string>()))
        errors.push_back("kind: expected one of lyapunov, expansion_check, walk_equidistribution, fractal_dioph, "
                         "magic_formula, renewal_identity");
    else
        cfg.kind = *parse_kind(j["kind"].get<std::string>());
    if (!j.contains("seed"))
        errors.push_back("seed: mandatory");
    else if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0))
        errors.push_back("seed: expected a nonnegative 64-bit integer");
    else
        cfg.seed = j["seed"].get<std::uint64_t>();
    cfg.replicas = read_count(j, "replicas", 1, errors);
    if (cfg.replicas == 0) errors.push_back("replicas: must be positive");
    cfg.replica_offset = read_count(j, "replica_offset", 0, errors);
    cfg.steps = read_count(j, "steps", 0, errors);

    int sources = 0;
    for (const char* key : {"preset", "chain", "iid", "gdifs"}) sources += j.contains(key);
    if (sources > 1) errors.push_back("source: give exactly one of preset, chain, iid, gdifs");
    if (j.contains("preset")) {
        cfg.preset = j["preset"].is_string() ? j["preset"].get<std::string>() : "";
        const Preset* p = find_preset(cfg.preset);
        if (!p)
            errors.push_back("preset: unknown preset " + j["preset"].dump());
        else
            load_source(p->source, "preset " + cfg.preset + ": ", cfg, errors);
    } else {
        load_source(j, "", cfg, errors);
        if (j.contains("expanded_from") && j["expanded_from"].is_string()) cfg.preset = j["expanded_from"].get<std::string>();
    }
    if (j.contains("observables")) {
        if (!j["observables"].is_object())
            errors.push_back("observables: expected an object");
        else
            cfg.observables = j["observables"];
    }
    if (j.contains("thresholds")) {
        if (!j["thresholds"].is_object())
            errors.push_back("thresholds: expected an object");
        else
            cfg.thresholds = j["thresholds"];
    }
    kind_checks(cfg, errors);
    if (errors.empty()) out.config = std::move(cfg);
    return out;
}

ConfigCheck validate_config(const std::filesystem::path& path) {
    ConfigCheck out;
    std::ifstream in(path);
    if (!in) {
        out.errors.push_back(path.string() + ": cannot open file");
        return out;
    }
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        // locate the byte offset as line:column
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        out.errors.push_back(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) +
                             ": parse error: " + e.what());
        return out;
    }
    return validate_config_json(j);
}

json normalized_json(const ExperimentConfig& cfg) {
    json j{{"schema", cfg.schema},
           {"kind", to_string(cfg.kind)},
           {"seed", cfg.seed},
           {"replicas", cfg.replicas},
           {"replica_offset", cfg.replica_offset},
           {"steps", cfg.steps},
           {"observables", cfg.observables},
           {"thresholds", cfg.thresholds}};
    // the expanded source replaces the preset, so the output validates again
    if (!cfg.preset.empty()) j["expanded_from"] = cfg.preset;
    if (cfg.chain) j["chain"] = chain_to_json(*cfg.chain);
    if (cfg.gdifs) j["gdifs"] = gdifs_to_json(*cfg.gdifs);
    return j;
}

}  // namespace latwalk
