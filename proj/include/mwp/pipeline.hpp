#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mwp/analysis.hpp"
#include "mwp/corpus.hpp"
#include "mwp/csv.hpp"
#include "mwp/features.hpp"
#include "mwp/learn.hpp"
#include "mwp/scoring.hpp"

namespace mwp {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunConfig {
    std::string train_corpus;
    std::string test_corpus;
    std::map<std::string, std::string> attempts;  // model id -> path
    std::string sidecar;                          // optional
    std::string tokenizer_profile;                // optional
    SegmentationMode segmentation_mode = SegmentationMode::GreedySubword;
    bool coref_fallback = false;

    int min_attempts = 5;

    double prune_threshold = 0.5;
    bool oversample_on = true;
    bool scale_on = true;

    std::vector<std::string> classifiers = {"logistic", "tree", "forest"};
    int search_budget = 0;  // 0: use default hyperparameters, no search

    std::vector<std::string> ablation_subsets = {"L", "M", "W", "L+M", "L+W", "M+W", "L+M+W"};
    int cluster_k = 100;
    int min_cluster_size = 10;
    int threshold_grid = 50;
    int threshold_min_side = 20;
    int eval_seeds = 5;

    uint64_t seed = 1234;
    std::string out_dir = "out";
};

inline SegmentationMode segmentation_from_string(const std::string& s) {
    if (s == "sidecar") return SegmentationMode::Sidecar;
    if (s == "greedy_subword") return SegmentationMode::GreedySubword;
    if (s == "whitespace") return SegmentationMode::Whitespace;
    throw ConfigError("unknown segmentation_mode: " + s);
}

inline RunConfig parse_config(const nlohmann::json& j) {
    RunConfig c;
    const auto& corpus = j.at("corpus");
    c.train_corpus = corpus.at("train").get<std::string>();
    c.test_corpus = corpus.at("test").get<std::string>();
    if (j.contains("attempts"))
        c.attempts = j.at("attempts").get<std::map<std::string, std::string>>();
    if (j.contains("sidecar")) c.sidecar = j.at("sidecar").get<std::string>();
    if (j.contains("tokenizer_profile"))
        c.tokenizer_profile = j.at("tokenizer_profile").get<std::string>();
    if (j.contains("segmentation_mode"))
        c.segmentation_mode = segmentation_from_string(j.at("segmentation_mode").get<std::string>());
    if (j.contains("coref_fallback")) c.coref_fallback = j.at("coref_fallback").get<bool>();
    if (j.contains("labeling") && j.at("labeling").contains("min_attempts"))
        c.min_attempts = j.at("labeling").at("min_attempts").get<int>();
    if (j.contains("preprocess")) {
        const auto& p = j.at("preprocess");
        if (p.contains("prune_threshold")) c.prune_threshold = p.at("prune_threshold").get<double>();
        if (p.contains("oversample")) c.oversample_on = p.at("oversample").get<bool>();
        if (p.contains("scale")) c.scale_on = p.at("scale").get<bool>();
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        if (t.contains("classifiers")) c.classifiers = t.at("classifiers").get<std::vector<std::string>>();
        if (t.contains("search_budget")) c.search_budget = t.at("search_budget").get<int>();
    }
    if (j.contains("analysis")) {
        const auto& a = j.at("analysis");
        if (a.contains("ablation_subsets"))
            c.ablation_subsets = a.at("ablation_subsets").get<std::vector<std::string>>();
        if (a.contains("k")) c.cluster_k = a.at("k").get<int>();
        if (a.contains("min_cluster_size")) c.min_cluster_size = a.at("min_cluster_size").get<int>();
        if (a.contains("grid_size")) c.threshold_grid = a.at("grid_size").get<int>();
        if (a.contains("min_side")) c.threshold_min_side = a.at("min_side").get<int>();
        if (a.contains("eval_seeds")) c.eval_seeds = a.at("eval_seeds").get<int>();
    }
    if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
    if (j.contains("out")) c.out_dir = j.at("out").get<std::string>();
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError(path + ": malformed JSON");
    return parse_config(j);
}

inline nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["corpus"] = {{"train", c.train_corpus}, {"test", c.test_corpus}};
    j["attempts"] = c.attempts;
    j["sidecar"] = c.sidecar;
    j["tokenizer_profile"] = c.tokenizer_profile;
    j["segmentation_mode"] = c.segmentation_mode == SegmentationMode::Sidecar ? "sidecar"
                             : c.segmentation_mode == SegmentationMode::Whitespace
                                 ? "whitespace"
                                 : "greedy_subword";
    j["coref_fallback"] = c.coref_fallback;
    j["labeling"] = {{"min_attempts", c.min_attempts}};
    j["preprocess"] = {{"prune_threshold", c.prune_threshold},
                       {"oversample", c.oversample_on},
                       {"scale", c.scale_on}};
    j["train"] = {{"classifiers", c.classifiers}, {"search_budget", c.search_budget}};
    j["analysis"] = {{"ablation_subsets", c.ablation_subsets},
                     {"k", c.cluster_k},
                     {"min_cluster_size", c.min_cluster_size},
                     {"grid_size", c.threshold_grid},
                     {"min_side", c.threshold_min_side},
                     {"eval_seeds", c.eval_seeds}};
    j["seed"] = c.seed;
    j["out"] = c.out_dir;
    return j;
}

// FNV-1a over the canonical config dump; stamped into every artifact
// manifest so reruns are attributable to one configuration.
inline std::string config_hash(const RunConfig& c) {
    std::string s = config_to_json(c).dump();
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct ValidationReport {
    std::vector<std::string> errors;
    std::vector<std::string> notes;
    bool ok() const { return errors.empty(); }
};

inline ValidationReport validate_config(const RunConfig& c) {
    ValidationReport rep;
    auto check_path = [&](const std::string& p, const std::string& what) {
        if (p.empty()) return;
        if (!std::filesystem::exists(p)) rep.errors.push_back(what + " not found: " + p);
    };
    if (c.train_corpus.empty()) rep.errors.push_back("corpus.train is required");
    if (c.test_corpus.empty()) rep.errors.push_back("corpus.test is required");
    check_path(c.train_corpus, "train corpus");
    check_path(c.test_corpus, "test corpus");
    for (const auto& [model, path] : c.attempts) check_path(path, "attempts file for " + model);
    check_path(c.sidecar, "sidecar");
    check_path(c.tokenizer_profile, "tokenizer profile");
    if (!(c.prune_threshold > 0.0 && c.prune_threshold <= 1.0))
        rep.errors.push_back("preprocess.prune_threshold must be in (0, 1]");
    if (c.cluster_k < 2) rep.errors.push_back("analysis.k must be >= 2");
    if (c.min_attempts < 1) rep.errors.push_back("labeling.min_attempts must be >= 1");
    if (c.threshold_grid < 1) rep.errors.push_back("analysis.grid_size must be >= 1");
    for (const auto& cl : c.classifiers) {
        if (cl != "logistic" && cl != "tree" && cl != "forest")
            rep.errors.push_back("unknown classifier: " + cl);
    }
    if (c.segmentation_mode == SegmentationMode::Sidecar && c.sidecar.empty())
        rep.errors.push_back("segmentation_mode 'sidecar' requires a sidecar file");
    rep.notes.push_back("config hash: " + config_hash(c));
    return rep;
}

// ---- stage outputs -------------------------------------------------------

namespace paths {
inline std::string score_dir(const RunConfig& c) { return c.out_dir + "/score"; }
inline std::string features_dir(const RunConfig& c) { return c.out_dir + "/features"; }
inline std::string train_dir(const RunConfig& c) { return c.out_dir + "/train"; }
inline std::string reports_dir(const RunConfig& c) { return c.out_dir + "/reports"; }
}  // namespace paths

inline void write_success_csv(const std::string& path, const std::vector<SuccessStats>& stats) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write: " + path);
    out << "record_id,model_id,n_attempts,n_correct,success_rate,label\n";
    for (const auto& s : stats) {
        out << csv_escape(s.record_id) << "," << csv_escape(s.model_id) << "," << s.n_attempts
            << "," << s.n_correct << "," << format_double(s.success_rate) << ","
            << label_name(s.label) << "\n";
    }
}

inline std::vector<SuccessStats> read_success_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    std::vector<SuccessStats> out;
    for (const auto& f : t.rows) {
        SuccessStats s;
        s.record_id = f.at(0);
        s.model_id = f.at(1);
        s.n_attempts = std::stoi(f.at(2));
        s.n_correct = std::stoi(f.at(3));
        s.success_rate = std::stod(f.at(4));
        s.label = f.at(5) == "Always" ? Label::Always
                  : f.at(5) == "Never" ? Label::Never
                                       : Label::Mixed;
        out.push_back(std::move(s));
    }
    return out;
}

// ---- loaded inputs shared by the stages ----------------------------------

struct LoadedInputs {
    Corpus corpus;  // train + test
    std::map<std::string, AnnotationSidecar> sidecars;
    TokenizerProfile profile;
    std::map<std::string, std::vector<AttemptRecord>> attempts;  // model -> records
};

inline LoadedInputs load_inputs(const RunConfig& cfg) {
    LoadedInputs in;
    for (auto& r : parse_corpus(cfg.train_corpus, Split::Train)) in.corpus.add(std::move(r));
    for (auto& r : parse_corpus(cfg.test_corpus, Split::Test)) in.corpus.add(std::move(r));
    if (!cfg.sidecar.empty()) in.sidecars = load_sidecar(cfg.sidecar, in.corpus);
    if (!cfg.tokenizer_profile.empty()) {
        in.profile = load_tokenizer_profile(cfg.tokenizer_profile, cfg.segmentation_mode);
    } else {
        in.profile.name = "whitespace";
        in.profile.mode = SegmentationMode::Whitespace;
    }
    for (const auto& [model, path] : cfg.attempts)
        in.attempts[model] = load_attempts(path, in.corpus);
    return in;
}

// ---- stage: score --------------------------------------------------------

inline void run_score_stage(const RunConfig& cfg, const LoadedInputs& in,
                            std::vector<std::string>* warnings = nullptr) {
    std::filesystem::create_directories(paths::score_dir(cfg));
    std::vector<std::vector<SuccessStats>> per_model;
    for (const auto& [model, attempts] : in.attempts) {
        auto stats = score_model(in.corpus, attempts, model, warnings);
        // records with fewer than min_attempts tries are not labeled
        for (auto& s : stats)
            if (s.n_attempts < cfg.min_attempts && warnings)
                warnings->push_back("record '" + s.record_id + "' has only " +
                                    std::to_string(s.n_attempts) + " attempts for '" + model + "'");
        std::erase_if(stats, [&](const SuccessStats& s) { return s.n_attempts < cfg.min_attempts; });
        write_success_csv(paths::score_dir(cfg) + "/" + model + ".csv", stats);
        per_model.push_back(std::move(stats));
    }
    if (per_model.size() >= 2) {
        auto inter = intersect_labels(per_model);
        std::vector<SuccessStats> rows;
        for (const auto& [id, label] : inter) {
            SuccessStats s;
            s.record_id = id;
            s.model_id = "intersection";
            s.label = label;
            s.n_attempts = 0;
            s.n_correct = 0;
            s.success_rate = label == Label::Always ? 1.0 : 0.0;
            rows.push_back(std::move(s));
        }
        write_success_csv(paths::score_dir(cfg) + "/intersection.csv", rows);
    }
    // overlap counts (always/never universes per model subset)
    OverlapCounts oc = overlap_counts(per_model);
    std::ofstream out(paths::score_dir(cfg) + "/overlap.csv");
    out << "label,models,count\n";
    auto dump = [&](const char* label, const std::map<std::set<std::string>, int>& counts) {
        for (const auto& [models, count] : counts) {
            std::string key;
            for (const auto& m : models) key += (key.empty() ? "" : "+") + m;
            out << label << "," << csv_escape(key) << "," << count << "\n";
        }
    };
    dump("Always", oc.always);
    dump("Never", oc.never);
    for (const auto& [m, n] : oc.always_totals) out << "Always_total," << csv_escape(m) << "," << n << "\n";
    for (const auto& [m, n] : oc.never_totals) out << "Never_total," << csv_escape(m) << "," << n << "\n";
}

// ---- stage: features -----------------------------------------------------

inline void run_features_stage(const RunConfig& cfg, const LoadedInputs& in,
                               std::vector<std::string>* warnings = nullptr) {
    std::filesystem::create_directories(paths::features_dir(cfg));
    std::vector<FeatureVector> train_rows, test_rows;
    for (const auto& rec : in.corpus.records()) {
        auto it = in.sidecars.find(rec.id);
        const AnnotationSidecar* sc = it == in.sidecars.end() ? nullptr : &it->second;
        FeatureVector fv = extract_features(rec, in.profile, sc, cfg.coref_fallback, warnings);
        (rec.split == Split::Train ? train_rows : test_rows).push_back(std::move(fv));
    }
    write_feature_csv(paths::features_dir(cfg) + "/train.csv", train_rows);
    write_feature_csv(paths::features_dir(cfg) + "/test.csv", test_rows);
}

// ---- assembling labeled matrices from cached stages ----------------------

inline FeatureMatrix to_matrix(const std::vector<FeatureVector>& rows) {
    FeatureMatrix m;
    m.feature_names = feature_names();
    for (const auto& r : rows) {
        m.row_ids.push_back(r.record_id);
        m.values.emplace_back(r.values.begin(), r.values.end());
    }
    return m;
}

// Restrict a feature matrix to labeled rows of one split file.
inline FeatureMatrix labeled_matrix(const FeatureMatrix& features,
                                    const std::vector<SuccessStats>& stats) {
    std::map<std::string, int> cls;
    for (const auto& s : stats) {
        if (s.label == Label::Always) cls[s.record_id] = 1;
        else if (s.label == Label::Never) cls[s.record_id] = 0;
    }
    FeatureMatrix m;
    m.feature_names = features.feature_names;
    for (size_t r = 0; r < features.n_rows(); ++r) {
        auto it = cls.find(features.row_ids[r]);
        if (it == cls.end()) continue;
        m.row_ids.push_back(features.row_ids[r]);
        m.values.push_back(features.values[r]);
        m.labels.push_back(it->second);
    }
    return m;
}

}  // namespace mwp
