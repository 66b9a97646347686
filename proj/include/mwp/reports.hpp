#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "mwp/pipeline.hpp"

namespace mwp {

// ---- stage: train --------------------------------------------------------

struct TrainStageResult {
    // split id -> classifier kind -> model
    std::map<std::string, std::map<std::string, TrainedModel>> models;
    std::map<std::string, std::map<std::string, Metrics>> metrics;
};

inline std::vector<std::string> split_ids(const RunConfig& cfg) {
    std::vector<std::string> ids;
    for (const auto& [model, _] : cfg.attempts) ids.push_back(model);
    if (cfg.attempts.size() >= 2) ids.push_back("intersection");
    return ids;
}

inline std::pair<FeatureMatrix, FeatureMatrix> load_split_matrices(const RunConfig& cfg,
                                                                   const std::string& split_id) {
    auto features_train = to_matrix(read_feature_csv(paths::features_dir(cfg) + "/train.csv"));
    auto features_test = to_matrix(read_feature_csv(paths::features_dir(cfg) + "/test.csv"));
    auto stats = read_success_csv(paths::score_dir(cfg) + "/" + split_id + ".csv");
    return {labeled_matrix(features_train, stats), labeled_matrix(features_test, stats)};
}

inline TrainStageResult run_train_stage(const RunConfig& cfg) {
    std::filesystem::create_directories(paths::train_dir(cfg));
    TrainStageResult res;
    PipelineSettings settings;
    settings.prune_threshold = cfg.prune_threshold;
    settings.scale = cfg.scale_on;
    settings.balance = cfg.oversample_on;
    settings.eval_seeds = cfg.eval_seeds;
    settings.seed = cfg.seed;

    for (const auto& split_id : split_ids(cfg)) {
        std::string stats_path = paths::score_dir(cfg) + "/" + split_id + ".csv";
        if (!std::filesystem::exists(stats_path))
            throw DataError("train stage needs score stage output: " + stats_path);
        auto [train, test] = load_split_matrices(cfg, split_id);
        if (train.n_rows() == 0 || test.n_rows() == 0) continue;

        std::vector<ClassifierSpec> specs;
        for (const auto& name : cfg.classifiers) {
            ClassifierKind kind = kind_from_name(name);
            if (cfg.search_budget > 0) {
                // search runs on the preprocessed training matrix
                FeatureMatrix tr = train;
                PruneResult pr = prune_correlated(tr, cfg.prune_threshold);
                tr = select_by_names(tr, pr.kept);
                Scaler sc = fit_scaler(tr);
                tr = apply_scaler(sc, tr);
                auto search = hyperparameter_search(tr, kind, default_ranges(kind),
                                                    cfg.search_budget, cfg.seed, cfg.oversample_on);
                specs.push_back(search.best);
            } else {
                specs.push_back(ClassifierSpec::defaults(kind, cfg.seed));
            }
        }
        CellResult cell = run_pipeline_cell(train, test, settings, &specs);
        for (auto& model : cell.models) {
            std::string kind = kind_name(model.spec.kind);
            save_model(paths::train_dir(cfg) + "/" + split_id + "_" + kind + ".json", model);
            res.metrics[split_id][kind] = cell.metrics[kind];
            res.models[split_id][kind] = std::move(model);
        }
    }
    return res;
}

// ---- report rendering ----------------------------------------------------

namespace detail {

inline void write_text_table(const std::string& path,
                             const std::vector<std::vector<std::string>>& rows) {
    std::vector<size_t> widths;
    for (const auto& row : rows) {
        if (widths.size() < row.size()) widths.resize(row.size(), 0);
        for (size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());
    }
    std::ofstream out(path);
    if (!out) throw DataError("cannot write: " + path);
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            out << std::left << std::setw(static_cast<int>(widths[i]) + 2) << row[i];
        }
        out << "\n";
    }
}

inline std::string fmt3(double v) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << v;
    return os.str();
}

}  // namespace detail

struct AnalysisArtifacts {
    ImportanceReport importance;
    std::vector<AblationRow> ablation;
    std::optional<ClusterReport> clusters;
    ThresholdReport thresholds;
};

// Emits every report table as CSV plus an aligned-text rendering, and a
// manifest listing each artifact with the config hash and seed.
class ReportEmitter {
public:
    ReportEmitter(const RunConfig& cfg) : cfg_(cfg), dir_(paths::reports_dir(cfg)) {
        std::filesystem::create_directories(dir_);
    }

    void success_summary(const std::map<std::string, std::vector<SuccessStats>>& stats_per_model) {
        std::ofstream out(csv("success_summary"));
        out << "model_id,n,success_rate_mean,success_rate_std\n";
        std::vector<std::vector<std::string>> txt{{"Model", "N", "mu", "sigma"}};
        for (const auto& [model, stats] : stats_per_model) {
            if (model == "intersection") continue;
            std::vector<double> rates;
            for (const auto& s : stats) rates.push_back(s.success_rate);
            if (rates.empty()) continue;
            double mu = mean(rates), sigma = stddev_population(rates);
            out << csv_escape(model) << "," << rates.size() << "," << format_double(mu) << ","
                << format_double(sigma) << "\n";
            txt.push_back({model, std::to_string(rates.size()), detail::fmt3(mu), detail::fmt3(sigma)});
        }
        detail::write_text_table(txt_path("success_summary"), txt);
    }

    void class_distribution(const std::map<std::string, std::vector<SuccessStats>>& stats_per_split,
                            const Corpus& corpus) {
        std::ofstream out(csv("class_distribution"));
        out << "split_id,subset,always,never,total\n";
        std::vector<std::vector<std::string>> txt{{"Split", "Subset", "Always", "Never", "Total"}};
        for (const auto& [split_id, stats] : stats_per_split) {
            for (Split part : {Split::Train, Split::Test}) {
                int always = 0, never = 0;
                for (const auto& s : stats) {
                    const MwpRecord* rec = corpus.find(s.record_id);
                    if (!rec || rec->split != part) continue;
                    if (s.label == Label::Always) ++always;
                    else if (s.label == Label::Never) ++never;
                }
                out << csv_escape(split_id) << "," << split_name(part) << "," << always << ","
                    << never << "," << (always + never) << "\n";
                txt.push_back({split_id, split_name(part), std::to_string(always),
                               std::to_string(never), std::to_string(always + never)});
            }
        }
        detail::write_text_table(txt_path("class_distribution"), txt);
    }

    void classification_results(const std::map<std::string, std::map<std::string, Metrics>>& metrics) {
        std::ofstream out(csv("classification_results"));
        out << "split_id,classifier,accuracy,macro_f1,f1_never,f1_always\n";
        std::vector<std::vector<std::string>> txt{
            {"Split", "Classifier", "Acc.", "MacroF1", "F1(Never)", "F1(Always)"}};
        for (const auto& [split_id, per_kind] : metrics) {
            for (const auto& [kind, m] : per_kind) {
                double f1_never = m.f1_per_class.count(0) ? m.f1_per_class.at(0) : 0;
                double f1_always = m.f1_per_class.count(1) ? m.f1_per_class.at(1) : 0;
                out << csv_escape(split_id) << "," << kind << "," << format_double(m.accuracy)
                    << "," << format_double(m.macro_f1) << "," << format_double(f1_never) << ","
                    << format_double(f1_always) << "\n";
                txt.push_back({split_id, kind, detail::fmt3(m.accuracy), detail::fmt3(m.macro_f1),
                               detail::fmt3(f1_never), detail::fmt3(f1_always)});
            }
        }
        detail::write_text_table(txt_path("classification_results"), txt);
    }

    void importance(const ImportanceReport& rep) {
        std::ofstream out(csv("importance"));
        out << "feature,type,mean_rank,rank_std,raw_ranks\n";
        std::vector<std::vector<std::string>> txt{{"Type", "Feature", "mu", "sigma"}};
        for (const auto& e : rep.entries) {
            std::string raw;
            for (int r : e.raw_ranks) raw += (raw.empty() ? "" : " ") + std::to_string(r);
            const char* type = feature_type(e.feature) == FeatureType::L   ? "L"
                               : feature_type(e.feature) == FeatureType::M ? "M"
                                                                           : "W";
            out << csv_escape(e.feature) << "," << type << "," << format_double(e.mean_rank)
                << "," << format_double(e.rank_std) << "," << csv_escape(raw) << "\n";
            txt.push_back({type, e.feature, detail::fmt3(e.mean_rank), detail::fmt3(e.rank_std)});
        }
        detail::write_text_table(txt_path("importance"), txt);
    }

    void ablation(const std::vector<AblationRow>& rows) {
        std::ofstream out(csv("ablation"));
        out << "split_id,subset,mean_macro_f1,note\n";
        std::vector<std::vector<std::string>> txt{{"Split", "Subset", "MeanMacroF1", "Note"}};
        for (const auto& r : rows) {
            out << csv_escape(r.split_id) << "," << csv_escape(r.subset) << ","
                << (r.mean_macro_f1 ? format_double(*r.mean_macro_f1) : "") << ","
                << csv_escape(r.note) << "\n";
            txt.push_back({r.split_id, r.subset,
                           r.mean_macro_f1 ? detail::fmt3(*r.mean_macro_f1) : "-", r.note});
        }
        detail::write_text_table(txt_path("ablation"), txt);
    }

    void cluster_correlations(const ClusterReport& rep) {
        std::ofstream out(csv("cluster_correlations"));
        out << "cluster_id,cluster_size,feature,rho,p_value,stars\n";
        std::vector<std::vector<std::string>> txt{{"ID", "Size", "Feature", "Spearman(rho)"}};
        for (const auto& c : rep.correlations) {
            out << c.cluster_id << "," << c.cluster_size << "," << csv_escape(c.feature) << ","
                << format_double(c.rho) << "," << format_double(c.p_value) << ","
                << significance_stars(c.p_value) << "\n";
            txt.push_back({std::to_string(c.cluster_id), std::to_string(c.cluster_size), c.feature,
                           detail::fmt3(c.rho) + significance_stars(c.p_value)});
        }
        detail::write_text_table(txt_path("cluster_correlations"), txt);
    }

    // Table of per-feature Range / mu / sigma over the given matrix.
    void feature_statistics(const FeatureMatrix& m) {
        std::ofstream out(csv("feature_statistics"));
        out << "type,source,feature,min,max,mean,std\n";
        std::vector<std::vector<std::string>> txt{
            {"Type", "Source", "Feature Name", "Range", "mu", "sigma"}};
        for (size_t c = 0; c < m.n_cols(); ++c) {
            const FeatureDef* def = nullptr;
            for (const auto& d : feature_schema())
                if (m.feature_names[c] == d.name) def = &d;
            std::vector<double> vals;
            for (size_t r = 0; r < m.n_rows(); ++r)
                if (!std::isnan(m.values[r][c])) vals.push_back(m.values[r][c]);
            if (vals.empty()) continue;
            double lo = *std::min_element(vals.begin(), vals.end());
            double hi = *std::max_element(vals.begin(), vals.end());
            double mu = mean(vals), sigma = stddev_population(vals);
            const char* type = !def ? "?" : def->type == FeatureType::L ? "L"
                                        : def->type == FeatureType::M  ? "M"
                                                                       : "W";
            std::string source = def ? std::string(1, def->source) : "?";
            out << type << "," << source << "," << csv_escape(m.feature_names[c]) << ","
                << format_double(lo) << "," << format_double(hi) << "," << format_double(mu)
                << "," << format_double(sigma) << "\n";
            txt.push_back({type, source, m.feature_names[c],
                           "[" + detail::fmt3(lo) + " -- " + detail::fmt3(hi) + "]",
                           detail::fmt3(mu), detail::fmt3(sigma)});
        }
        detail::write_text_table(txt_path("feature_statistics"), txt);
    }

    void thresholds(const ThresholdReport& rep) {
        std::ofstream out(csv("thresholds"));
        out << "feature,threshold,diff,t,p_value\n";
        std::vector<std::vector<std::string>> txt{{"Feature", "Thresh.", "Diff.", "T-val"}};
        for (const auto& r : rep.rows) {
            out << csv_escape(r.feature) << "," << format_double(r.threshold) << ","
                << format_double(r.diff) << "," << format_double(r.t) << ","
                << format_double(r.p_value) << "\n";
            txt.push_back({r.feature, detail::fmt3(r.threshold), detail::fmt3(r.diff),
                           detail::fmt3(r.t)});
        }
        detail::write_text_table(txt_path("thresholds"), txt);
        std::ofstream omitted(dir_ + "/thresholds_omitted.csv");
        omitted << "feature,reason\n";
        for (const auto& [f, reason] : rep.omitted)
            omitted << csv_escape(f) << "," << csv_escape(reason) << "\n";
    }

    void correlation_matrix(const CorrelationMatrix& cm) {
        std::ofstream out(csv("feature_correlations"));
        out << "feature";
        for (const auto& f : cm.features) out << "," << csv_escape(f);
        out << "\n";
        for (size_t i = 0; i < cm.features.size(); ++i) {
            out << csv_escape(cm.features[i]);
            for (size_t j = 0; j < cm.features.size(); ++j) {
                std::string cell = std::isnan(cm.rho[i][j])
                                       ? "undefined"
                                       : format_double(cm.rho[i][j]) + cm.stars[i][j];
                out << "," << csv_escape(cell);
            }
            out << "\n";
        }
    }

    void overlap(const OverlapCounts& oc) {
        std::ofstream out(csv("overlap_counts"));
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
    }

    void manifest() {
        nlohmann::json j;
        j["config_hash"] = config_hash(cfg_);
        j["seed"] = cfg_.seed;
        nlohmann::json files = nlohmann::json::array();
        for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
            if (entry.path().filename() == "manifest.json") continue;
            files.push_back(entry.path().filename().string());
        }
        std::sort(files.begin(), files.end());
        j["artifacts"] = files;
        std::ofstream out(dir_ + "/manifest.json");
        out << j.dump(2) << "\n";
    }

    const std::string& dir() const { return dir_; }

private:
    std::string csv(const std::string& name) { return dir_ + "/" + name + ".csv"; }
    std::string txt_path(const std::string& name) { return dir_ + "/" + name + ".txt"; }

    RunConfig cfg_;
    std::string dir_;
};

// ---- stage: analyze ------------------------------------------------------

inline AnalysisArtifacts run_analyze_stage(const RunConfig& cfg, const LoadedInputs& in,
                                           const TrainStageResult& trained) {
    AnalysisArtifacts art;
    ReportEmitter emitter(cfg);

    // success-rate and class-distribution summaries from the score cache
    std::map<std::string, std::vector<SuccessStats>> stats_per_split;
    std::vector<std::vector<SuccessStats>> per_model_stats;
    for (const auto& split_id : split_ids(cfg)) {
        std::string p = paths::score_dir(cfg) + "/" + split_id + ".csv";
        if (!std::filesystem::exists(p)) continue;
        auto stats = read_success_csv(p);
        if (split_id != "intersection") per_model_stats.push_back(stats);
        stats_per_split[split_id] = std::move(stats);
    }
    if (!stats_per_split.empty()) {
        emitter.success_summary(stats_per_split);
        emitter.class_distribution(stats_per_split, in.corpus);
        emitter.overlap(overlap_counts(per_model_stats));
    }

    // importance aggregation over every (classifier, split) model
    std::vector<std::map<std::string, double>> importances;
    for (const auto& [split_id, per_kind] : trained.models)
        for (const auto& [kind, model] : per_kind) importances.push_back(model.importance);
    if (!importances.empty()) {
        art.importance = aggregate_importance(importances, feature_names());
        emitter.importance(art.importance);
    }
    emitter.classification_results(trained.metrics);

    PipelineSettings settings;
    settings.prune_threshold = cfg.prune_threshold;
    settings.scale = cfg.scale_on;
    settings.balance = cfg.oversample_on;
    settings.eval_seeds = cfg.eval_seeds;
    settings.seed = cfg.seed;

    // ablation grid over all splits
    std::map<std::string, std::pair<FeatureMatrix, FeatureMatrix>> splits;
    for (const auto& split_id : split_ids(cfg)) {
        if (!std::filesystem::exists(paths::score_dir(cfg) + "/" + split_id + ".csv")) continue;
        auto pair = load_split_matrices(cfg, split_id);
        if (pair.first.n_rows() > 0 && pair.second.n_rows() > 0) splits[split_id] = std::move(pair);
    }
    if (!splits.empty()) {
        art.ablation = run_ablation(splits, cfg.ablation_subsets, settings);
        emitter.ablation(art.ablation);
    }

    auto features_train = to_matrix(read_feature_csv(paths::features_dir(cfg) + "/train.csv"));

    // clustering + thresholds need per-record success rates; use the first
    // configured model's scores (paper-style runs do this per model)
    if (!cfg.attempts.empty()) {
        const std::string first_model = cfg.attempts.begin()->first;
        auto stats = read_success_csv(paths::score_dir(cfg) + "/" + first_model + ".csv");
        std::map<std::string, double> rate_of;
        for (const auto& s : stats) rate_of[s.record_id] = s.success_rate;
        std::vector<size_t> rows;
        std::vector<double> rates;
        for (size_t r = 0; r < features_train.n_rows(); ++r) {
            auto it = rate_of.find(features_train.row_ids[r]);
            if (it == rate_of.end()) continue;
            rows.push_back(r);
            rates.push_back(it->second);
        }
        FeatureMatrix scoped;
        scoped.feature_names = features_train.feature_names;
        for (size_t r : rows) {
            scoped.row_ids.push_back(features_train.row_ids[r]);
            scoped.values.push_back(features_train.values[r]);
        }
        if (scoped.n_rows() >= static_cast<size_t>(cfg.cluster_k)) {
            art.clusters = cluster_and_correlate(scoped, rates, cfg.cluster_k, cfg.seed,
                                                 cfg.min_cluster_size);
            emitter.cluster_correlations(*art.clusters);
        }
        if (!scoped.values.empty()) {
            art.thresholds = threshold_sweep(scoped, rates, cfg.threshold_grid,
                                             cfg.threshold_min_side);
            emitter.thresholds(art.thresholds);
        }
    }

    if (features_train.n_cols() >= 2 && features_train.n_rows() >= 3)
        emitter.correlation_matrix(feature_correlation_matrix(features_train));
    emitter.feature_statistics(features_train);
    emitter.manifest();
    return art;
}

}  // namespace mwp
