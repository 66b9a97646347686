#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mwp/features.hpp"
#include "mwp/kmeans.hpp"
#include "mwp/learn.hpp"
#include "mwp/stats.hpp"

namespace mwp {

// ---- importance aggregation ----------------------------------------------

struct ImportanceEntry {
    std::string feature;
    double mean_rank = 0;
    double rank_std = 0;
    std::vector<int> raw_ranks;  // one per (classifier, split) list
};

struct ImportanceReport {
    int n_features = 0;
    std::vector<ImportanceEntry> entries;  // sorted by mean rank ascending
};

// Each model contributes one rank list over the full feature universe: rank 1
// is the most important feature; features the model never saw (pruned) get
// the worst rank N.
inline ImportanceReport aggregate_importance(
    const std::vector<std::map<std::string, double>>& importances,
    const std::vector<std::string>& all_features) {
    const int n = static_cast<int>(all_features.size());
    std::map<std::string, std::vector<int>> ranks;
    for (const auto& imp : importances) {
        std::vector<std::pair<double, std::string>> present;
        for (const auto& [f, v] : imp) present.emplace_back(v, f);
        std::sort(present.begin(), present.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;  // deterministic tie-break by name
        });
        std::map<std::string, int> rank_of;
        for (size_t i = 0; i < present.size(); ++i) rank_of[present[i].second] = static_cast<int>(i) + 1;
        for (const auto& f : all_features) {
            auto it = rank_of.find(f);
            ranks[f].push_back(it == rank_of.end() ? n : it->second);
        }
    }
    ImportanceReport rep;
    rep.n_features = n;
    for (const auto& f : all_features) {
        ImportanceEntry e;
        e.feature = f;
        e.raw_ranks = ranks[f];
        std::vector<double> rd(e.raw_ranks.begin(), e.raw_ranks.end());
        e.mean_rank = mean(rd);
        e.rank_std = rd.size() > 1 ? std::sqrt([&] {
            double m = e.mean_rank, s = 0;
            for (double v : rd) s += (v - m) * (v - m);
            return s / (rd.size() - 1);
        }()) : 0.0;
        rep.entries.push_back(std::move(e));
    }
    std::sort(rep.entries.begin(), rep.entries.end(), [](const auto& a, const auto& b) {
        if (a.mean_rank != b.mean_rank) return a.mean_rank < b.mean_rank;
        return a.feature < b.feature;
    });
    return rep;
}

// ---- pipeline cell: preprocess + train the three classifiers -------------

struct PipelineSettings {
    double prune_threshold = 0.5;
    bool scale = true;
    bool balance = true;
    int eval_seeds = 5;
    uint64_t seed = 0;
};

struct CellResult {
    std::map<std::string, Metrics> metrics;  // classifier kind -> test metrics
    std::vector<TrainedModel> models;        // one per classifier (seed 0 run)
    std::vector<std::string> kept_features;
    double mean_macro_f1 = 0;
};

// One (feature subset, split) cell: prune on train, scale with train stats,
// oversample, train logistic/tree/forest, evaluate on test.
inline CellResult run_pipeline_cell(const FeatureMatrix& train, const FeatureMatrix& test,
                                    const PipelineSettings& settings,
                                    const std::vector<ClassifierSpec>* specs = nullptr) {
    CellResult res;
    FeatureMatrix tr = train, te = test;
    if (tr.n_cols() >= 2) {
        PruneResult pr = prune_correlated(tr, settings.prune_threshold);
        tr = select_by_names(tr, pr.kept);
        te = select_by_names(te, pr.kept);
    }
    Scaler scaler = fit_scaler(tr);
    if (settings.scale) {
        tr = apply_scaler(scaler, tr);
        te = apply_scaler(scaler, te);
    } else if (!scaler.dropped.empty()) {
        tr = select_by_names(tr, scaler.kept_names);
        te = select_by_names(te, scaler.kept_names);
    }
    res.kept_features = tr.feature_names;

    std::vector<ClassifierSpec> default_specs;
    if (!specs) {
        for (auto k : {ClassifierKind::Logistic, ClassifierKind::Tree, ClassifierKind::Forest})
            default_specs.push_back(ClassifierSpec::defaults(k, settings.seed));
        specs = &default_specs;
    }
    double f1_sum = 0;
    for (const auto& spec : *specs) {
        ClassifierSpec sp = spec;
        sp.seed = settings.seed;
        FeatureMatrix fit = settings.balance ? oversample(tr, sp.seed) : tr;
        TrainedModel model = train_model(fit, sp);
        Metrics m = settings.eval_seeds > 1
                        ? evaluate_multi_seed(tr, te, sp, settings.eval_seeds, settings.balance)
                        : evaluate(model, te);
        res.metrics[kind_name(sp.kind)] = m;
        res.models.push_back(std::move(model));
        f1_sum += m.macro_f1;
    }
    res.mean_macro_f1 = f1_sum / specs->size();
    return res;
}

// ---- ablation ------------------------------------------------------------

struct AblationRow {
    std::string subset;      // "L", "L+M", ...
    std::string split_id;    // model id or "intersection"
    std::optional<double> mean_macro_f1;
    std::string note;        // reason when absent
};

inline std::vector<std::string> subset_features(const std::string& subset) {
    std::set<FeatureType> types;
    for (char c : subset) {
        if (c == 'L') types.insert(FeatureType::L);
        else if (c == 'M') types.insert(FeatureType::M);
        else if (c == 'W') types.insert(FeatureType::W);
    }
    std::vector<std::string> names;
    for (const auto& d : feature_schema())
        if (types.count(d.type)) names.push_back(d.name);
    return names;
}

inline std::vector<AblationRow> run_ablation(
    const std::map<std::string, std::pair<FeatureMatrix, FeatureMatrix>>& splits,
    const std::vector<std::string>& subsets, const PipelineSettings& settings) {
    std::vector<AblationRow> rows;
    for (const auto& [split_id, pair] : splits) {
        for (const auto& subset : subsets) {
            AblationRow row;
            row.subset = subset;
            row.split_id = split_id;
            auto names = subset_features(subset);
            std::vector<std::string> present;
            for (const auto& n : names) {
                if (std::find(pair.first.feature_names.begin(), pair.first.feature_names.end(), n) !=
                    pair.first.feature_names.end())
                    present.push_back(n);
            }
            if (present.empty()) {
                row.note = "no features of this type present";
                rows.push_back(std::move(row));
                continue;
            }
            FeatureMatrix tr = select_by_names(pair.first, present);
            FeatureMatrix te = select_by_names(pair.second, present);
            try {
                CellResult cell = run_pipeline_cell(tr, te, settings);
                if (cell.kept_features.empty()) {
                    row.note = "subset empty after pruning";
                } else {
                    row.mean_macro_f1 = cell.mean_macro_f1;
                }
            } catch (const StatsError& e) {
                row.note = e.what();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

// ---- clustering + within-cluster correlations ----------------------------

struct ClusterCorrelation {
    int cluster_id = 0;
    int cluster_size = 0;
    std::string feature;
    double rho = 0;
    double p_value = 0;
};

struct ClusterReport {
    std::vector<int> assignments;  // one per clustered row
    std::vector<std::string> row_ids;
    std::vector<ClusterCorrelation> correlations;  // rows passing the p filter
    KMeansResult kmeans;
};

// K-means on standardized math features; within each cluster of at least
// min_cluster_size rows, Spearman between each linguistic feature and the
// success rate, reported when p < p_threshold.
inline ClusterReport cluster_and_correlate(const FeatureMatrix& features,
                                           const std::vector<double>& success_rates, int k,
                                           uint64_t seed, int min_cluster_size = 10,
                                           double p_threshold = 0.001) {
    if (features.n_rows() < static_cast<size_t>(k))
        throw StatsError("cluster_and_correlate: k exceeds row count");
    std::vector<std::string> math_cols, ling_cols;
    for (const auto& n : features.feature_names) {
        FeatureType t = feature_type(n);
        if (t == FeatureType::M) math_cols.push_back(n);
        else if (t == FeatureType::L) ling_cols.push_back(n);
    }
    if (math_cols.empty()) throw StatsError("cluster_and_correlate: no math features present");

    FeatureMatrix math = select_by_names(features, math_cols);
    Scaler scaler = fit_scaler(math);
    FeatureMatrix scaled = apply_scaler(scaler, math);

    ClusterReport rep;
    rep.kmeans = kmeans(scaled.values, k, seed);
    rep.assignments = rep.kmeans.assignments;
    rep.row_ids = features.row_ids;

    FeatureMatrix ling = ling_cols.empty() ? FeatureMatrix{} : select_by_names(features, ling_cols);
    for (int c = 0; c < k; ++c) {
        std::vector<size_t> members;
        for (size_t r = 0; r < rep.assignments.size(); ++r)
            if (rep.assignments[r] == c) members.push_back(r);
        if (members.size() < static_cast<size_t>(min_cluster_size)) continue;
        for (size_t lc = 0; lc < ling.n_cols(); ++lc) {
            std::vector<double> x, y;
            for (size_t r : members) {
                double v = ling.values[r][lc];
                if (std::isnan(v)) continue;
                x.push_back(v);
                y.push_back(success_rates[r]);
            }
            if (x.size() < 3) continue;
            try {
                Correlation corr = spearman(x, y);
                if (corr.p_value < p_threshold)
                    rep.correlations.push_back({c, static_cast<int>(members.size()),
                                                ling.feature_names[lc], corr.rho, corr.p_value});
            } catch (const StatsError&) {
                // constant feature or rate inside the cluster
            }
        }
    }
    return rep;
}

// ---- threshold sweep -----------------------------------------------------

struct ThresholdRow {
    std::string feature;
    double threshold = 0;
    double diff = 0;  // mean success (<= side) - mean success (> side)
    double t = 0;
    double p_value = 0;
};

struct ThresholdReport {
    std::vector<ThresholdRow> rows;  // rows passing the filters
    std::vector<std::pair<std::string, std::string>> omitted;  // (feature, reason)
};

// Per feature: grid_size equally spaced thresholds strictly between min and
// max; both sides need at least min_side rows; the threshold maximizing the
// absolute mean-success-rate difference is kept, then filtered on |t| and p.
inline ThresholdReport threshold_sweep(const FeatureMatrix& features,
                                       const std::vector<double>& success_rates,
                                       int grid_size = 50, int min_side = 20,
                                       double t_filter = 5.0, double p_filter = 1e-4) {
    ThresholdReport rep;
    for (size_t c = 0; c < features.n_cols(); ++c) {
        std::vector<double> x, sr;
        for (size_t r = 0; r < features.n_rows(); ++r) {
            double v = features.values[r][c];
            if (std::isnan(v)) continue;
            x.push_back(v);
            sr.push_back(success_rates[r]);
        }
        const std::string& name = features.feature_names[c];
        if (x.empty()) {
            rep.omitted.emplace_back(name, "all values missing");
            continue;
        }
        double lo = *std::min_element(x.begin(), x.end());
        double hi = *std::max_element(x.begin(), x.end());
        if (lo == hi) {
            rep.omitted.emplace_back(name, "constant feature");
            continue;
        }
        bool found = false;
        ThresholdRow best;
        for (int g = 1; g <= grid_size; ++g) {
            double thr = lo + (hi - lo) * g / (grid_size + 1);
            std::vector<double> le, gt;
            for (size_t i = 0; i < x.size(); ++i) (x[i] <= thr ? le : gt).push_back(sr[i]);
            if (le.size() < static_cast<size_t>(min_side) || gt.size() < static_cast<size_t>(min_side))
                continue;
            double diff = mean(le) - mean(gt);
            if (!found || std::fabs(diff) > std::fabs(best.diff)) {
                TTestResult tt = t_test(le, gt);
                best = {name, thr, diff, tt.t, tt.p_value};
                found = true;
            }
        }
        if (!found) {
            rep.omitted.emplace_back(name, "no threshold with both sides >= " + std::to_string(min_side));
            continue;
        }
        if (std::fabs(best.t) > t_filter && best.p_value < p_filter) rep.rows.push_back(best);
        else rep.omitted.emplace_back(name, "below significance filter");
    }
    return rep;
}

// ---- feature correlation matrix ------------------------------------------

struct CorrelationMatrix {
    std::vector<std::string> features;
    std::vector<std::vector<double>> rho;  // NaN when undefined
    std::vector<std::vector<std::string>> stars;
};

inline std::string significance_stars(double p) {
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

inline CorrelationMatrix feature_correlation_matrix(const FeatureMatrix& m) {
    if (m.n_cols() < 2) throw StatsError("feature_correlation_matrix: need >= 2 features");
    const size_t d = m.n_cols();
    CorrelationMatrix out;
    out.features = m.feature_names;
    out.rho.assign(d, std::vector<double>(d, std::numeric_limits<double>::quiet_NaN()));
    out.stars.assign(d, std::vector<std::string>(d));
    for (size_t i = 0; i < d; ++i) out.rho[i][i] = 1.0;
    for (size_t i = 0; i < d; ++i) {
        for (size_t j = i + 1; j < d; ++j) {
            std::vector<double> x, y;
            for (size_t r = 0; r < m.n_rows(); ++r) {
                double a = m.values[r][i], b = m.values[r][j];
                if (!std::isnan(a) && !std::isnan(b)) { x.push_back(a); y.push_back(b); }
            }
            if (x.size() < 3) continue;
            try {
                Correlation c = spearman(x, y);
                out.rho[i][j] = out.rho[j][i] = c.rho;
                out.stars[i][j] = out.stars[j][i] = significance_stars(c.p_value);
            } catch (const StatsError&) {
                // constant column: left undefined
            }
        }
    }
    return out;
}

}  // namespace mwp
