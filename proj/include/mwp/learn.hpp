#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mwp/stats.hpp"

namespace mwp {

enum class ClassifierKind { Logistic, Tree, Forest };

inline const char* kind_name(ClassifierKind k) {
    switch (k) {
        case ClassifierKind::Logistic: return "logistic";
        case ClassifierKind::Tree: return "tree";
        default: return "forest";
    }
}

inline ClassifierKind kind_from_name(const std::string& s) {
    if (s == "logistic") return ClassifierKind::Logistic;
    if (s == "tree") return ClassifierKind::Tree;
    if (s == "forest") return ClassifierKind::Forest;
    throw std::runtime_error("unknown classifier kind: " + s);
}

struct ClassifierSpec {
    ClassifierKind kind = ClassifierKind::Logistic;
    std::map<std::string, double> hyperparameters;
    uint64_t seed = 0;

    double get(const std::string& name, double fallback) const {
        auto it = hyperparameters.find(name);
        return it == hyperparameters.end() ? fallback : it->second;
    }

    static ClassifierSpec defaults(ClassifierKind kind, uint64_t seed = 0) {
        ClassifierSpec s;
        s.kind = kind;
        s.seed = seed;
        switch (kind) {
            case ClassifierKind::Logistic:
                s.hyperparameters = {{"l2_strength", 1e-3}, {"max_iters", 500}, {"tolerance", 1e-6}};
                break;
            case ClassifierKind::Tree:
                s.hyperparameters = {{"max_depth", 8}, {"min_samples_leaf", 2}, {"min_samples_split", 4}};
                break;
            case ClassifierKind::Forest:
                s.hyperparameters = {{"n_trees", 100},
                                     {"max_depth", 8},
                                     {"min_samples_leaf", 2},
                                     {"features_per_split_fraction", 0.5}};
                break;
        }
        return s;
    }
};

// ---- logistic regression -------------------------------------------------

struct LogisticParams {
    std::vector<double> weights;
    double bias = 0;
    bool converged = false;
    double final_grad_norm = 0;
};

namespace detail {

inline double logistic_loss(const FeatureMatrix& m, const std::vector<double>& w, double b,
                            double lambda) {
    double loss = 0;
    for (size_t r = 0; r < m.n_rows(); ++r) {
        double z = b;
        for (size_t c = 0; c < m.n_cols(); ++c) z += w[c] * m.values[r][c];
        double margin = (m.labels[r] == 1 ? 1.0 : -1.0) * z;
        // log(1 + exp(-margin)) computed stably
        loss += margin > 0 ? std::log1p(std::exp(-margin)) : -margin + std::log1p(std::exp(margin));
    }
    loss /= m.n_rows();
    double reg = 0;
    for (double wi : w) reg += wi * wi;
    return loss + 0.5 * lambda * reg;
}

inline void logistic_gradient(const FeatureMatrix& m, const std::vector<double>& w, double b,
                              double lambda, std::vector<double>& gw, double& gb) {
    gw.assign(w.size(), 0.0);
    gb = 0;
    for (size_t r = 0; r < m.n_rows(); ++r) {
        double z = b;
        for (size_t c = 0; c < m.n_cols(); ++c) z += w[c] * m.values[r][c];
        double p = 1.0 / (1.0 + std::exp(-z));
        double g = p - (m.labels[r] == 1 ? 1.0 : 0.0);
        for (size_t c = 0; c < m.n_cols(); ++c) gw[c] += g * m.values[r][c];
        gb += g;
    }
    double inv = 1.0 / m.n_rows();
    for (size_t c = 0; c < w.size(); ++c) gw[c] = gw[c] * inv + lambda * w[c];
    gb *= inv;
}

}  // namespace detail

// L2-regularized logistic regression by gradient descent with backtracking
// line search; the bias is unpenalized.
inline LogisticParams fit_logistic(const FeatureMatrix& m, const ClassifierSpec& spec) {
    const double lambda = spec.get("l2_strength", 1e-3);
    const int max_iters = static_cast<int>(spec.get("max_iters", 500));
    const double tol = spec.get("tolerance", 1e-6);

    LogisticParams p;
    p.weights.assign(m.n_cols(), 0.0);
    std::vector<double> gw;
    double gb = 0;
    double loss = detail::logistic_loss(m, p.weights, p.bias, lambda);
    if (!std::isfinite(loss)) throw StatsError("logistic: non-finite loss (unscaled input?)");

    for (int it = 0; it < max_iters; ++it) {
        detail::logistic_gradient(m, p.weights, p.bias, lambda, gw, gb);
        double gnorm = gb * gb;
        for (double g : gw) gnorm += g * g;
        gnorm = std::sqrt(gnorm);
        p.final_grad_norm = gnorm;
        if (gnorm < tol) { p.converged = true; break; }
        double step = 1.0;
        for (int bt = 0; bt < 40; ++bt) {
            std::vector<double> wn(p.weights.size());
            for (size_t c = 0; c < wn.size(); ++c) wn[c] = p.weights[c] - step * gw[c];
            double bn = p.bias - step * gb;
            double ln = detail::logistic_loss(m, wn, bn, lambda);
            if (ln <= loss - 1e-4 * step * gnorm * gnorm) {
                p.weights = std::move(wn);
                p.bias = bn;
                loss = ln;
                break;
            }
            step *= 0.5;
        }
    }
    return p;
}

// ---- CART ----------------------------------------------------------------

struct TreeNode {
    int feature = -1;        // -1: leaf
    double threshold = 0;
    int left = -1, right = -1;
    int prediction = 0;
};

struct TreeParams {
    std::vector<TreeNode> nodes;  // node 0 is the root
    std::vector<double> importance_raw;  // unnormalized impurity decrease per feature
};

namespace detail {

inline double gini(size_t n0, size_t n1) {
    size_t n = n0 + n1;
    if (n == 0) return 0;
    double p0 = static_cast<double>(n0) / n;
    double p1 = static_cast<double>(n1) / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

struct TreeBuilder {
    const FeatureMatrix& m;
    int max_depth;
    size_t min_leaf;
    size_t min_split;
    std::mt19937_64* feature_rng;  // null: consider all features
    size_t features_per_split;
    TreeParams out;

    int build(std::vector<size_t>& idx, int depth) {
        size_t n1 = 0;
        for (size_t i : idx)
            if (m.labels[i] == 1) ++n1;
        size_t n0 = idx.size() - n1;
        int majority = n1 > n0 ? 1 : 0;  // tie -> class 0

        int node_id = static_cast<int>(out.nodes.size());
        out.nodes.push_back({});
        out.nodes[node_id].prediction = majority;

        if (depth >= max_depth || idx.size() < min_split || n0 == 0 || n1 == 0) return node_id;

        std::vector<size_t> candidate_features(m.n_cols());
        std::iota(candidate_features.begin(), candidate_features.end(), size_t{0});
        if (feature_rng && features_per_split < m.n_cols()) {
            std::shuffle(candidate_features.begin(), candidate_features.end(), *feature_rng);
            candidate_features.resize(features_per_split);
            std::sort(candidate_features.begin(), candidate_features.end());
        }

        double parent_imp = gini(n0, n1);
        // zero-gain splits are allowed (XOR-style patterns need them); only
        // negative gains are rejected
        double best_gain = -1.0;
        int best_feat = -1;
        double best_thr = 0;

        std::vector<std::pair<double, int>> vals(idx.size());
        for (size_t f : candidate_features) {
            for (size_t i = 0; i < idx.size(); ++i)
                vals[i] = {m.values[idx[i]][f], m.labels[idx[i]]};
            std::sort(vals.begin(), vals.end());
            size_t l0 = 0, l1 = 0;
            for (size_t i = 0; i + 1 < vals.size(); ++i) {
                if (vals[i].second == 1) ++l1; else ++l0;
                if (vals[i].first == vals[i + 1].first) continue;  // no split between equal values
                size_t nl = i + 1, nr = vals.size() - nl;
                if (nl < min_leaf || nr < min_leaf) continue;
                double imp = (nl * gini(l0, l1) + nr * gini(n0 - l0, n1 - l1)) / idx.size();
                double gain = parent_imp - imp;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feat = static_cast<int>(f);
                    best_thr = (vals[i].first + vals[i + 1].first) / 2.0;  // midpoint rule
                }
            }
        }
        if (best_feat < 0) return node_id;

        std::vector<size_t> left_idx, right_idx;
        for (size_t i : idx)
            (m.values[i][best_feat] <= best_thr ? left_idx : right_idx).push_back(i);

        out.importance_raw[best_feat] += best_gain * idx.size();
        out.nodes[node_id].feature = best_feat;
        out.nodes[node_id].threshold = best_thr;
        out.nodes[node_id].left = build(left_idx, depth + 1);
        out.nodes[node_id].right = build(right_idx, depth + 1);
        return node_id;
    }
};

}  // namespace detail

inline TreeParams fit_tree(const FeatureMatrix& m, const ClassifierSpec& spec,
                           std::mt19937_64* feature_rng = nullptr, double fraction = 1.0) {
    detail::TreeBuilder b{m,
                          static_cast<int>(spec.get("max_depth", 8)),
                          static_cast<size_t>(spec.get("min_samples_leaf", 1)),
                          static_cast<size_t>(spec.get("min_samples_split", 2)),
                          feature_rng,
                          static_cast<size_t>(std::ceil(fraction * m.n_cols())),
                          {}};
    b.out.importance_raw.assign(m.n_cols(), 0.0);
    std::vector<size_t> idx(m.n_rows());
    std::iota(idx.begin(), idx.end(), size_t{0});
    b.build(idx, 0);
    return std::move(b.out);
}

inline int tree_predict(const std::vector<TreeNode>& nodes, const std::vector<double>& x) {
    int cur = 0;
    while (nodes[cur].feature >= 0)
        cur = x[nodes[cur].feature] <= nodes[cur].threshold ? nodes[cur].left : nodes[cur].right;
    return nodes[cur].prediction;
}

struct ForestParams {
    std::vector<TreeParams> trees;
};

// ---- trained model -------------------------------------------------------

struct TrainedModel {
    ClassifierSpec spec;
    std::vector<std::string> feature_names;
    std::variant<LogisticParams, TreeParams, ForestParams> params;
    std::map<std::string, double> importance;  // non-negative, sums to 1

    int predict(const std::vector<double>& x) const {
        if (std::holds_alternative<LogisticParams>(params)) {
            const auto& p = std::get<LogisticParams>(params);
            double z = p.bias;
            for (size_t c = 0; c < p.weights.size(); ++c) z += p.weights[c] * x[c];
            return z > 0 ? 1 : 0;
        }
        if (std::holds_alternative<TreeParams>(params))
            return tree_predict(std::get<TreeParams>(params).nodes, x);
        const auto& f = std::get<ForestParams>(params);
        int votes = 0;
        for (const auto& t : f.trees) votes += tree_predict(t.nodes, x);
        return 2 * votes > static_cast<int>(f.trees.size()) ? 1 : 0;  // tie -> class 0
    }

    std::vector<int> predict_all(const FeatureMatrix& m) const {
        std::vector<int> out;
        out.reserve(m.n_rows());
        for (const auto& row : m.values) out.push_back(predict(row));
        return out;
    }
};

namespace detail {

inline std::map<std::string, double> normalize_importance(const std::vector<std::string>& names,
                                                          const std::vector<double>& raw) {
    double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    std::map<std::string, double> out;
    for (size_t i = 0; i < names.size(); ++i)
        out[names[i]] = total > 0 ? raw[i] / total : 1.0 / names.size();
    return out;
}

}  // namespace detail

inline TrainedModel train_model(const FeatureMatrix& m, const ClassifierSpec& spec) {
    if (m.labels.size() != m.n_rows()) throw StatsError("train_model: labels required");
    TrainedModel model;
    model.spec = spec;
    model.feature_names = m.feature_names;
    switch (spec.kind) {
        case ClassifierKind::Logistic: {
            LogisticParams p = fit_logistic(m, spec);
            std::vector<double> absw(p.weights.size());
            for (size_t i = 0; i < p.weights.size(); ++i) absw[i] = std::fabs(p.weights[i]);
            model.importance = detail::normalize_importance(m.feature_names, absw);
            model.params = std::move(p);
            break;
        }
        case ClassifierKind::Tree: {
            TreeParams p = fit_tree(m, spec);
            model.importance = detail::normalize_importance(m.feature_names, p.importance_raw);
            model.params = std::move(p);
            break;
        }
        case ClassifierKind::Forest: {
            ForestParams f;
            const int n_trees = static_cast<int>(spec.get("n_trees", 100));
            const double fraction = spec.get("features_per_split_fraction", 0.5);
            std::vector<double> raw(m.n_cols(), 0.0);
            for (int t = 0; t < n_trees; ++t) {
                std::mt19937_64 rng(spec.seed * 0x9E3779B97F4A7C15ULL + t + 1);
                // bootstrap resample of training rows
                FeatureMatrix boot;
                boot.feature_names = m.feature_names;
                std::uniform_int_distribution<size_t> pick(0, m.n_rows() - 1);
                for (size_t r = 0; r < m.n_rows(); ++r) {
                    size_t src = pick(rng);
                    boot.values.push_back(m.values[src]);
                    boot.labels.push_back(m.labels[src]);
                    boot.row_ids.push_back(m.row_ids.empty() ? "" : m.row_ids[src]);
                }
                TreeParams tp = fit_tree(boot, spec, &rng, fraction);
                for (size_t c = 0; c < raw.size(); ++c) raw[c] += tp.importance_raw[c];
                f.trees.push_back(std::move(tp));
            }
            model.importance = detail::normalize_importance(m.feature_names, raw);
            model.params = std::move(f);
            break;
        }
    }
    return model;
}

inline Metrics evaluate(const TrainedModel& model, const FeatureMatrix& test) {
    if (model.feature_names != test.feature_names) {
        std::string msg = "evaluate: feature mismatch; model expects:";
        for (const auto& n : model.feature_names) msg += " " + n;
        throw StatsError(msg);
    }
    return classification_metrics(test.labels, model.predict_all(test));
}

// ---- hyperparameter search -----------------------------------------------

struct ParamRange {
    double lo, hi;
    bool log_scale = false;
    bool integral = false;
};

using SearchRanges = std::map<std::string, ParamRange>;

inline SearchRanges default_ranges(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::Logistic:
            return {{"l2_strength", {1e-4, 10.0, true, false}},
                    {"max_iters", {500, 500, false, true}},
                    {"tolerance", {1e-6, 1e-6, false, false}}};
        case ClassifierKind::Tree:
            return {{"max_depth", {2, 16, false, true}},
                    {"min_samples_leaf", {1, 20, false, true}},
                    {"min_samples_split", {2, 40, false, true}}};
        default:
            return {{"n_trees", {50, 400, false, true}},
                    {"max_depth", {2, 16, false, true}},
                    {"min_samples_leaf", {1, 20, false, true}},
                    {"features_per_split_fraction", {0.2, 1.0, false, false}}};
    }
}

inline ClassifierSpec sample_spec(ClassifierKind kind, const SearchRanges& ranges,
                                  std::mt19937_64& rng, uint64_t seed) {
    ClassifierSpec spec;
    spec.kind = kind;
    spec.seed = seed;
    for (const auto& [name, r] : ranges) {
        double v;
        if (r.lo == r.hi) {
            v = r.lo;
        } else if (r.log_scale) {
            std::uniform_real_distribution<double> u(std::log(r.lo), std::log(r.hi));
            v = std::exp(u(rng));
        } else {
            std::uniform_real_distribution<double> u(r.lo, r.hi);
            v = u(rng);
        }
        if (r.integral) v = std::round(v);
        spec.hyperparameters[name] = v;
    }
    return spec;
}

// Stratified held-out split: a seeded shuffle per class, 15% held out with at
// least one row per class on each side.
struct HeldOutSplit {
    FeatureMatrix fit;
    FeatureMatrix held;
};

inline HeldOutSplit stratified_split(const FeatureMatrix& m, double held_fraction, uint64_t seed) {
    std::vector<size_t> pos, neg;
    for (size_t r = 0; r < m.n_rows(); ++r) (m.labels[r] == 1 ? pos : neg).push_back(r);
    std::mt19937_64 rng(seed);
    std::shuffle(pos.begin(), pos.end(), rng);
    std::shuffle(neg.begin(), neg.end(), rng);
    auto take = [&](std::vector<size_t>& v) {
        size_t k = static_cast<size_t>(std::round(held_fraction * v.size()));
        if (k == 0 && !v.empty()) k = 1;
        if (k >= v.size()) k = v.size() > 1 ? v.size() - 1 : 0;
        return k;
    };
    size_t kp = take(pos), kn = take(neg);
    std::vector<size_t> held_idx(pos.begin(), pos.begin() + kp);
    held_idx.insert(held_idx.end(), neg.begin(), neg.begin() + kn);
    std::vector<size_t> fit_idx(pos.begin() + kp, pos.end());
    fit_idx.insert(fit_idx.end(), neg.begin() + kn, neg.end());
    std::sort(held_idx.begin(), held_idx.end());
    std::sort(fit_idx.begin(), fit_idx.end());
    auto sub = [&](const std::vector<size_t>& idx) {
        FeatureMatrix s;
        s.feature_names = m.feature_names;
        for (size_t r : idx) {
            s.values.push_back(m.values[r]);
            s.labels.push_back(m.labels[r]);
            if (!m.row_ids.empty()) s.row_ids.push_back(m.row_ids[r]);
        }
        return s;
    };
    return {sub(fit_idx), sub(held_idx)};
}

struct SearchResult {
    ClassifierSpec best;
    double best_macro_f1 = -1;
    std::vector<std::pair<ClassifierSpec, double>> trials;
};

// Seeded random search: `budget` draws from the ranges, each scored by
// macro-F1 on a 15% stratified held-out slice of the training rows.
inline SearchResult hyperparameter_search(const FeatureMatrix& train, ClassifierKind kind,
                                          const SearchRanges& ranges, int budget, uint64_t seed,
                                          bool balance = true) {
    if (budget < 1) throw StatsError("hyperparameter_search: budget >= 1 required");
    HeldOutSplit split = stratified_split(train, 0.15, seed);
    auto single_class = [](const FeatureMatrix& m) {
        return std::all_of(m.labels.begin(), m.labels.end(), [&](int l) { return l == m.labels[0]; });
    };
    if (split.held.n_rows() == 0 || single_class(split.held) || single_class(split.fit)) {
        split = stratified_split(train, 0.15, seed + 1);  // reshuffle once
        if (split.held.n_rows() == 0 || single_class(split.held) || single_class(split.fit))
            throw StatsError("hyperparameter_search: degenerate held-out split");
    }
    FeatureMatrix fit = balance ? oversample(split.fit, seed) : split.fit;

    SearchResult res;
    std::mt19937_64 rng(seed ^ 0xD1B54A32D192ED03ULL);
    for (int i = 0; i < budget; ++i) {
        ClassifierSpec spec = sample_spec(kind, ranges, rng, seed);
        TrainedModel model = train_model(fit, spec);
        double f1 = evaluate(model, split.held).macro_f1;
        res.trials.emplace_back(spec, f1);
        if (f1 > res.best_macro_f1) {  // tie -> earlier draw
            res.best_macro_f1 = f1;
            res.best = spec;
        }
    }
    return res;
}

// Mean metrics over several training seeds (resampling and bootstrap
// randomness vary; the data does not).
inline Metrics evaluate_multi_seed(const FeatureMatrix& train, const FeatureMatrix& test,
                                   const ClassifierSpec& spec, int n_seeds, bool balance = true) {
    Metrics agg;
    for (int s = 0; s < n_seeds; ++s) {
        ClassifierSpec sp = spec;
        sp.seed = spec.seed + static_cast<uint64_t>(s);
        FeatureMatrix fit = balance ? oversample(train, sp.seed) : train;
        TrainedModel model = train_model(fit, sp);
        Metrics m = evaluate(model, test);
        agg.accuracy += m.accuracy;
        agg.macro_f1 += m.macro_f1;
        for (const auto& [cls, f1] : m.f1_per_class) agg.f1_per_class[cls] += f1;
    }
    agg.accuracy /= n_seeds;
    agg.macro_f1 /= n_seeds;
    for (auto& [cls, f1] : agg.f1_per_class) f1 /= n_seeds;
    return agg;
}

// ---- model serialization -------------------------------------------------

inline nlohmann::json model_to_json(const TrainedModel& model) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["kind"] = kind_name(model.spec.kind);
    j["seed"] = model.spec.seed;
    j["hyperparameters"] = model.spec.hyperparameters;
    j["feature_names"] = model.feature_names;
    j["importance"] = model.importance;
    auto tree_json = [](const TreeParams& t) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : t.nodes)
            nodes.push_back({{"feature", n.feature},
                             {"threshold", n.threshold},
                             {"left", n.left},
                             {"right", n.right},
                             {"prediction", n.prediction}});
        return nodes;
    };
    if (std::holds_alternative<LogisticParams>(model.params)) {
        const auto& p = std::get<LogisticParams>(model.params);
        j["parameters"] = {{"weights", p.weights}, {"bias", p.bias}, {"converged", p.converged}};
    } else if (std::holds_alternative<TreeParams>(model.params)) {
        j["parameters"] = {{"nodes", tree_json(std::get<TreeParams>(model.params))}};
    } else {
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& t : std::get<ForestParams>(model.params).trees)
            trees.push_back(tree_json(t));
        j["parameters"] = {{"trees", trees}};
    }
    return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
    if (j.at("format_version").get<int>() != 1)
        throw std::runtime_error("unsupported model format version");
    TrainedModel model;
    model.spec.kind = kind_from_name(j.at("kind").get<std::string>());
    model.spec.seed = j.at("seed").get<uint64_t>();
    model.spec.hyperparameters = j.at("hyperparameters").get<std::map<std::string, double>>();
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.importance = j.at("importance").get<std::map<std::string, double>>();
    auto tree_from = [](const nlohmann::json& nodes) {
        TreeParams t;
        for (const auto& n : nodes)
            t.nodes.push_back({n.at("feature").get<int>(), n.at("threshold").get<double>(),
                               n.at("left").get<int>(), n.at("right").get<int>(),
                               n.at("prediction").get<int>()});
        return t;
    };
    const auto& p = j.at("parameters");
    if (model.spec.kind == ClassifierKind::Logistic) {
        LogisticParams lp;
        lp.weights = p.at("weights").get<std::vector<double>>();
        lp.bias = p.at("bias").get<double>();
        lp.converged = p.at("converged").get<bool>();
        model.params = std::move(lp);
    } else if (model.spec.kind == ClassifierKind::Tree) {
        model.params = tree_from(p.at("nodes"));
    } else {
        ForestParams f;
        for (const auto& t : p.at("trees")) f.trees.push_back(tree_from(t));
        model.params = std::move(f);
    }
    return model;
}

inline void save_model(const std::string& path, const TrainedModel& model) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model: " + path);
    out << model_to_json(model).dump(2) << "\n";
}

inline TrainedModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model: " + path);
    nlohmann::json j;
    in >> j;
    return model_from_json(j);
}

}  // namespace mwp
