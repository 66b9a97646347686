#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "mwp/learn.hpp"

using namespace mwp;

namespace {

// Two separable Gaussian blobs in 2-D.
FeatureMatrix blobs(int n_per_class, uint64_t seed, double separation = 6.0) {
    FeatureMatrix m;
    m.feature_names = {"x", "y"};
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0, 1);
    for (int i = 0; i < n_per_class; ++i) {
        m.values.push_back({g(rng) - separation / 2, g(rng)});
        m.labels.push_back(0);
        m.values.push_back({g(rng) + separation / 2, g(rng)});
        m.labels.push_back(1);
    }
    return m;
}

// Labels depend on x1 with noise; x2 is pure noise. Hard enough that a single
// default tree overfits while a forest averages the noise out.
FeatureMatrix noisy_step(int n, uint64_t seed) {
    FeatureMatrix m;
    m.feature_names = {"signal", "noise"};
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0, 1);
    std::normal_distribution<double> g(0, 1);
    for (int i = 0; i < n; ++i) {
        double x = u(rng);
        int label = x > 0.5 ? 1 : 0;
        if (u(rng) < 0.25) label = 1 - label;  // 25% label noise
        m.values.push_back({x, g(rng)});
        m.labels.push_back(label);
    }
    return m;
}

}  // namespace

TEST_CASE("logistic regression separates 2-D blobs") {
    FeatureMatrix m = blobs(100, 11);
    TrainedModel model = train_model(m, ClassifierSpec::defaults(ClassifierKind::Logistic));
    Metrics metrics = evaluate(model, m);
    CHECK(metrics.accuracy >= 0.99);
    // the separating direction dominates the importance map
    CHECK(model.importance.at("x") > model.importance.at("y"));
    double total = model.importance.at("x") + model.importance.at("y");
    CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("logistic analytic gradient matches central finite differences") {
    FeatureMatrix m = blobs(20, 5);
    const double lambda = 0.1;
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0, 0.5);
    std::vector<double> w = {g(rng), g(rng)};
    double b = g(rng);

    std::vector<double> gw;
    double gb;
    detail::logistic_gradient(m, w, b, lambda, gw, gb);

    const double h = 1e-6;
    for (size_t c = 0; c < w.size(); ++c) {
        auto wp = w, wm = w;
        wp[c] += h;
        wm[c] -= h;
        double fd = (detail::logistic_loss(m, wp, b, lambda) -
                     detail::logistic_loss(m, wm, b, lambda)) /
                    (2 * h);
        CHECK(gw[c] == doctest::Approx(fd).epsilon(1e-5));
    }
    double fdb = (detail::logistic_loss(m, w, b + h, lambda) -
                  detail::logistic_loss(m, w, b - h, lambda)) /
                 (2 * h);
    CHECK(gb == doctest::Approx(fdb).epsilon(1e-5));
}

TEST_CASE("CART fits 4-point XOR exactly") {
    FeatureMatrix m;
    m.feature_names = {"a", "b"};
    m.values = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    m.labels = {0, 1, 1, 0};
    ClassifierSpec spec = ClassifierSpec::defaults(ClassifierKind::Tree);
    spec.hyperparameters["min_samples_leaf"] = 1;
    spec.hyperparameters["min_samples_split"] = 2;
    TrainedModel model = train_model(m, spec);
    CHECK(evaluate(model, m).accuracy == doctest::Approx(1.0));
}

TEST_CASE("tree midpoint thresholds and majority tie goes to class 0") {
    FeatureMatrix m;
    m.feature_names = {"f"};
    m.values = {{1}, {2}, {3}, {4}};
    m.labels = {0, 0, 1, 1};
    TreeParams t = fit_tree(m, ClassifierSpec::defaults(ClassifierKind::Tree));
    REQUIRE(!t.nodes.empty());
    CHECK(t.nodes[0].feature == 0);
    CHECK(t.nodes[0].threshold == doctest::Approx(2.5));  // midpoint of 2 and 3

    // balanced leaf predicts class 0 on ties
    FeatureMatrix tie;
    tie.feature_names = {"f"};
    tie.values = {{1}, {1}};
    tie.labels = {0, 1};
    TreeParams leaf = fit_tree(tie, ClassifierSpec::defaults(ClassifierKind::Tree));
    CHECK(tree_predict(leaf.nodes, {1}) == 0);
}

TEST_CASE("forest beats or matches a single tree on noisy data over 5 seeds") {
    double tree_sum = 0, forest_sum = 0;
    for (uint64_t seed = 0; seed < 5; ++seed) {
        FeatureMatrix train = noisy_step(200, 100 + seed);
        FeatureMatrix test = noisy_step(200, 900 + seed);
        ClassifierSpec tree_spec = ClassifierSpec::defaults(ClassifierKind::Tree, seed);
        tree_spec.hyperparameters["max_depth"] = 12;
        tree_spec.hyperparameters["min_samples_leaf"] = 1;
        tree_spec.hyperparameters["min_samples_split"] = 2;
        ClassifierSpec forest_spec = ClassifierSpec::defaults(ClassifierKind::Forest, seed);
        forest_spec.hyperparameters["max_depth"] = 12;
        forest_spec.hyperparameters["min_samples_leaf"] = 1;
        tree_sum += evaluate(train_model(train, tree_spec), test).macro_f1;
        forest_sum += evaluate(train_model(train, forest_spec), test).macro_f1;
    }
    CHECK(forest_sum / 5 >= tree_sum / 5);
}

TEST_CASE("forest is deterministic per seed") {
    FeatureMatrix m = noisy_step(80, 17);
    ClassifierSpec spec = ClassifierSpec::defaults(ClassifierKind::Forest, 9);
    spec.hyperparameters["n_trees"] = 21;
    TrainedModel a = train_model(m, spec);
    TrainedModel b = train_model(m, spec);
    CHECK(a.predict_all(m) == b.predict_all(m));
    CHECK(a.importance == b.importance);
}

TEST_CASE("tree importance sums to one and finds the signal") {
    FeatureMatrix m = noisy_step(300, 23);
    TrainedModel model = train_model(m, ClassifierSpec::defaults(ClassifierKind::Tree));
    double sum = 0;
    for (const auto& [f, v] : model.importance) {
        CHECK(v >= 0);
        sum += v;
    }
    CHECK(sum == doctest::Approx(1.0));
    CHECK(model.importance.at("signal") > model.importance.at("noise"));
}

TEST_CASE("stratified_split keeps both classes on both sides") {
    FeatureMatrix m = blobs(50, 31);  // 50 per class
    HeldOutSplit split = stratified_split(m, 0.15, 7);
    auto count = [](const FeatureMatrix& f, int cls) {
        size_t n = 0;
        for (int l : f.labels)
            if (l == cls) ++n;
        return n;
    };
    CHECK(split.held.n_rows() == 16);  // 15% of each class, rounded: 8 + 8
    CHECK(count(split.held, 0) == 8);
    CHECK(count(split.held, 1) == 8);
    CHECK(count(split.fit, 0) == 42);
    CHECK(split.fit.n_rows() + split.held.n_rows() == m.n_rows());
}

TEST_CASE("hyperparameter_search") {
    FeatureMatrix m = blobs(40, 41, 2.5);
    SearchResult res =
        hyperparameter_search(m, ClassifierKind::Tree, default_ranges(ClassifierKind::Tree), 8, 77);
    CHECK(res.trials.size() == 8);
    CHECK(res.best_macro_f1 >= 0.0);
    for (const auto& [spec, f1] : res.trials) {
        CHECK(f1 <= res.best_macro_f1 + 1e-12);
        double depth = spec.get("max_depth", -1);
        CHECK(depth >= 2);
        CHECK(depth <= 16);
        CHECK(depth == std::round(depth));  // integral parameter
    }
    // deterministic per seed
    SearchResult again =
        hyperparameter_search(m, ClassifierKind::Tree, default_ranges(ClassifierKind::Tree), 8, 77);
    CHECK(again.best_macro_f1 == res.best_macro_f1);
    CHECK(again.best.hyperparameters == res.best.hyperparameters);

    CHECK_THROWS_AS(hyperparameter_search(m, ClassifierKind::Tree,
                                          default_ranges(ClassifierKind::Tree), 0, 1),
                    StatsError);
}

TEST_CASE("model serialization round-trips predictions") {
    FeatureMatrix m = noisy_step(60, 53);
    for (auto kind : {ClassifierKind::Logistic, ClassifierKind::Tree, ClassifierKind::Forest}) {
        ClassifierSpec spec = ClassifierSpec::defaults(kind, 4);
        if (kind == ClassifierKind::Forest) spec.hyperparameters["n_trees"] = 15;
        TrainedModel model = train_model(m, spec);
        TrainedModel loaded = model_from_json(model_to_json(model));
        CHECK(loaded.feature_names == model.feature_names);
        CHECK(loaded.importance == model.importance);
        CHECK(loaded.predict_all(m) == model.predict_all(m));
    }

    // unsupported versions are rejected
    nlohmann::json bad = model_to_json(train_model(m, ClassifierSpec::defaults(ClassifierKind::Tree)));
    bad["format_version"] = 2;
    CHECK_THROWS(model_from_json(bad));
}

TEST_CASE("evaluate rejects mismatched feature spaces") {
    FeatureMatrix m = blobs(10, 1);
    TrainedModel model = train_model(m, ClassifierSpec::defaults(ClassifierKind::Logistic));
    FeatureMatrix other = m;
    other.feature_names = {"p", "q"};
    CHECK_THROWS_AS(evaluate(model, other), StatsError);
}
