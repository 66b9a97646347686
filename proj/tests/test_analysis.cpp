#include <doctest.h>

#include <cmath>
#include <random>

#include "mwp/analysis.hpp"

using namespace mwp;

TEST_CASE("kmeans basics") {
    SUBCASE("inertia history is non-increasing") {
        std::mt19937_64 rng(2);
        std::normal_distribution<double> g(0, 1);
        std::vector<std::vector<double>> pts;
        for (int i = 0; i < 60; ++i) pts.push_back({g(rng), g(rng)});
        KMeansResult res = kmeans(pts, 5, 9);
        for (size_t i = 1; i < res.inertia_history.size(); ++i)
            CHECK(res.inertia_history[i] <= res.inertia_history[i - 1] + 1e-9);
        CHECK(res.inertia == res.inertia_history.back());
        CHECK(res.assignments.size() == pts.size());
    }
    SUBCASE("k equal to the distinct point count gives inertia 0") {
        std::vector<std::vector<double>> pts = {{0, 0}, {5, 5}, {9, 1}, {0, 0}, {5, 5}};
        KMeansResult res = kmeans(pts, 3, 4);
        CHECK(res.inertia == doctest::Approx(0.0));
        CHECK(res.assignments[0] == res.assignments[3]);
        CHECK(res.assignments[1] == res.assignments[4]);
    }
    SUBCASE("deterministic per seed") {
        std::mt19937_64 rng(8);
        std::normal_distribution<double> g(0, 1);
        std::vector<std::vector<double>> pts;
        for (int i = 0; i < 40; ++i) pts.push_back({g(rng), g(rng), g(rng)});
        CHECK(kmeans(pts, 4, 123).assignments == kmeans(pts, 4, 123).assignments);
    }
    SUBCASE("bad k rejected") {
        std::vector<std::vector<double>> pts = {{0.0}, {1.0}};
        CHECK_THROWS(kmeans(pts, 3, 1));
        CHECK_THROWS(kmeans(pts, 0, 1));
    }
}

TEST_CASE("aggregate_importance") {
    // model 1 ranks a > b > c; model 2 ranks b > a and never saw c
    std::vector<std::map<std::string, double>> imps = {
        {{"a", 0.6}, {"b", 0.3}, {"c", 0.1}},
        {{"a", 0.2}, {"b", 0.8}},
    };
    ImportanceReport rep = aggregate_importance(imps, {"a", "b", "c"});
    REQUIRE(rep.entries.size() == 3);
    // a: ranks 1,2 -> mu 1.5; b: ranks 2,1 -> mu 1.5; c: ranks 3,3 (absent -> worst)
    CHECK(rep.entries[0].feature == "a");  // tie on mu broken by name
    CHECK(rep.entries[0].mean_rank == doctest::Approx(1.5));
    CHECK(rep.entries[1].feature == "b");
    CHECK(rep.entries[2].feature == "c");
    CHECK(rep.entries[2].mean_rank == doctest::Approx(3.0));
    CHECK(rep.entries[2].rank_std == doctest::Approx(0.0));
    // equal importance values rank deterministically by feature name
    ImportanceReport tie = aggregate_importance({{{"x", 0.5}, {"y", 0.5}}}, {"x", "y"});
    CHECK(tie.entries[0].feature == "x");
    CHECK(tie.entries[0].mean_rank == doctest::Approx(1.0));
}

TEST_CASE("subset_features by type") {
    CHECK(subset_features("W") == std::vector<std::string>{"Gx_world_knowledge"});
    CHECK(subset_features("L").size() == 9);
    CHECK(subset_features("M").size() == 13);
    CHECK(subset_features("L+M").size() == 22);
    CHECK(subset_features("L+M+W").size() == 23);
    CHECK(subset_features("").empty());
}

namespace {

// Synthetic L+M-style matrix: the label follows "Qx_np_count"; the math
// feature "Gx_arg_count" is noise.
std::pair<FeatureMatrix, FeatureMatrix> planted_matrices(int n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> np(0, 9);
    std::normal_distribution<double> g(0, 1);
    auto make = [&](int rows) {
        FeatureMatrix m;
        m.feature_names = {"Qx_np_count", "Gx_arg_count"};
        for (int i = 0; i < rows; ++i) {
            double v = np(rng);
            m.values.push_back({v, g(rng)});
            m.row_ids.push_back("r" + std::to_string(i));
            m.labels.push_back(v >= 5 ? 1 : 0);
        }
        return m;
    };
    return {make(n), make(n)};
}

}  // namespace

TEST_CASE("run_pipeline_cell learns a clean signal") {
    auto [train, test] = planted_matrices(120, 3);
    PipelineSettings settings;
    settings.eval_seeds = 2;
    settings.seed = 5;
    CellResult cell = run_pipeline_cell(train, test, settings);
    CHECK(cell.models.size() == 3);
    CHECK(cell.mean_macro_f1 > 0.9);
    REQUIRE(!cell.kept_features.empty());
    // every model agrees the planted feature matters most
    for (const auto& model : cell.models) {
        double best = -1;
        std::string best_name;
        for (const auto& [f, v] : model.importance)
            if (v > best) { best = v; best_name = f; }
        CHECK(best_name == "Qx_np_count");
    }
}

TEST_CASE("run_ablation grid") {
    auto [train, test] = planted_matrices(120, 13);
    PipelineSettings settings;
    settings.eval_seeds = 1;
    settings.seed = 2;
    std::map<std::string, std::pair<FeatureMatrix, FeatureMatrix>> splits;
    splits["only"] = {train, test};
    auto rows = run_ablation(splits, {"L", "M", "W", "L+M"}, settings);
    REQUIRE(rows.size() == 4);
    std::map<std::string, AblationRow> by_subset;
    for (auto& r : rows) by_subset[r.subset] = r;

    // L holds the signal; M is noise; W has no columns in this matrix
    REQUIRE(by_subset.at("L").mean_macro_f1);
    REQUIRE(by_subset.at("M").mean_macro_f1);
    CHECK(*by_subset.at("L").mean_macro_f1 > *by_subset.at("M").mean_macro_f1 + 0.2);
    CHECK(!by_subset.at("W").mean_macro_f1);
    CHECK(by_subset.at("W").note == "no features of this type present");
    CHECK(*by_subset.at("L+M").mean_macro_f1 > 0.9);
}

TEST_CASE("threshold_sweep recovers a planted step") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0, 10);
    std::normal_distribution<double> noise(0, 0.05);
    FeatureMatrix m;
    m.feature_names = {"Qx_np_count", "Gx_op_diversity"};
    std::vector<double> rates;
    for (int i = 0; i < 300; ++i) {
        double x = u(rng);
        m.values.push_back({x, u(rng)});
        m.row_ids.push_back("r" + std::to_string(i));
        // success collapses once the feature passes 4: step at a known value
        rates.push_back((x <= 4.0 ? 0.9 : 0.1) + noise(rng));
    }
    ThresholdReport rep = threshold_sweep(m, rates, 50, 20);
    const ThresholdRow* planted = nullptr;
    for (const auto& r : rep.rows)
        if (r.feature == "Qx_np_count") planted = &r;
    REQUIRE(planted);
    // within one grid step of the true threshold
    double lo = 0, hi = 10;
    for (const auto& v : m.column(0)) { lo = std::min(lo, v); hi = std::max(hi, v); }
    double step = (hi - lo) / 51.0;
    CHECK(std::fabs(planted->threshold - 4.0) <= step + 1e-9);
    CHECK(std::fabs(planted->t) > 5.0);
    CHECK(planted->p_value < 1e-4);
    CHECK(planted->diff > 0.5);  // mean(<=) - mean(>)

    // the noise feature fails the significance filter
    for (const auto& r : rep.rows) CHECK(r.feature != "Gx_op_diversity");
    bool noise_omitted = false;
    for (const auto& [f, why] : rep.omitted)
        if (f == "Gx_op_diversity") noise_omitted = true;
    CHECK(noise_omitted);
}

TEST_CASE("threshold_sweep omission reasons") {
    FeatureMatrix m;
    m.feature_names = {"constant", "tiny"};
    std::vector<double> rates;
    for (int i = 0; i < 10; ++i) {
        m.values.push_back({1.0, double(i)});
        rates.push_back(0.5);
    }
    ThresholdReport rep = threshold_sweep(m, rates, 50, 20);
    CHECK(rep.rows.empty());
    REQUIRE(rep.omitted.size() == 2);
    CHECK(rep.omitted[0].second == "constant feature");
    // 10 rows can never populate two sides of >= 20
    CHECK(rep.omitted[1].second.find("both sides") != std::string::npos);
}

TEST_CASE("cluster_and_correlate recovers a planted within-cluster correlation") {
    std::mt19937_64 rng(77);
    std::normal_distribution<double> g(0, 0.3);
    std::uniform_real_distribution<double> u(0, 1);
    FeatureMatrix m;
    m.feature_names = {"Qx_token_length", "Qx_arg_count", "Gx_arg_count"};
    std::vector<double> rates;
    // two well-separated math clusters; inside each, success falls strictly
    // as the linguistic feature Qx_token_length grows
    for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < 40; ++i) {
            double ling = i + u(rng) * 0.5;
            m.values.push_back({ling, c * 20.0 + g(rng), c * 20.0 + g(rng)});
            m.row_ids.push_back("c" + std::to_string(c) + "_" + std::to_string(i));
            rates.push_back(1.0 - i * 0.02);
        }
    }
    ClusterReport rep = cluster_and_correlate(m, rates, 2, 99, 10, 0.001);
    REQUIRE(!rep.correlations.empty());
    for (const auto& corr : rep.correlations) {
        CHECK(corr.feature == "Qx_token_length");
        CHECK(corr.rho < -0.9);
        CHECK(corr.p_value < 0.001);
        CHECK(corr.cluster_size >= 10);
    }
    // both clusters report the planted effect
    std::set<int> ids;
    for (const auto& corr : rep.correlations) ids.insert(corr.cluster_id);
    CHECK(ids.size() == 2);
}

TEST_CASE("feature_correlation_matrix") {
    FeatureMatrix m;
    m.feature_names = {"up", "down", "flat"};
    for (int i = 0; i < 12; ++i) m.values.push_back({double(i), double(-i), 1.0});
    CorrelationMatrix cm = feature_correlation_matrix(m);
    CHECK(cm.rho[0][0] == doctest::Approx(1.0));
    CHECK(cm.rho[0][1] == doctest::Approx(-1.0));
    CHECK(cm.stars[0][1] == "***");
    CHECK(std::isnan(cm.rho[0][2]));  // constant column undefined
    CHECK(cm.rho[1][0] == cm.rho[0][1]);
}

TEST_CASE("significance_stars thresholds") {
    CHECK(significance_stars(0.0005) == "***");
    CHECK(significance_stars(0.005) == "**");
    CHECK(significance_stars(0.03) == "*");
    CHECK(significance_stars(0.2) == "");
}
