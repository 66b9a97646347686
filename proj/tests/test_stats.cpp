#include <doctest.h>

#include <cmath>
#include <random>

#include "mwp/stats.hpp"

using namespace mwp;

TEST_CASE("fractional_ranks averages ties") {
    CHECK(fractional_ranks({10, 20, 30}) == std::vector<double>{1, 2, 3});
    CHECK(fractional_ranks({30, 10, 20}) == std::vector<double>{3, 1, 2});
    CHECK(fractional_ranks({1, 2, 2, 4}) == std::vector<double>{1, 2.5, 2.5, 4});
    CHECK(fractional_ranks({5, 5, 5}) == std::vector<double>{2, 2, 2});
}

TEST_CASE("spearman") {
    SUBCASE("perfect monotone relations") {
        Correlation c = spearman({1, 2, 3, 4}, {10, 20, 30, 40});
        CHECK(c.rho == doctest::Approx(1.0));
        CHECK(c.p_value == 0.0);
        Correlation r = spearman({1, 2, 3, 4}, {8, 6, 4, 2});
        CHECK(r.rho == doctest::Approx(-1.0));
        // rho is rank-based: any monotone transform gives the same value
        Correlation m = spearman({1, 2, 3, 4}, {1, 100, 10000, 1000000});
        CHECK(m.rho == doctest::Approx(1.0));
    }
    SUBCASE("hand-computed swap pattern") {
        // x = 1..6, y = 2,1,4,3,6,5: sum d^2 = 6, rho = 1 - 36/210
        Correlation c = spearman({1, 2, 3, 4, 5, 6}, {2, 1, 4, 3, 6, 5});
        CHECK(c.rho == doctest::Approx(0.828571428571429).epsilon(1e-12));
        CHECK(c.p_value == doctest::Approx(0.0415626822157434).epsilon(1e-9));
    }
    SUBCASE("hand-computed tie case") {
        Correlation c = spearman({1, 2, 2, 4, 5}, {3, 1, 4, 1, 5});
        CHECK(c.rho == doctest::Approx(0.289473684210526).epsilon(1e-12));
        CHECK(c.p_value == doctest::Approx(0.636644754749490).epsilon(1e-9));
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(spearman({1, 2}, {1, 2}), StatsError);
        CHECK_THROWS_AS(spearman({1, 2, 3}, {1, 2}), StatsError);
        CHECK_THROWS_AS(spearman({5, 5, 5}, {1, 2, 3}), StatsError);  // constant vector
    }
}

TEST_CASE("student_t_two_sided_p sanity") {
    CHECK(student_t_two_sided_p(0.0, 10) == doctest::Approx(1.0));
    CHECK(student_t_two_sided_p(3.0, 10) == student_t_two_sided_p(-3.0, 10));
    CHECK(student_t_two_sided_p(5.0, 10) < student_t_two_sided_p(2.0, 10));
    // df=1 is the Cauchy distribution: P(|T| > 1) = 1/2
    CHECK(student_t_two_sided_p(1.0, 1) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("t_test: Welch, hand-computed cases") {
    SUBCASE("case A") {
        TTestResult r = t_test({1, 2, 3, 4, 5}, {2, 4, 6, 8, 10, 12});
        CHECK(r.t == doctest::Approx(-2.37635410314402).epsilon(1e-10));
        CHECK(r.df == doctest::Approx(6.97225572979493).epsilon(1e-10));
        CHECK(r.p_value == doctest::Approx(0.0492843382067305).epsilon(1e-9));
    }
    SUBCASE("case B") {
        TTestResult r = t_test({10.1, 10.2, 9.9, 10.0, 10.3, 9.8}, {12.0, 11.5, 12.5, 11.8});
        CHECK(r.t == doctest::Approx(-8.49705831449921).epsilon(1e-10));
        CHECK(r.p_value == doctest::Approx(0.00130811495004007).epsilon(1e-9));
    }
    SUBCASE("degenerate zero-variance sides use sentinels") {
        TTestResult same = t_test({3, 3, 3}, {3, 3});
        CHECK(same.t == 0.0);
        CHECK(same.p_value == 1.0);
        TTestResult apart = t_test({3, 3, 3}, {5, 5});
        CHECK(std::isinf(apart.t));
        CHECK(apart.t < 0);
        CHECK(apart.p_value == 0.0);
    }
    SUBCASE("needs two samples per side") {
        CHECK_THROWS_AS(t_test({1}, {2, 3}), StatsError);
    }
}

TEST_CASE("scaler") {
    FeatureMatrix m;
    m.feature_names = {"a", "b", "c"};
    m.values = {{1, 5, 7}, {3, 5, NAN}, {5, 5, 11}};

    Scaler s = fit_scaler(m);
    // "b" is constant and dropped
    REQUIRE(s.kept_names == std::vector<std::string>{"a", "c"});
    REQUIRE(s.dropped == std::vector<std::string>{"b"});
    CHECK(s.means[0] == doctest::Approx(3.0));

    FeatureMatrix out = apply_scaler(s, m);
    REQUIRE(out.n_cols() == 2);
    // each kept column has mean 0 and population sd 1
    for (size_t c = 0; c < 2; ++c) {
        auto col = out.column(c);
        CHECK(mean(col) == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(stddev_population(col) == doctest::Approx(1.0));
    }
    // the NaN in "c" was imputed with the train mean -> exactly 0 after scaling
    CHECK(out.values[1][1] == doctest::Approx(0.0));

    SUBCASE("apply is column-order independent") {
        FeatureMatrix shuffled;
        shuffled.feature_names = {"c", "b", "a"};
        for (const auto& row : m.values) shuffled.values.push_back({row[2], row[1], row[0]});
        FeatureMatrix out2 = apply_scaler(s, shuffled);
        CHECK(out2.values == out.values);
    }
    SUBCASE("missing column is an error") {
        FeatureMatrix partial;
        partial.feature_names = {"a"};
        partial.values = {{1.0}};
        CHECK_THROWS_AS(apply_scaler(s, partial), StatsError);
    }
}

TEST_CASE("prune_correlated") {
    std::mt19937_64 rng(7);
    std::normal_distribution<double> g(0, 1);
    FeatureMatrix m;
    m.feature_names = {"x", "x_copy", "noise"};
    for (int r = 0; r < 50; ++r) {
        double x = g(rng);
        m.values.push_back({x, 2 * x + 1, g(rng)});
    }
    PruneResult res = prune_correlated(m, 0.5);
    // exactly one of the duplicated pair survives
    REQUIRE(res.dropped.size() == 1);
    CHECK(res.kept.size() == 2);
    bool has_x = std::find(res.kept.begin(), res.kept.end(), "x") != res.kept.end();
    bool has_copy = std::find(res.kept.begin(), res.kept.end(), "x_copy") != res.kept.end();
    CHECK(has_x != has_copy);
    CHECK(std::find(res.kept.begin(), res.kept.end(), "noise") != res.kept.end());

    // post-audit: no surviving pair above the threshold
    FeatureMatrix kept = select_by_names(m, res.kept);
    for (size_t i = 0; i < kept.n_cols(); ++i)
        for (size_t j = i + 1; j < kept.n_cols(); ++j) {
            auto rho = spearman(kept.column(i), kept.column(j)).rho;
            CHECK(std::fabs(rho) <= 0.5);
        }
}

TEST_CASE("prune_correlated tie drops the later column") {
    // two identical columns: mean-|corr| profiles tie, so index 1 goes
    FeatureMatrix m;
    m.feature_names = {"first", "second"};
    for (int r = 0; r < 10; ++r) m.values.push_back({double(r), double(r)});
    PruneResult res = prune_correlated(m, 0.5);
    REQUIRE(res.dropped.size() == 1);
    CHECK(res.dropped[0].first == "second");
    CHECK(res.kept == std::vector<std::string>{"first"});
}

TEST_CASE("oversample balances classes deterministically") {
    FeatureMatrix m;
    m.feature_names = {"f"};
    for (int r = 0; r < 9; ++r) {
        m.values.push_back({double(r)});
        m.row_ids.push_back("r" + std::to_string(r));
        m.labels.push_back(r < 7 ? 0 : 1);
    }
    FeatureMatrix b = oversample(m, 42);
    size_t pos = 0, neg = 0;
    for (int l : b.labels) (l == 1 ? pos : neg)++;
    CHECK(pos == neg);
    CHECK(b.n_rows() == 14);
    // duplicates come from the minority class only
    for (size_t r = 9; r < b.n_rows(); ++r) CHECK(b.labels[r] == 1);
    // deterministic per seed
    CHECK(oversample(m, 42).row_ids == b.row_ids);
    CHECK(oversample(m, 43).row_ids != b.row_ids);

    FeatureMatrix single = m;
    single.labels.assign(9, 0);
    CHECK_THROWS_AS(oversample(single, 1), StatsError);
}

TEST_CASE("classification_metrics") {
    // gold:      0 0 0 1 1
    // predicted: 0 1 0 1 0
    Metrics m = classification_metrics({0, 0, 0, 1, 1}, {0, 1, 0, 1, 0});
    CHECK(m.accuracy == doctest::Approx(0.6));
    // class 0: tp=2 fp=1 fn=1 -> f1 = 4/6; class 1: tp=1 fp=1 fn=1 -> f1 = 2/4
    CHECK(m.f1_per_class[0] == doctest::Approx(2.0 / 3.0));
    CHECK(m.f1_per_class[1] == doctest::Approx(0.5));
    CHECK(m.macro_f1 == doctest::Approx((2.0 / 3.0 + 0.5) / 2));
    // perfect prediction
    CHECK(classification_metrics({0, 1}, {0, 1}).macro_f1 == doctest::Approx(1.0));
    CHECK_THROWS_AS(classification_metrics({0}, {0, 1}), StatsError);
}
