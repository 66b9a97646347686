#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mwp {

struct StatsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FeatureMatrix {
    std::vector<std::string> feature_names;
    std::vector<std::string> row_ids;
    std::vector<std::vector<double>> values;  // rows x cols, NaN = missing
    std::vector<int> labels;                  // empty, or one {0,1} label per row

    size_t n_rows() const { return values.size(); }
    size_t n_cols() const { return feature_names.size(); }

    std::vector<double> column(size_t c) const {
        std::vector<double> col(values.size());
        for (size_t r = 0; r < values.size(); ++r) col[r] = values[r][c];
        return col;
    }

    FeatureMatrix select_columns(const std::vector<size_t>& cols) const {
        FeatureMatrix m;
        m.row_ids = row_ids;
        m.labels = labels;
        for (size_t c : cols) m.feature_names.push_back(feature_names[c]);
        m.values.reserve(values.size());
        for (const auto& row : values) {
            std::vector<double> r;
            r.reserve(cols.size());
            for (size_t c : cols) r.push_back(row[c]);
            m.values.push_back(std::move(r));
        }
        return m;
    }
};

namespace detail {

// Regularized incomplete beta I_x(a, b) via the continued fraction
// (Lentz's method), standard numerical-recipes formulation.
inline double betacf(double a, double b, double x) {
    const double eps = 1e-14, fpmin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 500; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

inline double inc_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      a * std::log(x) + b * std::log(1.0 - x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace detail

// Two-sided p-value of |t| under Student's t with df degrees of freedom.
inline double student_t_two_sided_p(double t, double df) {
    if (!std::isfinite(t)) return 0.0;
    if (df <= 0) return 1.0;
    return detail::inc_beta(df / 2.0, 0.5, df / (df + t * t));
}

// Fractional ranks, average rank for ties.
inline std::vector<double> fractional_ranks(const std::vector<double>& x) {
    const size_t n = x.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
        double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0 || syy == 0) throw StatsError("undefined correlation: constant vector");
    return sxy / std::sqrt(sxx * syy);
}

struct Correlation {
    double rho;
    double p_value;
};

// Spearman rho = Pearson over fractional ranks; p via the t approximation
// with n-2 degrees of freedom.
inline Correlation spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3)
        throw StatsError("spearman: need equal-length vectors with n >= 3");
    double rho = pearson(fractional_ranks(x), fractional_ranks(y));
    double n = static_cast<double>(x.size());
    double p;
    if (std::fabs(rho) >= 1.0) {
        p = 0.0;
    } else {
        double t = rho * std::sqrt((n - 2.0) / (1.0 - rho * rho));
        p = student_t_two_sided_p(t, n - 2.0);
    }
    return {rho, p};
}

struct TTestResult {
    double t;
    double p_value;
    double df;
};

// Welch's unequal-variance two-sample t-test, two-sided.
inline TTestResult t_test(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2) throw StatsError("t_test: need >= 2 samples per side");
    double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    double ma = std::accumulate(a.begin(), a.end(), 0.0) / na;
    double mb = std::accumulate(b.begin(), b.end(), 0.0) / nb;
    double va = 0, vb = 0;
    for (double v : a) va += (v - ma) * (v - ma);
    for (double v : b) vb += (v - mb) * (v - mb);
    va /= (na - 1.0);
    vb /= (nb - 1.0);
    double se2 = va / na + vb / nb;
    if (se2 == 0.0) {
        if (ma == mb) return {0.0, 1.0, na + nb - 2.0};
        double inf = std::numeric_limits<double>::infinity();
        return {ma > mb ? inf : -inf, 0.0, na + nb - 2.0};
    }
    double t = (ma - mb) / std::sqrt(se2);
    double df = se2 * se2 /
                ((va / na) * (va / na) / (na - 1.0) + (vb / nb) * (vb / nb) / (nb - 1.0));
    return {t, student_t_two_sided_p(t, df), df};
}

// Fit on training data only; missing values are imputed with the training
// column mean before scaling. Population sigma. Zero-variance columns are
// dropped with a warning.
struct Scaler {
    std::vector<std::string> kept_names;
    std::vector<size_t> kept_cols;  // indices into the fitted matrix's columns
    std::vector<double> means;
    std::vector<double> stds;
    std::vector<std::string> dropped;
};

inline Scaler fit_scaler(const FeatureMatrix& train) {
    Scaler s;
    for (size_t c = 0; c < train.n_cols(); ++c) {
        double sum = 0;
        size_t n = 0;
        for (size_t r = 0; r < train.n_rows(); ++r) {
            double v = train.values[r][c];
            if (!std::isnan(v)) { sum += v; ++n; }
        }
        double mean = n > 0 ? sum / n : 0.0;
        double var = 0;
        for (size_t r = 0; r < train.n_rows(); ++r) {
            double v = train.values[r][c];
            double x = std::isnan(v) ? mean : v;
            var += (x - mean) * (x - mean);
        }
        var /= train.n_rows();  // population variance, imputed values included
        if (var == 0.0 || n == 0) {
            s.dropped.push_back(train.feature_names[c]);
            continue;
        }
        s.kept_cols.push_back(c);
        s.kept_names.push_back(train.feature_names[c]);
        s.means.push_back(mean);
        s.stds.push_back(std::sqrt(var));
    }
    return s;
}

inline FeatureMatrix apply_scaler(const Scaler& s, const FeatureMatrix& m) {
    FeatureMatrix out;
    out.row_ids = m.row_ids;
    out.labels = m.labels;
    out.feature_names = s.kept_names;
    out.values.reserve(m.n_rows());
    // columns are looked up by name so test matrices may be column-reordered
    std::vector<size_t> src_cols;
    for (const auto& name : s.kept_names) {
        auto it = std::find(m.feature_names.begin(), m.feature_names.end(), name);
        if (it == m.feature_names.end())
            throw StatsError("apply_scaler: matrix is missing column '" + name + "'");
        src_cols.push_back(static_cast<size_t>(it - m.feature_names.begin()));
    }
    for (size_t r = 0; r < m.n_rows(); ++r) {
        std::vector<double> row(s.kept_cols.size());
        for (size_t k = 0; k < src_cols.size(); ++k) {
            double v = m.values[r][src_cols[k]];
            if (std::isnan(v)) v = s.means[k];
            row[k] = (v - s.means[k]) / s.stds[k];
        }
        out.values.push_back(std::move(row));
    }
    return out;
}

struct PruneResult {
    std::vector<std::string> kept;
    std::vector<std::pair<std::string, std::string>> dropped;  // (feature, reason)
};

namespace detail {

// Spearman over complete-case rows of two columns; nullopt when undefined.
inline std::optional<double> column_spearman(const FeatureMatrix& m, size_t a, size_t b) {
    std::vector<double> x, y;
    for (size_t r = 0; r < m.n_rows(); ++r) {
        double va = m.values[r][a], vb = m.values[r][b];
        if (!std::isnan(va) && !std::isnan(vb)) { x.push_back(va); y.push_back(vb); }
    }
    if (x.size() < 3) return std::nullopt;
    try {
        return spearman(x, y).rho;
    } catch (const StatsError&) {
        return std::nullopt;
    }
}

}  // namespace detail

// Iteratively drop one feature of the most-correlated pair (the one with the
// larger mean absolute correlation to the remaining features; tie goes to the
// later column) until no pair exceeds the threshold.
inline PruneResult prune_correlated(const FeatureMatrix& m, double threshold = 0.5) {
    if (m.n_cols() < 2) throw StatsError("prune_correlated: need >= 2 features");
    const size_t d = m.n_cols();
    std::vector<std::vector<double>> corr(d, std::vector<double>(d, 0.0));
    for (size_t i = 0; i < d; ++i)
        for (size_t j = i + 1; j < d; ++j) {
            auto rho = detail::column_spearman(m, i, j);
            corr[i][j] = corr[j][i] = rho ? std::fabs(*rho) : 0.0;
        }

    std::vector<bool> alive(d, true);
    PruneResult res;
    while (true) {
        double best = threshold;
        size_t bi = d, bj = d;
        for (size_t i = 0; i < d; ++i) {
            if (!alive[i]) continue;
            for (size_t j = i + 1; j < d; ++j) {
                if (!alive[j]) continue;
                if (corr[i][j] > best) { best = corr[i][j]; bi = i; bj = j; }
            }
        }
        if (bi == d) break;
        auto mean_abs = [&](size_t c) {
            double sum = 0;
            size_t n = 0;
            for (size_t k = 0; k < d; ++k) {
                if (!alive[k] || k == c) continue;
                sum += corr[c][k];
                ++n;
            }
            return n > 0 ? sum / n : 0.0;
        };
        size_t drop = mean_abs(bj) >= mean_abs(bi) ? bj : bi;  // tie -> later column
        size_t keep = drop == bi ? bj : bi;
        alive[drop] = false;
        res.dropped.emplace_back(m.feature_names[drop],
                                 "|rho|=" + std::to_string(corr[bi][bj]) + " with " +
                                     m.feature_names[keep]);
    }
    for (size_t i = 0; i < d; ++i)
        if (alive[i]) res.kept.push_back(m.feature_names[i]);
    return res;
}

inline FeatureMatrix select_by_names(const FeatureMatrix& m, const std::vector<std::string>& names) {
    std::vector<size_t> cols;
    for (const auto& n : names) {
        auto it = std::find(m.feature_names.begin(), m.feature_names.end(), n);
        if (it == m.feature_names.end()) throw StatsError("missing column '" + n + "'");
        cols.push_back(static_cast<size_t>(it - m.feature_names.begin()));
    }
    return m.select_columns(cols);
}

// Random oversampling: minority rows duplicated with replacement until the
// classes balance. Deterministic per seed.
inline FeatureMatrix oversample(const FeatureMatrix& m, uint64_t seed) {
    if (m.labels.size() != m.n_rows()) throw StatsError("oversample: labels required");
    std::vector<size_t> pos, neg;
    for (size_t r = 0; r < m.n_rows(); ++r) (m.labels[r] == 1 ? pos : neg).push_back(r);
    if (pos.empty() || neg.empty()) throw StatsError("oversample: single-class input");
    FeatureMatrix out = m;
    auto& minority = pos.size() < neg.size() ? pos : neg;
    size_t deficit = std::max(pos.size(), neg.size()) - minority.size();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<size_t> pick(0, minority.size() - 1);
    for (size_t i = 0; i < deficit; ++i) {
        size_t r = minority[pick(rng)];
        out.values.push_back(m.values[r]);
        out.row_ids.push_back(m.row_ids[r]);
        out.labels.push_back(m.labels[r]);
    }
    return out;
}

struct Metrics {
    double accuracy = 0;
    double macro_f1 = 0;
    std::map<int, double> f1_per_class;
};

inline Metrics classification_metrics(const std::vector<int>& gold, const std::vector<int>& predicted) {
    if (gold.size() != predicted.size() || gold.empty())
        throw StatsError("classification_metrics: size mismatch or empty");
    size_t correct = 0;
    for (size_t i = 0; i < gold.size(); ++i)
        if (gold[i] == predicted[i]) ++correct;
    Metrics mtr;
    mtr.accuracy = static_cast<double>(correct) / gold.size();
    for (int cls : {0, 1}) {
        size_t tp = 0, fp = 0, fn = 0;
        for (size_t i = 0; i < gold.size(); ++i) {
            if (predicted[i] == cls && gold[i] == cls) ++tp;
            else if (predicted[i] == cls) ++fp;
            else if (gold[i] == cls) ++fn;
        }
        double f1 = (2 * tp + fp + fn) > 0 ? 2.0 * tp / (2.0 * tp + fp + fn) : 0.0;
        mtr.f1_per_class[cls] = f1;
    }
    mtr.macro_f1 = (mtr.f1_per_class[0] + mtr.f1_per_class[1]) / 2.0;
    return mtr;
}

inline double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

inline double stddev_population(const std::vector<double>& v) {
    double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / v.size());
}

}  // namespace mwp
