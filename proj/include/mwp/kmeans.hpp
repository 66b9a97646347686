#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace mwp {

struct KMeansResult {
    std::vector<std::vector<double>> centroids;  // k x d
    std::vector<int> assignments;                // one per point
    std::vector<double> inertia_history;         // inertia after each Lloyd iteration
    double inertia = 0;
    int iterations = 0;
};

namespace detail {

inline double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding. Runs to assignment fixpoint or
// the iteration cap. Empty clusters keep their previous centroid.
inline KMeansResult kmeans(const std::vector<std::vector<double>>& points, int k, uint64_t seed,
                           int max_iters = 300) {
    const size_t n = points.size();
    if (k <= 0 || static_cast<size_t>(k) > n)
        throw std::runtime_error("kmeans: k must be in [1, n_points]");
    const size_t d = points[0].size();
    std::mt19937_64 rng(seed);

    // k-means++ seeding
    KMeansResult res;
    std::uniform_int_distribution<size_t> first(0, n - 1);
    res.centroids.push_back(points[first(rng)]);
    std::vector<double> min_d2(n);
    while (res.centroids.size() < static_cast<size_t>(k)) {
        double total = 0;
        for (size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : res.centroids) best = std::min(best, detail::sq_dist(points[i], c));
            min_d2[i] = best;
            total += best;
        }
        size_t chosen = 0;
        if (total > 0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng), acc = 0;
            for (size_t i = 0; i < n; ++i) {
                acc += min_d2[i];
                if (acc >= target) { chosen = i; break; }
            }
        } else {
            chosen = first(rng);  // all points coincide with current centroids
        }
        res.centroids.push_back(points[chosen]);
    }

    res.assignments.assign(n, -1);
    for (int it = 0; it < max_iters; ++it) {
        bool changed = false;
        double inertia = 0;
        for (size_t i = 0; i < n; ++i) {
            int best = 0;
            double bd = detail::sq_dist(points[i], res.centroids[0]);
            for (int c = 1; c < k; ++c) {
                double dd = detail::sq_dist(points[i], res.centroids[c]);
                if (dd < bd) { bd = dd; best = c; }
            }
            if (res.assignments[i] != best) { res.assignments[i] = best; changed = true; }
            inertia += bd;
        }
        res.inertia_history.push_back(inertia);
        res.inertia = inertia;
        res.iterations = it + 1;
        if (!changed) break;
        std::vector<std::vector<double>> sums(k, std::vector<double>(d, 0.0));
        std::vector<size_t> counts(k, 0);
        for (size_t i = 0; i < n; ++i) {
            ++counts[res.assignments[i]];
            for (size_t j = 0; j < d; ++j) sums[res.assignments[i]][j] += points[i][j];
        }
        for (int c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;
            for (size_t j = 0; j < d; ++j) res.centroids[c][j] = sums[c][j] / counts[c];
        }
    }
    return res;
}

}  // namespace mwp
