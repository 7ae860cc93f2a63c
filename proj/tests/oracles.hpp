// Test-only brute-force oracles, kept independent of the library's
// implementations: definition-direct pearson, O(n^2) fractional ranks,
// O(n^2) pair-counting tau-b, and disagreement-weighted kappa.
#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace oracles {

inline double pearson_direct(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double sum_x = 0, sum_y = 0, sum_xy = 0, sum_xx = 0, sum_yy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sum_x += x[i];
        sum_y += y[i];
        sum_xy += x[i] * y[i];
        sum_xx += x[i] * x[i];
        sum_yy += y[i] * y[i];
    }
    return (n * sum_xy - sum_x * sum_y) /
           std::sqrt((n * sum_xx - sum_x * sum_x) * (n * sum_yy - sum_y * sum_y));
}

// fractional rank by pairwise counting: r + (s - 1) / 2
inline std::vector<double> rank_bruteforce(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t below = 0, equal = 0;
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (v[j] < v[i]) ++below;
            if (v[j] == v[i]) ++equal;
        }
        out[i] = static_cast<double>(below) + 1.0 +
                 (static_cast<double>(equal) - 1.0) / 2.0;
    }
    return out;
}

inline double spearman_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    return pearson_direct(rank_bruteforce(x), rank_bruteforce(y));
}

// tau-b by enumerating every pair: ties_x / ties_y here count all pairs tied
// in that variable (including pairs tied in both)
inline double kendall_bruteforce(const std::vector<double>& x, const std::vector<double>& y) {
    long long concordant = 0, discordant = 0, ties_x = 0, ties_y = 0;
    const std::size_t n = x.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0) ++ties_x;
            if (dy == 0) ++ties_y;
            if (dx == 0 || dy == 0) continue;
            if (dx * dy > 0) {
                ++concordant;
            } else {
                ++discordant;
            }
        }
    }
    const double n0 = static_cast<double>(n) * (n - 1) / 2.0;
    return (static_cast<double>(concordant) - static_cast<double>(discordant)) /
           (std::sqrt(n0 - static_cast<double>(ties_x)) *
            std::sqrt(n0 - static_cast<double>(ties_y)));
}

// kappa via disagreement weights v_ij = |i - j|: kappa = 1 - sum(vO)/sum(vE)
inline double kappa_oracle(const std::vector<int>& a, const std::vector<int>& b) {
    constexpr int k = 5;
    double observed[k][k] = {};
    double row[k] = {}, col[k] = {};
    const auto n = static_cast<double>(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        observed[a[i] - 1][b[i] - 1] += 1.0;
        row[a[i] - 1] += 1.0;
        col[b[i] - 1] += 1.0;
    }
    double num = 0, den = 0;
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            const double v = std::abs(i - j);
            num += v * observed[i][j];
            den += v * row[i] * col[j] / n;
        }
    }
    if (den == 0) throw std::runtime_error("kappa oracle: degenerate marginals");
    return 1.0 - num / den;
}

}  // namespace oracles
