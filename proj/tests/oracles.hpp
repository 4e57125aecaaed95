#ifndef KAM_TESTS_ORACLES_HPP
#define KAM_TESTS_ORACLES_HPP

// Independent reference computations. None of these call into the code they
// check beyond reading series coefficients.

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "kam/series.hpp"

namespace oracle {

using kam::Complex;
using kam::Series;
using kam::Vector;

/// Direct sum of c y^l e^{i<k,x>} over the stored terms.
inline Complex eval(const Series& p, const Vector& y, const Vector& x)
{
    Complex sum = 0.0;
    const int n = p.dim();
    for (const auto& [idx, c] : p.terms()) {
        double phase = 0.0;
        Complex mono = 1.0;
        for (int i = 0; i < n; ++i) {
            phase += idx.k(i) * x[i];
            for (int e = 0; e < idx.l(i); ++e) mono *= y[i];
        }
        sum += c * mono * std::polar(1.0, phase);
    }
    return sum;
}

/// Random real series with `terms` conjugate pairs.
inline Series random_series(std::mt19937_64& rng, int n, int K, int L, int terms, double amp = 1.0)
{
    std::uniform_int_distribution<int> kd(-K, K);
    std::uniform_int_distribution<int> ld(0, L);
    std::uniform_real_distribution<double> cd(-amp, amp);
    Series out(n, K, L);
    for (int t = 0; t < terms; ++t) {
        std::vector<int> k(n), l(n, 0);
        int ksum = 0;
        for (int i = 0; i < n; ++i) {
            k[i] = kd(rng);
            ksum += std::abs(k[i]);
        }
        if (ksum > K) continue;
        int budget = L;
        for (int i = 0; i < n; ++i) {
            std::uniform_int_distribution<int> d(0, budget);
            l[i] = d(rng);
            budget -= l[i];
        }
        if (rng() % 2)
            out += Series::cos_term(k, l, cd(rng), K, L);
        else
            out += Series::sin_term(k, l, cd(rng), K, L);
    }
    return out;
}

/// Exhaustive min of |<k,omega>| |k|_1^tau over the full box 0 < |k|_1 <= K in
/// 2D, ties broken towards the lexicographically smallest k with k_1 > 0 or
/// k_1 = 0, k_2 > 0.
struct DiophMin {
    double value = 0.0;
    std::vector<int> k;
};

inline DiophMin dioph_min_2d(double w1, double w2, double tau, int K)
{
    DiophMin best{INFINITY, {}};
    for (int a = -K; a <= K; ++a)
        for (int b = -K; b <= K; ++b) {
            const int nrm = std::abs(a) + std::abs(b);
            if (nrm == 0 || nrm > K) continue;
            if (a < 0 || (a == 0 && b < 0)) continue;
            const double v = std::abs(a * w1 + b * w2) * std::pow(static_cast<double>(nrm), tau);
            const std::vector<int> k{a, b};
            if (v < best.value || (v == best.value && k < best.k)) best = {v, k};
        }
    return best;
}

}  // namespace oracle

#endif
