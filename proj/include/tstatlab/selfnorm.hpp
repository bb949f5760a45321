#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace tstatlab {

// Summary statistics of one sample: the sum S, the Euclidean norm V, the
// sample standard deviation, the t-statistic and the squared self-normalized
// sum u* = (S/V)^2 with its degenerate cases mapped to zero.
struct TStatSummary {
    int n = 0;
    double sum = 0.0;           // S
    double vnorm = 0.0;         // V = sqrt(sum of squares)
    double sigma_hat = 0.0;
    double t = 0.0;
    double u_star = 0.0;        // in [0, n]
    bool degenerate_all_equal = false;  // all entries equal and nonzero
    bool degenerate_all_zero = false;
};

// Threshold map x -> n x / (n + x - 1). t^2 > x holds exactly when
// u* exceeds this value; strictly increasing, maps [0,inf) onto [0,n).
inline double ustar_threshold(int n, double x) {
    if (n < 2) throw std::invalid_argument("ustar_threshold: n must be >= 2");
    if (x < 0.0) throw std::invalid_argument("ustar_threshold: x must be >= 0");
    if (std::isinf(x)) return static_cast<double>(n);
    return static_cast<double>(n) * x / (static_cast<double>(n) + x - 1.0);
}

// Inverse of ustar_threshold: z -> z (n-1) / (n - z) on [0, n).
inline double ustar_inverse_threshold(int n, double z) {
    if (n < 2) throw std::invalid_argument("ustar_inverse_threshold: n must be >= 2");
    if (z < 0.0 || z >= static_cast<double>(n))
        throw std::out_of_range("ustar_inverse_threshold: z out of [0, n)");
    return z * (static_cast<double>(n) - 1.0) / (static_cast<double>(n) - z);
}

inline TStatSummary compute_stats(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < 2) throw std::invalid_argument("compute_stats: need at least 2 observations");

    TStatSummary s;
    s.n = static_cast<int>(n);

    bool all_equal = true;
    for (std::size_t i = 1; i < n; ++i) {
        if (sample[i] != sample[0]) {
            all_equal = false;
            break;
        }
    }

    // accumulate in sorted order so t and u* are exactly permutation
    // invariant (floating-point addition is order sensitive)
    thread_local std::vector<double> scratch;
    scratch.assign(sample.begin(), sample.end());
    std::sort(scratch.begin(), scratch.end());

    double sum = 0.0, sumsq = 0.0;
    for (double x : scratch) {
        sum += x;
        sumsq += x * x;
    }
    s.sum = sum;
    s.vnorm = std::sqrt(sumsq);

    // Degeneracy is an exact equality event; no epsilon-collapsing of
    // nearly equal observations.
    if (all_equal) {
        s.degenerate_all_zero = (sample[0] == 0.0);
        s.degenerate_all_equal = !s.degenerate_all_zero;
        s.sigma_hat = 0.0;
        s.t = 0.0;
        s.u_star = 0.0;
        return s;
    }

    const double mean = sum / static_cast<double>(n);
    double dev2 = 0.0;
    for (double x : scratch) {
        const double d = x - mean;
        dev2 += d * d;
    }
    s.sigma_hat = std::sqrt(dev2 / (static_cast<double>(n) - 1.0));

    const double nd = static_cast<double>(n);
    double u = 0.0;
    if (sumsq > 0.0) {
        const double ratio = sum / s.vnorm;
        u = ratio * ratio;
        if (u > nd) u = nd;  // Cauchy-Schwarz; excess is rounding
    }
    // (S/V)^2 = n within relative 1e-12 is the all-equal-nonzero event up to
    // rounding; u* is 0 there by definition.
    if (std::abs(u - nd) <= 1e-12 * nd) {
        s.u_star = 0.0;
        s.t = 0.0;
        return s;
    }
    s.u_star = u;
    // t recovered through the exact algebraic transform t^2 = (n-1)u/(n-u).
    // This keeps the threshold identity with ustar_threshold consistent at
    // the last bit, which a direct S/(sqrt(n) sigma) evaluation does not.
    const double t2 = (nd - 1.0) * u / (nd - u);
    double tval = std::sqrt(t2);
    // squaring the rounded root must not overshoot the transform value,
    // otherwise t*t > x can disagree with u* > threshold(x) at exact ties
    if (tval * tval > t2) tval = std::nextafter(tval, 0.0);
    s.t = std::copysign(tval, sum);
    return s;
}

}  // namespace tstatlab
