#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tstatlab/rng.hpp"

namespace tstatlab {

// u_n = (sum x_i)^2 / (sum x_i^2), in [0, n] by Cauchy-Schwarz.
inline double u_n(std::span<const double> x) {
    double s = 0.0, ss = 0.0;
    for (double v : x) {
        s += v;
        ss += v * v;
    }
    if (ss == 0.0) throw std::invalid_argument("u_n: undefined for the zero vector");
    return s * s / ss;
}

enum class GeometryMode { lemma1_min, lemma2_corner_max };

struct GeometryReport {
    int n = 0;
    double h = 0.0;
    GeometryMode mode = GeometryMode::lemma1_min;
    double numeric_extremum = 0.0;
    double analytic_extremum = 0.0;
    std::vector<double> arg;              // full vector including x1
    double constant_checked = 0.0;        // C1 or C2 under test
    double gap = 0.0;                     // |numeric - analytic|
    double constraint_residual = 0.0;
    bool feasible = true;
    bool pass = false;
    // lemma 2 extras
    double corner_max_formula = 0.0;
    double max_formula_mismatch = 0.0;    // corner formula vs direct evaluation
    bool necessity_checked = false;       // odd n only
    bool necessity_violated_above_bound = false;
    std::string diagnostic;
};

namespace detail {

inline double objective_n_minus_un(double x1, std::span<const double> rest) {
    double s = x1, ss = x1 * x1;
    for (double v : rest) {
        s += v;
        ss += v * v;
    }
    const double n = static_cast<double>(rest.size() + 1);
    return n - s * s / ss;
}

template <class F>
double golden_min_1d(const F& f, double a, double b, double xtol, double& xbest) {
    const double invphi = 0.6180339887498949;
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    int guard = 0;
    while (b - a > xtol && ++guard < 300) {
        if (f1 > f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + invphi * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - invphi * (b - a);
            f1 = f(x1);
        }
    }
    xbest = f1 < f2 ? x1 : x2;
    double fbest = std::min(f1, f2);
    for (double cand : {a, b}) {
        const double fc = f(cand);
        if (fc < fbest) {
            fbest = fc;
            xbest = cand;
        }
    }
    return fbest;
}

}  // namespace detail

// Minimizes n - u_n subject to x1 fixed and |x2 - x1| >= h |x1|, against the
// closed-form optimum h^2 / (2 + 2h + h^2). Multi-start projected descent
// with numerical gradients, seeded with the analytic candidate, followed by
// a cyclic golden-section polish.
inline GeometryReport lemma1_verify(int n, double h, double x1 = 1.0) {
    if (n < 2 || n > 8) throw std::invalid_argument("lemma1_verify: n must be in [2, 8]");
    if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("lemma1_verify: h must be in (0,1)");
    if (x1 == 0.0) throw std::invalid_argument("lemma1_verify: x1 must be nonzero");

    const double ax1 = std::abs(x1);
    const double bound = h * ax1;
    const int dim = n - 1;

    auto project = [&](std::vector<double>& y) {
        if (std::abs(y[0] - x1) < bound)
            y[0] = (y[0] >= x1) ? x1 + bound : x1 - bound;
    };
    auto fval = [&](const std::vector<double>& y) { return detail::objective_n_minus_un(x1, y); };

    auto gradient = [&](const std::vector<double>& y, std::vector<double>& g) {
        const double step = 1e-7;
        std::vector<double> yy = y;
        for (int i = 0; i < dim; ++i) {
            yy[i] = y[i] + step;
            const double fp = fval(yy);
            yy[i] = y[i] - step;
            const double fm = fval(yy);
            yy[i] = y[i];
            g[i] = (fp - fm) / (2.0 * step);
        }
    };

    std::vector<double> best_y;
    double best_f = std::numeric_limits<double>::infinity();

    std::vector<std::vector<double>> starts;
    {
        // analytic candidate: x2 on the near boundary, the rest at the
        // stationary value (x1^2 + x2^2) / (x1 + x2)
        std::vector<double> y(dim);
        y[0] = x1 + std::copysign(bound, x1);
        const double xj = (x1 * x1 + y[0] * y[0]) / (x1 + y[0]);
        for (int i = 1; i < dim; ++i) y[i] = xj;
        starts.push_back(y);
        y[0] = x1 - std::copysign(bound, x1);
        for (int i = 1; i < dim; ++i) y[i] = (x1 * x1 + y[0] * y[0]) / (x1 + y[0]);
        starts.push_back(y);
    }
    RandomStream rs(0x1ef7a5u, static_cast<std::uint64_t>(n) * 1024 + static_cast<std::uint64_t>(h * 1000));
    while (starts.size() < 34) {
        std::vector<double> y(dim);
        for (int i = 0; i < dim; ++i) y[i] = x1 * rs.uniform(-2.0, 3.0);
        project(y);
        starts.push_back(std::move(y));
    }

    std::vector<double> g(dim);
    for (auto& y0 : starts) {
        std::vector<double> y = y0;
        project(y);
        double fy = fval(y);
        for (int iter = 0; iter < 400; ++iter) {
            gradient(y, g);
            double gnorm = 0.0;
            for (double gi : g) gnorm += gi * gi;
            gnorm = std::sqrt(gnorm);
            if (gnorm < 1e-12) break;
            double step = 1.0;
            bool moved = false;
            for (int ls = 0; ls < 40; ++ls) {
                std::vector<double> yt(dim);
                for (int i = 0; i < dim; ++i) yt[i] = y[i] - step * g[i];
                project(yt);
                const double ft = fval(yt);
                if (ft < fy - 1e-16) {
                    y = std::move(yt);
                    fy = ft;
                    moved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!moved) break;
        }
        // cyclic golden-section polish; coordinate 0 stays on its branch
        for (int sweep = 0; sweep < 80; ++sweep) {
            const double before = fy;
            for (int i = 0; i < dim; ++i) {
                double xb = y[i];
                auto f1d = [&](double v) {
                    std::vector<double> yt = y;
                    yt[i] = v;
                    if (i == 0 && std::abs(v - x1) < bound) return 1e100;
                    return fval(yt);
                };
                double lo = y[i] - 0.75 * ax1;
                double hi = y[i] + 0.75 * ax1;
                if (i == 0) {
                    if (y[0] >= x1) lo = std::max(lo, x1 + bound);
                    else hi = std::min(hi, x1 - bound);
                }
                const double fb = detail::golden_min_1d(f1d, lo, hi, 1e-13 * std::max(1.0, ax1), xb);
                if (fb < fy) {
                    fy = fb;
                    y[i] = xb;
                }
            }
            if (before - fy < 1e-16) break;
        }
        if (fy < best_f) {
            best_f = fy;
            best_y = y;
        }
    }

    GeometryReport rep;
    rep.n = n;
    rep.h = h;
    rep.mode = GeometryMode::lemma1_min;
    rep.numeric_extremum = best_f;
    rep.analytic_extremum = h * h / (2.0 + 2.0 * h + h * h);
    rep.arg.push_back(x1);
    rep.arg.insert(rep.arg.end(), best_y.begin(), best_y.end());
    rep.constant_checked = std::sqrt(2.0 + 2.0 * h + h * h);  // optimal C1
    rep.gap = std::abs(rep.numeric_extremum - rep.analytic_extremum);
    rep.constraint_residual = std::max(0.0, bound - std::abs(best_y[0] - x1));
    rep.feasible = rep.constraint_residual <= 1e-10;
    rep.pass = rep.feasible && rep.gap <= 1e-9;
    if (!rep.feasible) rep.diagnostic = "optimizer left the feasible region";
    else if (!rep.pass) rep.diagnostic = "numeric minimum does not meet the closed form within 1e-9";
    return rep;
}

// Evaluates n - u_n at all 2^(n-1) corners x_i = x1 +/- c2 h |x1| / sqrt(n-1)
// and records the maximum; each corner is cross-checked against the closed
// corner formula indexed by k = (#plus) - (#minus). For odd n the necessity
// bound is probed at c2 = sqrt(n/(n-h^2)) + 1e-3, where the k = 0 corner
// must reach n - u_n >= h^2.
inline GeometryReport lemma2_verify(int n, double h, double c2 = 1.0, double x1 = 1.0) {
    if (n < 2 || n > 8) throw std::invalid_argument("lemma2_verify: n must be in [2, 8]");
    if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("lemma2_verify: h must be in (0,1)");
    if (!(c2 > 0.0)) throw std::invalid_argument("lemma2_verify: c2 must be > 0");
    if (x1 == 0.0) throw std::invalid_argument("lemma2_verify: x1 must be nonzero");
    const double rootnm1 = std::sqrt(static_cast<double>(n - 1));
    if (!(c2 * h < rootnm1))
        throw std::invalid_argument("lemma2_verify: requires c2 * h < sqrt(n-1)");

    const double eps = c2 * h * std::abs(x1) / rootnm1;

    auto corner_formula = [&](int k, double cc) {
        const double e = cc * h * std::abs(x1) / rootnm1;
        const double nd = static_cast<double>(n);
        const double denom = nd * x1 * x1 + (nd - 1.0) * e * e + 2.0 * k * e * x1;
        return e * e * (nd * (nd - 1.0) - static_cast<double>(k) * k) / denom;
    };

    GeometryReport rep;
    rep.n = n;
    rep.h = h;
    rep.mode = GeometryMode::lemma2_corner_max;
    rep.constant_checked = c2;

    std::vector<double> x(static_cast<std::size_t>(n));
    x[0] = x1;
    double best = -1.0;
    double worst_mismatch = 0.0;
    std::vector<double> best_x;
    const int corners = 1 << (n - 1);
    for (int mask = 0; mask < corners; ++mask) {
        int k = 0;
        for (int i = 0; i < n - 1; ++i) {
            const bool plus = mask & (1 << i);
            x[static_cast<std::size_t>(i) + 1] = x1 + (plus ? eps : -eps);
            k += plus ? 1 : -1;
        }
        const double direct = static_cast<double>(n) - u_n(x);
        worst_mismatch = std::max(worst_mismatch, std::abs(direct - corner_formula(k, c2)));
        if (direct > best) {
            best = direct;
            best_x = x;
        }
    }

    // scan the closed formula over all k of matching parity
    double formula_max = -1.0;
    for (int k = -(n - 1); k <= n - 1; k += 2) formula_max = std::max(formula_max, corner_formula(k, c2));

    rep.numeric_extremum = best;
    rep.analytic_extremum = formula_max;
    rep.arg = best_x;
    rep.gap = std::abs(best - formula_max);
    rep.corner_max_formula = formula_max;
    rep.max_formula_mismatch = worst_mismatch;
    rep.constraint_residual = 0.0;
    rep.feasible = true;

    bool ok = worst_mismatch <= 1e-12 && rep.gap <= 1e-12;
    if (c2 == 1.0) ok = ok && best < h * h;

    if (n % 2 == 1) {
        rep.necessity_checked = true;
        const double c2_critical =
            std::sqrt(static_cast<double>(n) / (static_cast<double>(n) - h * h)) + 1e-3;
        rep.necessity_violated_above_bound = corner_formula(0, c2_critical) >= h * h;
        ok = ok && rep.necessity_violated_above_bound;
    }
    rep.pass = ok;
    if (!ok) rep.diagnostic = "corner verification failed";
    return rep;
}

// Samples random interior points of the lemma-2 region and reports whether
// the corner maximum dominates all of them.
inline bool interior_stationarity_check(int n, double h, double c2 = 1.0, double x1 = 1.0,
                                        std::uint64_t seed = 2024) {
    const GeometryReport corners = lemma2_verify(n, h, c2, x1);
    const double eps = c2 * h * std::abs(x1) / std::sqrt(static_cast<double>(n - 1));
    RandomStream rs(seed);
    std::vector<double> x(static_cast<std::size_t>(n));
    x[0] = x1;
    for (int trial = 0; trial < 1000; ++trial) {
        for (int i = 1; i < n; ++i) x[static_cast<std::size_t>(i)] = x1 + eps * rs.uniform(-1.0, 1.0);
        if (static_cast<double>(n) - u_n(x) > corners.numeric_extremum) return false;
    }
    return true;
}

}  // namespace tstatlab
