#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tstatlab/distribution.hpp"
#include "tstatlab/exact.hpp"
#include "tstatlab/mc.hpp"
#include "tstatlab/quadrature.hpp"

namespace tstatlab {

enum class Verdict { finite, infinite, indeterminate };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::finite: return "Finite";
        case Verdict::infinite: return "Infinite";
        default: return "Indeterminate";
    }
}

struct EvidenceEntry {
    std::string rule;
    std::string statement;
    std::string inputs;
};

struct ClassificationVerdict {
    int n = 0;
    double r = 0.0;
    Verdict verdict = Verdict::indeterminate;
    double r_star_low = 0.0;   // meaningful for indeterminate verdicts
    double r_star_high = 0.0;
    std::vector<EvidenceEntry> evidence;
};

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

inline LambdaFit fitted_q_exponent(const DistributionSpec& dist) {
    std::vector<std::pair<double, double>> pts;
    for (int e = 3; e <= 10; ++e) {
        const double h = std::pow(2.0, -e);
        const double q = concentration_q(dist, h);
        if (q > 0.0) pts.push_back({h, q});
    }
    return fit_lambda(pts);
}

}  // namespace detail

// Finiteness verdict for E|T_n|^r. Rule pipeline, first applicable wins:
//  (1) finite-support discrete laws have every moment finite;
//  (2) any continuous component makes r >= n-1 impossible;
//  (3) a certified bound q(h) <= C h^lambda with lambda > r/(n-1) gives
//      finiteness (analytic certificates only, never fitted exponents);
//  (4) a fitted exponent with lambda_hat + CI < r/n rules finiteness out;
//  (5) otherwise the moment supremum is only localized to the band
//      [lambda (n-1), min(n-1, lambda n)].
inline ClassificationVerdict classify(const DistributionSpec& dist, int n, double r) {
    if (n < 2) throw std::invalid_argument("classify: n must be >= 2");
    if (!(r > 0.0)) throw std::invalid_argument("classify: r must be > 0");

    ClassificationVerdict v;
    v.n = n;
    v.r = r;

    if (!dist.has_continuous_part()) {
        // purely atomic with finite support (possibly an all-discrete mixture)
        const auto atoms = atoms_of(dist);
        double maxabs = 0.0;
        double gap = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            maxabs = std::max(maxabs, std::abs(atoms[i].point));
            if (i > 0) gap = std::min(gap, atoms[i].point - atoms[i - 1].point);
        }
        v.verdict = Verdict::finite;
        v.evidence.push_back(
            {"discrete-support-bound",
             "finite support bounds |X_1|^r by max|a|^r and the inverse spacing by the minimal gap, "
             "so the defining expectation is finite for every r",
             "max|a|=" + detail::fmt(maxabs) + " min_gap=" + detail::fmt(gap)});
        return v;
    }

    const bool mixed = dist.has_discrete_part();

    if (r >= static_cast<double>(n) - 1.0) {
        v.verdict = Verdict::infinite;
        v.evidence.push_back(
            {"degrees-of-freedom-necessity",
             "a law with a continuous component has E|T_n|^r finite only for r < n-1",
             "r=" + detail::fmt(r) + " n-1=" + detail::fmt(n - 1.0)});
        return v;
    }

    if (mixed) {
        v.verdict = Verdict::indeterminate;
        v.r_star_low = 0.0;
        v.r_star_high = static_cast<double>(n) - 1.0;
        v.evidence.push_back(
            {"mixed-law-fallback",
             "no concentration certificate is available for laws with atoms; only the "
             "degrees-of-freedom bound applies",
             "r_star<=n-1=" + detail::fmt(n - 1.0)});
        return v;
    }

    const std::optional<double> lam_cert = certified_lambda(dist);
    if (lam_cert && *lam_cert > r / (static_cast<double>(n) - 1.0)) {
        v.verdict = Verdict::finite;
        v.evidence.push_back(
            {"concentration-sufficiency",
             "q(h) <= C h^lambda with lambda > r/(n-1) forces E|T_n|^r < infinity",
             "lambda=" + detail::fmt(*lam_cert) + " r/(n-1)=" + detail::fmt(r / (n - 1.0))});
        return v;
    }

    const LambdaFit fit = detail::fitted_q_exponent(dist);
    const double fit_ci = 1.96 * fit.slope_std_error;
    if (fit.slope + fit_ci < r / static_cast<double>(n)) {
        v.verdict = Verdict::infinite;
        v.evidence.push_back(
            {"concentration-necessity",
             "finiteness of E|T_n|^r would force q(h) = O(h^{r/n}); the fitted exponent rules "
             "that out",
             "lambda_hat=" + detail::fmt(fit.slope) + "+/-" + detail::fmt(fit_ci) +
                 " r/n=" + detail::fmt(r / n)});
        return v;
    }

    const double lam = lam_cert ? *lam_cert : fit.slope;
    v.verdict = Verdict::indeterminate;
    v.r_star_low = lam * (static_cast<double>(n) - 1.0);
    v.r_star_high = std::min(static_cast<double>(n) - 1.0, lam * static_cast<double>(n));
    v.evidence.push_back(
        {"concentration-band",
         "the moment supremum r* lies between lambda (n-1) and lambda n; r falls inside that band",
         "lambda=" + detail::fmt(lam) + " band=[" + detail::fmt(v.r_star_low) + "," +
             detail::fmt(v.r_star_high) + "]"});
    return v;
}

// Grid classification with monotone propagation: finiteness carries to
// larger n and smaller r.
inline std::vector<ClassificationVerdict> classify_grid(const DistributionSpec& dist,
                                                        std::vector<int> n_grid,
                                                        std::vector<double> r_grid) {
    std::sort(n_grid.begin(), n_grid.end());
    std::sort(r_grid.begin(), r_grid.end());
    std::vector<ClassificationVerdict> out;
    for (double r : r_grid)
        for (int n : n_grid) out.push_back(classify(dist, n, r));

    auto at = [&](std::size_t ri, std::size_t ni) -> ClassificationVerdict& {
        return out[ri * n_grid.size() + ni];
    };
    for (std::size_t ri = 0; ri < r_grid.size(); ++ri) {
        for (std::size_t ni = 1; ni < n_grid.size(); ++ni) {
            if (at(ri, ni - 1).verdict == Verdict::finite && at(ri, ni).verdict != Verdict::finite) {
                at(ri, ni).verdict = Verdict::finite;
                at(ri, ni).evidence.push_back(
                    {"sample-size-monotonicity",
                     "finiteness of E|T_n|^r propagates from n to n+1",
                     "inherited from n=" + detail::fmt(static_cast<double>(n_grid[ni - 1]))});
            }
        }
    }
    for (std::size_t ni = 0; ni < n_grid.size(); ++ni) {
        for (std::size_t ri = r_grid.size(); ri-- > 1;) {
            if (at(ri, ni).verdict == Verdict::finite && at(ri - 1, ni).verdict != Verdict::finite) {
                at(ri - 1, ni).verdict = Verdict::finite;
                at(ri - 1, ni).evidence.push_back(
                    {"moment-order-monotonicity",
                     "finiteness of E|T_n|^r propagates to smaller r",
                     "inherited from r=" + detail::fmt(r_grid[ri])});
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Survival-integral moment evaluator

struct SurvivalMomentResult {
    double value = 0.0;
    double truncation_bound = 0.0;  // +inf when the tail mass cannot be bounded
};

// E|T_n|^r = (r/2) n (n-1)^{r/2} int_0^n z^{r/2-1} P(U*>z) (n-z)^{-(r/2+1)} dz.
// The z = 0 singularity (r < 2) is removed by z = w^{2/r}; the z = n endpoint
// by n - z = h^2 with the h-integral truncated at h_min = n^{-4}. The
// truncated tail is reported as a bound from the survival value at the last
// evaluated point: zero when the curve has decayed to zero, infinite
// otherwise.
inline SurvivalMomentResult moment_via_survival(const std::function<double(double)>& survival,
                                                int n, double r,
                                                const std::vector<double>& z_knots = {}) {
    if (n < 2) throw std::invalid_argument("moment_via_survival: n must be >= 2");
    if (!(r > 0.0)) throw std::invalid_argument("moment_via_survival: r must be > 0");

    const double nd = static_cast<double>(n);
    const double z_split = 0.5 * nd;
    const double prefactor = 0.5 * r * nd * std::pow(nd - 1.0, 0.5 * r);

    double lower;
    if (r < 2.0) {
        const double w_hi = std::pow(z_split, 0.5 * r);
        auto f = [&](double w) {
            const double z = std::pow(w, 2.0 / r);
            return (2.0 / r) * survival(z) * std::pow(nd - z, -(0.5 * r + 1.0));
        };
        std::vector<double> knots;
        for (double z : z_knots)
            if (z > 0.0 && z < z_split) knots.push_back(std::pow(z, 0.5 * r));
        lower = integrate_adaptive(f, 0.0, w_hi, 1e-9, 1e-14, 8000, knots);
    } else {
        auto f = [&](double z) {
            return std::pow(z, 0.5 * r - 1.0) * survival(z) * std::pow(nd - z, -(0.5 * r + 1.0));
        };
        lower = integrate_adaptive(f, 0.0, z_split, 1e-9, 1e-14, 8000, z_knots);
    }

    const double h_min = std::pow(nd, -4.0);
    const double h_max = std::sqrt(nd - z_split);
    auto g = [&](double h) {
        const double z = nd - h * h;
        return 2.0 * std::pow(z, 0.5 * r - 1.0) * survival(z) * std::pow(h, -(r + 1.0));
    };
    std::vector<double> h_knots;
    for (double z : z_knots)
        if (z > z_split && z < nd) h_knots.push_back(std::sqrt(nd - z));
    const double upper = integrate_adaptive(g, h_min, h_max, 1e-9, 1e-14, 8000, h_knots);

    SurvivalMomentResult res;
    res.value = prefactor * (lower + upper);
    const double tail_survival = survival(nd - h_min * h_min);
    res.truncation_bound =
        tail_survival > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return res;
}

inline SurvivalMomentResult moment_via_survival(const SurvivalCurve& curve, int n, double r) {
    if (curve.z_grid.size() != curve.survival.size() || curve.z_grid.empty())
        throw std::invalid_argument("moment_via_survival: malformed curve");
    for (std::size_t i = 1; i < curve.survival.size(); ++i)
        if (curve.survival[i] > curve.survival[i - 1] + 1e-12)
            throw std::invalid_argument("moment_via_survival: survival curve is not nonincreasing");

    auto interp = [&curve](double z) {
        const auto& zs = curve.z_grid;
        const auto& sv = curve.survival;
        if (z <= zs.front()) return sv.front();
        if (z >= zs.back()) return 0.0;
        const auto it = std::upper_bound(zs.begin(), zs.end(), z);
        const std::size_t i = static_cast<std::size_t>(it - zs.begin());
        const double t = (z - zs[i - 1]) / (zs[i] - zs[i - 1]);
        return sv[i - 1] + t * (sv[i] - sv[i - 1]);
    };
    return moment_via_survival(interp, n, r, curve.z_grid);
}

// ---------------------------------------------------------------------------
// Limit moments

// E|T|^r for the t distribution with nu degrees of freedom:
// nu^{r/2} Gamma((r+1)/2) Gamma((nu-r)/2) / (sqrt(pi) Gamma(nu/2)) for r < nu.
inline ExtendedReal limit_moment(double nu, double r) {
    if (!(nu > 0.0)) throw std::invalid_argument("limit_moment: nu must be > 0");
    if (!(r > 0.0)) throw std::invalid_argument("limit_moment: r must be > 0");
    if (r >= nu) return ExtendedReal::infinity();
    const double logv = 0.5 * r * std::log(nu) + std::lgamma(0.5 * (r + 1.0)) +
                        std::lgamma(0.5 * (nu - r)) - 0.5 * std::log(M_PI) -
                        std::lgamma(0.5 * nu);
    return ExtendedReal::finite(std::exp(logv));
}

// E|Z|^r for a standard normal Z.
inline double normal_abs_moment(double r) {
    return std::pow(2.0, 0.5 * r) * std::exp(std::lgamma(0.5 * (r + 1.0))) / std::sqrt(M_PI);
}

// ---------------------------------------------------------------------------
// Convergence experiment

struct ConvergenceRow {
    int n = 0;
    double estimate = 0.0;
    double std_error = 0.0;
};

struct ConvergenceTable {
    double r = 0.0;
    std::vector<ConvergenceRow> rows;
    double limit_reference = 0.0;  // standard normal absolute moment
    double max_deviation_top_quartile = 0.0;
};

inline bool has_finite_variance(const DistributionSpec& d) {
    struct V {
        bool operator()(const DistributionSpec::Discrete&) const { return true; }
        bool operator()(const DistributionSpec::Normal&) const { return true; }
        bool operator()(const DistributionSpec::Cauchy&) const { return false; }
        bool operator()(const DistributionSpec::Uniform&) const { return true; }
        bool operator()(const DistributionSpec::Pareto& p) const { return p.shape > 2.0; }
        bool operator()(const DistributionSpec::PowerSingularity&) const { return true; }
        bool operator()(const DistributionSpec::Mixture& m) const {
            for (const auto& c : m.components)
                if (!std::visit(V{}, c.value())) return false;
            return true;
        }
    };
    return std::visit(V{}, d.value());
}

inline bool is_degenerate_point_mass(const DistributionSpec& d) {
    const auto* disc = std::get_if<DistributionSpec::Discrete>(&d.value());
    return disc && disc->atoms.size() == 1;
}

// Tracks E|T_n|^r along a grid of n toward the standard normal limit.
// Laws outside the normal domain of attraction (infinite variance) and
// degenerate laws are rejected rather than mishandled.
inline ConvergenceTable convergence_experiment(const DistributionSpec& dist, double r,
                                               std::vector<int> n_grid, std::size_t count,
                                               std::uint64_t seed, int threads = 0) {
    if (n_grid.empty()) throw std::invalid_argument("convergence_experiment: empty n grid");
    std::sort(n_grid.begin(), n_grid.end());
    if (is_degenerate_point_mass(dist))
        throw std::invalid_argument("convergence_experiment: degenerate law has T_n identically 0");
    if (!has_finite_variance(dist))
        throw std::invalid_argument(
            "convergence_experiment: law lies outside the normal domain of attraction "
            "(infinite variance); rejected");
    const ClassificationVerdict v = classify(dist, n_grid.front(), r);
    if (v.verdict == Verdict::infinite)
        throw std::domain_error(
            "convergence_experiment: target moment is divergent at the smallest n");

    ConvergenceTable table;
    table.r = r;
    table.limit_reference = normal_abs_moment(r);
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        const auto summaries = simulate_tstat(dist, n_grid[i], count, seed + i, threads);
        const MomentEstimate est = estimate_moment(summaries, r);
        table.rows.push_back({n_grid[i], est.value, est.std_error});
    }
    const std::size_t q0 = (3 * table.rows.size()) / 4;
    for (std::size_t i = (q0 > 0 ? q0 : table.rows.size() - 1); i < table.rows.size(); ++i)
        table.max_deviation_top_quartile = std::max(
            table.max_deviation_top_quartile, std::abs(table.rows[i].estimate - table.limit_reference));
    return table;
}

}  // namespace tstatlab
