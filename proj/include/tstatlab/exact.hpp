#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <stdexcept>
#include <vector>

#include "tstatlab/distribution.hpp"
#include "tstatlab/selfnorm.hpp"

namespace tstatlab {

// Finiteness is the scientific output here, so infinity is an explicit
// marker rather than a floating-point overflow.
struct ExtendedReal {
    double value = 0.0;
    bool infinite = false;
    static ExtendedReal finite(double v) { return {v, false}; }
    static ExtendedReal infinity() { return {0.0, true}; }
};

enum class ConditionKind { cond_ii, cond_iii, r_delta };

struct ConditionValue {
    ConditionKind which = ConditionKind::cond_ii;
    int n = 0;
    double r = 0.0;
    double delta = 1.0;
    ExtendedReal value;
};

struct ExactMomentResult {
    int n = 0;
    double r = 0.0;
    double value = 0.0;
    std::uint64_t tuple_count = 0;  // number of distinct multisets enumerated
};

struct enumeration_budget_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline double binomial(std::uint64_t top, std::uint64_t bottom) {
    double v = 1.0;
    bottom = std::min(bottom, top - bottom);
    for (std::uint64_t i = 1; i <= bottom; ++i) {
        v *= static_cast<double>(top - bottom + i) / static_cast<double>(i);
        if (v > 1e18) return 1e18;
    }
    return v;
}

inline const double* factorial_table() {
    static const double table[] = {1.,      1.,       2.,        6.,         24.,
                                   120.,    720.,     5040.,     40320.,     362880.,
                                   3628800., 39916800., 479001600., 6227020800., 87178291200.};
    return table;
}

// Enumerates occupancy vectors c with sum(c) = n over m slots, first slot
// fixed to c0; visit(counts) is called in lexicographic order.
template <class Visit>
void enumerate_rest(std::vector<int>& counts, std::size_t idx, int remaining, Visit&& visit) {
    const std::size_t m = counts.size();
    if (idx + 1 == m) {
        counts[idx] = remaining;
        visit(const_cast<const std::vector<int>&>(counts));
        return;
    }
    for (int c = remaining; c >= 0; --c) {
        counts[idx] = c;
        enumerate_rest(counts, idx + 1, remaining - c, visit);
    }
}

inline double multinomial_weight(const std::vector<int>& counts, const std::vector<Atom>& atoms, int n) {
    const double* fact = factorial_table();
    double w = fact[n];
    for (std::size_t j = 0; j < counts.size(); ++j) {
        if (counts[j] == 0) continue;
        w /= fact[counts[j]];
        w *= std::pow(atoms[j].prob, counts[j]);
    }
    return w;
}

inline const std::vector<Atom>& require_discrete(const DistributionSpec& d, const char* who) {
    const auto* disc = std::get_if<DistributionSpec::Discrete>(&d.value());
    if (!disc) throw std::invalid_argument(std::string(who) + ": requires a finite-support discrete law");
    return disc->atoms;
}

inline void check_budget(std::size_t m, int n, const char* who) {
    const double multisets = binomial(static_cast<std::uint64_t>(m) + n - 1, n);
    if (multisets > 1e7)
        throw enumeration_budget_error(std::string(who) +
                                       ": enumeration budget exceeded; use Monte Carlo instead");
}

}  // namespace detail

// Exact E|T_n|^r for a finite-support law by multiset enumeration with
// multinomial weights. Partitions on the first atom's count parallelize;
// partials are combined in a fixed order so the result does not depend on
// the thread count.
inline ExactMomentResult exact_tmoment(const DistributionSpec& dist, int n, double r, int threads = 1) {
    const auto& atoms = detail::require_discrete(dist, "exact_tmoment");
    if (n < 2 || n > 12) throw std::invalid_argument("exact_tmoment: n must be in [2, 12]");
    if (!(r > 0.0)) throw std::invalid_argument("exact_tmoment: r must be > 0");
    detail::check_budget(atoms.size(), n, "exact_tmoment");

    const std::size_t m = atoms.size();

    auto partition_sum = [&](int c0) {
        double acc = 0.0;
        std::vector<int> counts(m, 0);
        std::vector<double> buffer;
        buffer.reserve(n);
        counts[0] = c0;
        auto visit = [&](const std::vector<int>& c) {
            buffer.clear();
            for (std::size_t j = 0; j < m; ++j)
                for (int k = 0; k < c[j]; ++k) buffer.push_back(atoms[j].point);
            const TStatSummary s = compute_stats(buffer);
            if (s.t != 0.0) acc += detail::multinomial_weight(c, atoms, n) * std::pow(std::abs(s.t), r);
        };
        if (m == 1) {
            if (c0 == n) visit(counts);
        } else {
            detail::enumerate_rest(counts, 1, n - c0, visit);
        }
        return acc;
    };

    std::vector<double> partials(static_cast<std::size_t>(n) + 1, 0.0);
    if (threads > 1) {
        std::vector<std::future<double>> futs(partials.size());
        for (int c0 = 0; c0 <= n; ++c0)
            futs[c0] = std::async(std::launch::async, partition_sum, c0);
        for (int c0 = 0; c0 <= n; ++c0) partials[c0] = futs[c0].get();
    } else {
        for (int c0 = 0; c0 <= n; ++c0) partials[c0] = partition_sum(c0);
    }

    ExactMomentResult res;
    res.n = n;
    res.r = r;
    for (int c0 = n; c0 >= 0; --c0) res.value += partials[c0];  // fixed reduction order
    res.tuple_count =
        static_cast<std::uint64_t>(detail::binomial(static_cast<std::uint64_t>(m) + n - 1, n) + 0.5);
    return res;
}

// Exact E[|X_1|^r min_{i>=2} |X_i-X_1|^{-r}; some X_i != X_1]. The minimum
// of the inverse powers is (max_i |X_i-X_1|)^{-r}; coordinates equal to X_1
// never attain it on the non-degenerate event.
inline ConditionValue exact_condition_ii(const DistributionSpec& dist, int n, double r) {
    const auto& atoms = detail::require_discrete(dist, "exact_condition_ii");
    if (n < 2 || n > 12) throw std::invalid_argument("exact_condition_ii: n must be in [2, 12]");
    if (!(r > 0.0)) throw std::invalid_argument("exact_condition_ii: r must be > 0");
    detail::check_budget(atoms.size(), n - 1, "exact_condition_ii");

    const std::size_t m = atoms.size();
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double aj = atoms[j].point;
        if (aj == 0.0) continue;  // |X_1|^r factor vanishes
        double inner = 0.0;
        std::vector<int> counts(m, 0);
        auto visit = [&](const std::vector<int>& c) {
            double maxdist = 0.0;
            for (std::size_t k = 0; k < m; ++k)
                if (c[k] > 0) maxdist = std::max(maxdist, std::abs(atoms[k].point - aj));
            if (maxdist == 0.0) return;  // all remaining coordinates equal X_1
            inner += detail::multinomial_weight(c, atoms, n - 1) * std::pow(maxdist, -r);
        };
        detail::enumerate_rest(counts, 0, n - 1, visit);
        total += atoms[j].prob * std::pow(std::abs(aj), r) * inner;
    }
    ConditionValue cv;
    cv.which = ConditionKind::cond_ii;
    cv.n = n;
    cv.r = r;
    cv.value = ExtendedReal::finite(total);
    return cv;
}

// Exact double integral of condition (iii): the outer integral is the atom
// sum over a_j != 0; the inner integrand is piecewise constant in h between
// relative-gap breakpoints, so each piece integrates in closed form with
// antiderivative -h^{-r}/r. The window inequality is strict, matching the
// condition's statement.
inline ConditionValue exact_condition_iii(const DistributionSpec& dist, int n, double r,
                                          double upper = 1.0) {
    const auto& atoms = detail::require_discrete(dist, "exact_condition_iii");
    if (n < 2) throw std::invalid_argument("exact_condition_iii: n must be >= 2");
    if (!(r > 0.0)) throw std::invalid_argument("exact_condition_iii: r must be > 0");
    if (!(upper > 0.0)) throw std::invalid_argument("exact_condition_iii: upper must be > 0");

    const std::size_t m = atoms.size();
    double total = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        const double aj = atoms[j].point;
        if (aj == 0.0) continue;
        // breakpoints where another atom enters the strict relative window
        std::vector<std::pair<double, double>> steps;  // (breakpoint, prob entering)
        for (std::size_t k = 0; k < m; ++k) {
            if (k == j) continue;
            steps.push_back({std::abs(atoms[k].point - aj) / std::abs(aj), atoms[k].prob});
        }
        std::sort(steps.begin(), steps.end());

        const double pj = atoms[j].prob;
        const double base = std::pow(pj, n - 1);
        double g = pj;
        double inner = 0.0;
        for (std::size_t s = 0; s < steps.size(); ++s) {
            g += steps[s].second;
            const double lo = steps[s].first;
            if (lo >= upper) break;
            const double hi = (s + 1 < steps.size()) ? std::min(steps[s + 1].first, upper) : upper;
            if (hi <= lo) continue;
            const double level = std::pow(g, n - 1) - base;
            inner += level * (std::pow(lo, -r) - std::pow(hi, -r)) / r;
        }
        total += pj * inner;
    }
    ConditionValue cv;
    cv.which = ConditionKind::cond_iii;
    cv.n = n;
    cv.r = r;
    cv.delta = upper;
    cv.value = ExtendedReal::finite(total);
    return cv;
}

// R_{n,delta} = n^r times the condition-(iii) integral truncated at delta.
inline ConditionValue exact_R_n_delta(const DistributionSpec& dist, int n, double r, double delta) {
    if (!(delta > 0.0 && delta <= 1.0))
        throw std::invalid_argument("exact_R_n_delta: delta must be in (0,1]");
    ConditionValue cv = exact_condition_iii(dist, n, r, delta);
    cv.which = ConditionKind::r_delta;
    cv.value.value *= std::pow(static_cast<double>(n), r);
    return cv;
}

// Exact law of U_n* for a finite-support discrete F, as a sorted list of
// (value, probability) pairs; survival() evaluates P(U* > z).
struct DiscreteUstarLaw {
    std::vector<std::pair<double, double>> mass;

    double survival(double z) const {
        double s = 0.0;
        for (auto it = mass.rbegin(); it != mass.rend(); ++it) {
            if (it->first > z) s += it->second;
            else break;
        }
        return s;
    }
};

inline DiscreteUstarLaw exact_ustar_law(const DistributionSpec& dist, int n) {
    const auto& atoms = detail::require_discrete(dist, "exact_ustar_law");
    if (n < 2 || n > 12) throw std::invalid_argument("exact_ustar_law: n must be in [2, 12]");
    detail::check_budget(atoms.size(), n, "exact_ustar_law");

    const std::size_t m = atoms.size();
    std::vector<std::pair<double, double>> pts;
    std::vector<int> counts(m, 0);
    std::vector<double> buffer;
    auto visit = [&](const std::vector<int>& c) {
        buffer.clear();
        for (std::size_t j = 0; j < m; ++j)
            for (int k = 0; k < c[j]; ++k) buffer.push_back(atoms[j].point);
        const TStatSummary s = compute_stats(buffer);
        pts.push_back({s.u_star, detail::multinomial_weight(c, atoms, n)});
    };
    detail::enumerate_rest(counts, 0, n, visit);

    std::sort(pts.begin(), pts.end());
    DiscreteUstarLaw law;
    for (const auto& p : pts) {
        if (!law.mass.empty() && law.mass.back().first == p.first) law.mass.back().second += p.second;
        else law.mass.push_back(p);
    }
    return law;
}

}  // namespace tstatlab
