#pragma once

// Shared corpus and independent oracles for the test suites. Everything in
// this header recomputes quantities by brute force or direct quadrature so
// the library paths are checked against code that does not share their
// algorithms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "tstatlab/distribution.hpp"
#include "tstatlab/selfnorm.hpp"

namespace testsupport {

using tstatlab::Atom;
using tstatlab::DistributionSpec;

inline std::vector<DistributionSpec> discrete_corpus() {
    return {
        DistributionSpec::discrete({{0, 0.5}, {1, 0.5}}),
        DistributionSpec::discrete({{-1, 0.5}, {1, 0.5}}),
        DistributionSpec::discrete({{1, 0.5}, {2, 0.5}}),
        DistributionSpec::discrete({{-1.5, 0.25}, {0.5, 0.25}, {2, 0.5}}),
        DistributionSpec::discrete({{-2, 0.2}, {-1, 0.2}, {1, 0.3}, {3, 0.3}}),
    };
}

inline std::vector<DistributionSpec> all_family_corpus() {
    auto corpus = discrete_corpus();
    corpus.push_back(DistributionSpec::normal(0, 1));
    corpus.push_back(DistributionSpec::cauchy(0, 1));
    corpus.push_back(DistributionSpec::uniform(0, 1));
    corpus.push_back(DistributionSpec::pareto(1.5, 1));
    corpus.push_back(DistributionSpec::power_singularity(1, 0.5, 1));
    corpus.push_back(DistributionSpec::mixture(
        {0.5, 0.5}, {DistributionSpec::discrete({{1, 1.0}}), DistributionSpec::uniform(0, 1)}));
    return corpus;
}

// Full |atoms|^n tuple enumeration of E|T_n|^r, no multiset compression.
inline double naive_tmoment(const DistributionSpec& dist, int n, double r) {
    const auto atoms = tstatlab::atoms_of(dist);
    const std::size_t m = atoms.size();
    std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
    std::vector<double> sample(static_cast<std::size_t>(n));
    double total = 0.0;
    for (;;) {
        double w = 1.0;
        for (int i = 0; i < n; ++i) {
            sample[static_cast<std::size_t>(i)] = atoms[idx[static_cast<std::size_t>(i)]].point;
            w *= atoms[idx[static_cast<std::size_t>(i)]].prob;
        }
        const auto s = tstatlab::compute_stats(sample);
        if (s.t != 0.0) total += w * std::pow(std::abs(s.t), r);
        int pos = n - 1;
        while (pos >= 0) {
            if (++idx[static_cast<std::size_t>(pos)] < m) break;
            idx[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
    }
    return total;
}

// Dense-grid supremum of P(|X - x| <= h) over window centers; the grid
// includes all atom-alignment points so the piecewise-constant objective is
// evaluated exactly somewhere on each level set.
inline double brute_force_Q(const DistributionSpec& dist, double h) {
    const auto atoms = tstatlab::atoms_of(dist);
    std::vector<double> centers;
    for (const auto& a : atoms) {
        centers.push_back(a.point);
        centers.push_back(a.point - h);
        centers.push_back(a.point + h);
    }
    const double lo = atoms.front().point - 2.0 * h - 1.0;
    const double hi = atoms.back().point + 2.0 * h + 1.0;
    for (int i = 0; i <= 20000; ++i) centers.push_back(lo + (hi - lo) * i / 20000.0);
    double best = 0.0;
    for (double c : centers) best = std::max(best, tstatlab::prob_closed(dist, c - h, c + h));
    return best;
}

inline double brute_force_q(const DistributionSpec& dist, double h) {
    const auto atoms = tstatlab::atoms_of(dist);
    std::vector<double> centers;
    for (const auto& a : atoms) {
        if (a.point == 0.0) continue;
        centers.push_back(a.point);
        if (h < 1.0) {
            centers.push_back(a.point / (1.0 - h));
            centers.push_back(a.point / (1.0 + h));
        }
    }
    const double span = std::max(std::abs(atoms.front().point), std::abs(atoms.back().point)) * 4.0;
    for (int i = 1; i <= 40000; ++i) {
        const double x = span * i / 40000.0;
        centers.push_back(x);
        centers.push_back(-x);
    }
    double best = 0.0;
    for (double c : centers) {
        if (c == 0.0) continue;
        const double w = std::abs(c) * h;
        best = std::max(best, tstatlab::prob_closed(dist, c - w, c + w));
    }
    return best;
}

// Deterministic midpoint-rule probability of {n - U_n < h^2} for n uniform
// observations on (0,1); independent of the sampling path.
inline double neardeg_oracle_uniform(int n, double h, int grid) {
    const double hh = h * h;
    long hits = 0, cells = 0;
    std::vector<int> idx(static_cast<std::size_t>(n), 0);
    std::vector<double> x(static_cast<std::size_t>(n));
    for (;;) {
        double s = 0.0, ss = 0.0;
        for (int i = 0; i < n; ++i) {
            x[static_cast<std::size_t>(i)] = (idx[static_cast<std::size_t>(i)] + 0.5) / grid;
            s += x[static_cast<std::size_t>(i)];
            ss += x[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
        }
        ++cells;
        if (n - s * s / ss < hh) ++hits;
        int pos = n - 1;
        while (pos >= 0) {
            if (++idx[static_cast<std::size_t>(pos)] < grid) break;
            idx[static_cast<std::size_t>(pos)] = 0;
            --pos;
        }
        if (pos < 0) break;
    }
    return static_cast<double>(hits) / static_cast<double>(cells);
}

// Absolute moment of the t distribution with nu degrees of freedom by direct
// quadrature of the density, mapped onto (0,1) via x = w/(1-w).
inline double t_abs_moment_quadrature(double nu, double r) {
    const double logc = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
                        0.5 * std::log(nu * M_PI);
    auto density = [&](double x) {
        return std::exp(logc - 0.5 * (nu + 1.0) * std::log1p(x * x / nu));
    };
    // midpoint rule, fine enough for the oracle tolerances used in tests
    const int grid = 2000000;
    double acc = 0.0;
    for (int i = 0; i < grid; ++i) {
        const double w = (i + 0.5) / grid;
        const double x = w / (1.0 - w);
        const double jac = 1.0 / ((1.0 - w) * (1.0 - w));
        acc += 2.0 * std::pow(x, r) * density(x) * jac;
    }
    return acc / grid;
}

}  // namespace testsupport
