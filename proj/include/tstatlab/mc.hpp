#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "tstatlab/distribution.hpp"
#include "tstatlab/rng.hpp"
#include "tstatlab/selfnorm.hpp"

namespace tstatlab {

// Worker cap: explicit request wins, then TSTATLAB_THREADS, then hardware.
inline int thread_budget(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("TSTATLAB_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 16u));
}

namespace detail {

constexpr std::size_t kSampleBlock = 1 << 16;

// Runs fn(block_index, first_sample, sample_count) over fixed-size blocks.
// Each block derives its own RNG stream, so the outputs are identical for
// every thread count.
template <class Fn>
void for_each_block(std::size_t count, int threads, Fn&& fn) {
    const std::size_t blocks = (count + kSampleBlock - 1) / kSampleBlock;
    if (threads <= 1 || blocks <= 1) {
        for (std::size_t b = 0; b < blocks; ++b) {
            const std::size_t first = b * kSampleBlock;
            fn(b, first, std::min(kSampleBlock, count - first));
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t b = next.fetch_add(1);
            if (b >= blocks) break;
            const std::size_t first = b * kSampleBlock;
            fn(b, first, std::min(kSampleBlock, count - first));
        }
    };
    std::vector<std::thread> pool;
    const int nthreads = std::min<std::size_t>(threads, blocks);
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

}  // namespace detail

// count independent T-statistic summaries of samples of size n.
inline std::vector<TStatSummary> simulate_tstat(const DistributionSpec& dist, int n,
                                                std::size_t count, std::uint64_t seed,
                                                int threads = 0) {
    if (n < 2) throw std::invalid_argument("simulate_tstat: n must be >= 2");
    if (count < 1) throw std::invalid_argument("simulate_tstat: count must be >= 1");
    std::vector<TStatSummary> out(count);
    detail::for_each_block(count, thread_budget(threads), [&](std::size_t block, std::size_t first,
                                                              std::size_t len) {
        RandomStream rs(seed, block);
        std::vector<double> buffer(static_cast<std::size_t>(n));
        for (std::size_t i = 0; i < len; ++i) {
            for (auto& x : buffer) x = draw(dist, rs);
            out[first + i] = compute_stats(buffer);
        }
    });
    return out;
}

struct MomentEstimate {
    double r = 0.0;
    int n = 0;
    double value = 0.0;
    double std_error = 0.0;
    std::vector<std::pair<std::size_t, double>> prefix_trace;
    bool divergence_flag = false;
};

// Mean of |t|^r with a batch-means standard error (32 batches) and a
// divergence diagnostic: the flag is set when the log running estimate
// regressed on the log sample count over the last half of the prefix trace
// has slope > 0.05.
inline MomentEstimate estimate_moment(const std::vector<TStatSummary>& summaries, double r) {
    if (summaries.size() < 10000)
        throw std::invalid_argument("estimate_moment: need at least 1e4 summaries");
    if (!(r > 0.0)) throw std::invalid_argument("estimate_moment: r must be > 0");

    const std::size_t n_samp = summaries.size();
    MomentEstimate est;
    est.r = r;
    est.n = summaries[0].n;

    std::vector<double> powed(n_samp);
    for (std::size_t i = 0; i < n_samp; ++i) powed[i] = std::pow(std::abs(summaries[i].t), r);

    // geometric prefix checkpoints ending at the full count
    const std::size_t first_cp = std::max<std::size_t>(1000, n_samp / 4096);
    const int n_cp = 65;
    std::vector<std::size_t> cps;
    for (int k = 0; k < n_cp; ++k) {
        const double f = static_cast<double>(k) / (n_cp - 1);
        const double c = first_cp * std::pow(static_cast<double>(n_samp) / first_cp, f);
        const std::size_t ci = std::min<std::size_t>(n_samp, static_cast<std::size_t>(std::llround(c)));
        if (cps.empty() || ci > cps.back()) cps.push_back(ci);
    }

    double running = 0.0;
    std::size_t done = 0;
    for (std::size_t cp : cps) {
        for (; done < cp; ++done) running += powed[done];
        est.prefix_trace.push_back({cp, running / static_cast<double>(cp)});
    }
    for (; done < n_samp; ++done) running += powed[done];
    est.value = running / static_cast<double>(n_samp);

    const int n_batches = 32;
    const std::size_t batch = n_samp / n_batches;
    std::vector<double> means(n_batches, 0.0);
    for (int b = 0; b < n_batches; ++b) {
        double s = 0.0;
        for (std::size_t i = b * batch; i < (b + 1) * batch; ++i) s += powed[i];
        means[b] = s / static_cast<double>(batch);
    }
    double mb = std::accumulate(means.begin(), means.end(), 0.0) / n_batches;
    double var = 0.0;
    for (double v : means) var += (v - mb) * (v - mb);
    var /= (n_batches - 1);
    est.std_error = std::sqrt(var / n_batches);

    // slope of log(estimate) vs log(count) over the last half of the trace
    const std::size_t half = est.prefix_trace.size() / 2;
    std::vector<std::pair<double, double>> pts;
    bool positive = true;
    for (std::size_t i = half; i < est.prefix_trace.size(); ++i) {
        if (est.prefix_trace[i].second <= 0.0) {
            positive = false;
            break;
        }
        pts.push_back({std::log(static_cast<double>(est.prefix_trace[i].first)),
                       std::log(est.prefix_trace[i].second)});
    }
    if (positive && pts.size() >= 2) {
        double mx = 0.0, my = 0.0;
        for (const auto& [x, y] : pts) {
            mx += x;
            my += y;
        }
        mx /= pts.size();
        my /= pts.size();
        double sxx = 0.0, sxy = 0.0;
        for (const auto& [x, y] : pts) {
            sxx += (x - mx) * (x - mx);
            sxy += (x - mx) * (y - my);
        }
        est.divergence_flag = (sxy / sxx) > 0.05;
    }
    return est;
}

enum class TailIndexMethod { hill, loglog_regression };

struct TailIndexEstimate {
    double index = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int k = 0;
    TailIndexMethod method = TailIndexMethod::hill;
};

// Hill estimator (or log-log survival regression) on the top-k order
// statistics of |values|; CI from the asymptotic normal approximation.
inline TailIndexEstimate estimate_tail_index(const std::vector<double>& values, int k,
                                             TailIndexMethod method = TailIndexMethod::hill) {
    if (k < 50) throw std::invalid_argument("estimate_tail_index: k must be >= 50");
    if (static_cast<std::size_t>(k) > values.size() / 10)
        throw std::invalid_argument("estimate_tail_index: k must be at most one tenth of the sample");
    std::vector<double> mags;
    mags.reserve(values.size());
    for (double v : values)
        if (std::abs(v) > 0.0 && std::isfinite(v)) mags.push_back(std::abs(v));
    if (mags.size() < static_cast<std::size_t>(k) + 1)
        throw std::invalid_argument("estimate_tail_index: not enough positive tail data");
    std::sort(mags.begin(), mags.end(), std::greater<>());

    TailIndexEstimate est;
    est.k = k;
    est.method = method;
    if (method == TailIndexMethod::hill) {
        double s = 0.0;
        const double ref = std::log(mags[static_cast<std::size_t>(k)]);
        for (int i = 0; i < k; ++i) s += std::log(mags[static_cast<std::size_t>(i)]) - ref;
        est.index = static_cast<double>(k) / s;
    } else {
        // regress log empirical survival on log magnitude over the tail
        double mx = 0.0, my = 0.0;
        std::vector<std::pair<double, double>> pts;
        for (int i = 0; i < k; ++i) {
            const double x = std::log(mags[static_cast<std::size_t>(i)]);
            const double y = std::log(static_cast<double>(i + 1) / static_cast<double>(mags.size()));
            pts.push_back({x, y});
            mx += x;
            my += y;
        }
        mx /= k;
        my /= k;
        double sxx = 0.0, sxy = 0.0;
        for (const auto& [x, y] : pts) {
            sxx += (x - mx) * (x - mx);
            sxy += (x - mx) * (y - my);
        }
        est.index = -sxy / sxx;
    }
    const double rel = 1.96 / std::sqrt(static_cast<double>(k));
    est.ci_low = est.index * (1.0 - rel);
    est.ci_high = est.index * (1.0 + rel);
    return est;
}

inline int default_tail_k(std::size_t sample_size) {
    return static_cast<int>(std::sqrt(static_cast<double>(sample_size)));
}

struct SurvivalCurve {
    std::vector<double> z_grid;       // in [0, n)
    std::vector<double> survival;     // nonincreasing, in [0, 1]
    std::vector<double> half_width95;
    std::size_t sample_count = 0;
};

inline std::vector<double> default_survival_grid(int n) {
    std::vector<double> grid;
    const double nd = static_cast<double>(n);
    for (int i = 0; i <= 256; ++i) grid.push_back((nd - 1.0) * i / 256.0);
    // refine the approach to n in h-space, z = n - h^2
    const double h_hi = 1.0, h_lo = std::pow(nd, -4.0);
    for (int i = 0; i <= 256; ++i) {
        const double h = h_hi * std::pow(h_lo / h_hi, static_cast<double>(i) / 256.0);
        grid.push_back(nd - h * h);
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    while (!grid.empty() && grid.back() >= nd) grid.pop_back();
    return grid;
}

inline SurvivalCurve estimate_survival(const std::vector<TStatSummary>& summaries,
                                       std::vector<double> z_grid = {}) {
    if (summaries.empty()) throw std::invalid_argument("estimate_survival: empty sample");
    const int n = summaries[0].n;
    if (z_grid.empty()) z_grid = default_survival_grid(n);
    std::sort(z_grid.begin(), z_grid.end());

    std::vector<double> u(summaries.size());
    for (std::size_t i = 0; i < summaries.size(); ++i) u[i] = summaries[i].u_star;
    std::sort(u.begin(), u.end());

    SurvivalCurve c;
    c.z_grid = std::move(z_grid);
    c.sample_count = summaries.size();
    const double nn = static_cast<double>(summaries.size());
    for (double z : c.z_grid) {
        const auto it = std::upper_bound(u.begin(), u.end(), z);
        const double p = static_cast<double>(u.end() - it) / nn;
        c.survival.push_back(p);
        c.half_width95.push_back(1.96 * std::sqrt(std::max(0.0, p * (1.0 - p)) / nn));
    }
    return c;
}

enum class NearDegeneracyMode { direct, stratified };

struct NearDegeneracyPoint {
    double h = 0.0;
    double probability = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

// Estimates P(n - U* < h^2) over a grid of h values. The stratified mode
// conditions on X_1 = x, draws the remaining coordinates from F restricted
// to the enclosing relative window (whose constant makes the window event a
// superset of the target event), and reweights by the window mass; the
// estimator is the conditional-probability average over sampled x.
inline std::vector<NearDegeneracyPoint> near_degeneracy_probe(
    const DistributionSpec& dist, int n, std::vector<double> h_grid, std::size_t count,
    std::uint64_t seed, NearDegeneracyMode mode = NearDegeneracyMode::direct, int threads = 0) {
    if (n < 2) throw std::invalid_argument("near_degeneracy_probe: n must be >= 2");
    std::sort(h_grid.begin(), h_grid.end());
    for (double h : h_grid)
        if (!(h > 0.0 && h < 1.0))
            throw std::invalid_argument("near_degeneracy_probe: h values must be in (0,1)");

    std::vector<NearDegeneracyPoint> out;
    const double nd = static_cast<double>(n);

    if (mode == NearDegeneracyMode::direct) {
        const auto summaries = simulate_tstat(dist, n, count, seed, threads);
        for (double h : h_grid) {
            std::size_t hits = 0;
            for (const auto& s : summaries)
                if (nd - s.u_star < h * h) ++hits;
            const double p = static_cast<double>(hits) / static_cast<double>(count);
            const double hw = 1.96 * std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(count));
            out.push_back({h, p, std::max(0.0, p - hw), p + hw});
        }
        return out;
    }

    for (std::size_t hi = 0; hi < h_grid.size(); ++hi) {
        const double h = h_grid[hi];
        // smallest relative window containing {n - u < h^2}: minimizing
        // n - u over all coordinates but one gives eps^2/(2 + 2 eps + eps^2)
        // as the floor at relative offset eps, and inverting that floor at
        // h^2 yields the enclosing half-width (independent of n)
        const double c1 = (h + std::sqrt(2.0 - h * h)) / (1.0 - h * h);
        RandomStream rs(seed, 1000 + hi);
        std::vector<double> buffer(static_cast<std::size_t>(n));
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const double x = draw(dist, rs);
            if (x == 0.0) continue;  // U <= n-1 there, event impossible
            const double w = c1 * h * std::abs(x);
            const double pi = prob_closed(dist, x - w, x + w);
            if (pi <= 0.0) continue;
            buffer[0] = x;
            for (int j = 1; j < n; ++j) buffer[static_cast<std::size_t>(j)] = draw_conditional(dist, x - w, x + w, rs);
            const TStatSummary s = compute_stats(buffer);
            if (nd - s.u_star < h * h) {
                const double term = std::pow(pi, n - 1);
                sum += term;
                sumsq += term * term;
            }
        }
        const double m = static_cast<double>(count);
        const double p = sum / m;
        const double var = std::max(0.0, sumsq / m - p * p);
        const double hw = 1.96 * std::sqrt(var / m);
        out.push_back({h, p, std::max(0.0, p - hw), p + hw});
    }
    return out;
}

struct SubgaussianReport {
    std::vector<int> n_list;
    std::vector<double> t_grid;
    std::vector<std::vector<double>> mgf;        // [n_index][t_index]
    std::vector<std::vector<double>> std_error;  // matching shape
    std::vector<double> fitted_c_per_n;          // minimal per-n envelope constant
    double fitted_c = 0.0;                       // minimal joint envelope constant
};

// Empirical MGF of S_n/V_n per (n, t) and the minimal constant C with
// every estimate <= 2 exp(C t^2).
inline SubgaussianReport subgaussian_probe(const DistributionSpec& dist, std::vector<int> n_list,
                                           std::vector<double> t_grid, std::size_t count,
                                           std::uint64_t seed, int threads = 0) {
    for (double t : t_grid)
        if (std::abs(t) > 3.0)
            throw std::invalid_argument("subgaussian_probe: |t| must be <= 3");
    SubgaussianReport rep;
    rep.n_list = std::move(n_list);
    rep.t_grid = std::move(t_grid);

    for (std::size_t ni = 0; ni < rep.n_list.size(); ++ni) {
        const int n = rep.n_list[ni];
        const auto summaries = simulate_tstat(dist, n, count, seed + ni, threads);
        std::vector<double> ratios(summaries.size());
        for (std::size_t i = 0; i < summaries.size(); ++i)
            ratios[i] = summaries[i].vnorm > 0.0 ? summaries[i].sum / summaries[i].vnorm : 0.0;

        std::vector<double> row, se_row;
        double cn = 0.0;
        for (double t : rep.t_grid) {
            double s = 0.0, ss = 0.0;
            for (double v : ratios) {
                const double e = std::exp(t * v);
                s += e;
                ss += e * e;
            }
            const double m = static_cast<double>(ratios.size());
            const double mean = s / m;
            const double var = std::max(0.0, ss / m - mean * mean);
            row.push_back(mean);
            se_row.push_back(std::sqrt(var / m));
            if (t != 0.0 && mean > 2.0) cn = std::max(cn, std::log(mean / 2.0) / (t * t));
        }
        rep.mgf.push_back(std::move(row));
        rep.std_error.push_back(std::move(se_row));
        rep.fitted_c_per_n.push_back(cn);
        rep.fitted_c = std::max(rep.fitted_c, cn);
    }
    return rep;
}

}  // namespace tstatlab
