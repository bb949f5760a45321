#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "tstatlab/rng.hpp"

namespace tstatlab {

struct Atom {
    double point = 0.0;
    double prob = 0.0;
};

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Inverse standard normal CDF: Acklam's rational approximation polished by
// one Halley step; accurate to ~1e-15 over (0,1).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must be in (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    double x;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - plow) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

// Observation law F. Values are immutable after construction; all queries
// are const and safe to share across threads.
class DistributionSpec {
public:
    struct Discrete {
        std::vector<Atom> atoms;  // points strictly increasing, probs sum to 1
    };
    struct Normal {
        double mean, stddev;
    };
    struct Cauchy {
        double location, scale;
    };
    struct Uniform {
        double a, b;
    };
    struct Pareto {
        double shape, scale;  // survival (scale/x)^shape on x >= scale
    };
    // Density proportional to |x-center|^(exponent-1) on
    // (center-halfwidth, center+halfwidth); exponent = 1 is the uniform law.
    struct PowerSingularity {
        double center, exponent, halfwidth;
    };
    struct Mixture {
        std::vector<double> weights;
        std::vector<DistributionSpec> components;  // non-Mixture components
    };

    using Variant = std::variant<Discrete, Normal, Cauchy, Uniform, Pareto, PowerSingularity, Mixture>;

    static DistributionSpec discrete(std::vector<Atom> atoms) {
        if (atoms.empty()) throw std::invalid_argument("discrete: atom list is empty");
        double total = 0.0;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            if (!(atoms[i].prob > 0.0))
                throw std::invalid_argument("discrete: atom probabilities must be strictly positive");
            if (i > 0 && !(atoms[i].point - atoms[i - 1].point > 1e-12))
                throw std::invalid_argument(
                    "discrete: atom points must be strictly increasing (separation > 1e-12)");
            total += atoms[i].prob;
        }
        if (std::abs(total - 1.0) > 1e-12) {
            std::ostringstream os;
            os << "discrete: probabilities sum to " << total;
            throw std::invalid_argument(os.str());
        }
        return DistributionSpec(Discrete{std::move(atoms)});
    }
    static DistributionSpec normal(double mean, double stddev) {
        if (!(stddev > 0.0)) throw std::invalid_argument("normal: stddev must be > 0");
        return DistributionSpec(Normal{mean, stddev});
    }
    static DistributionSpec cauchy(double location, double scale) {
        if (!(scale > 0.0)) throw std::invalid_argument("cauchy: scale must be > 0");
        return DistributionSpec(Cauchy{location, scale});
    }
    static DistributionSpec uniform(double a, double b) {
        if (!(b > a)) throw std::invalid_argument("uniform: requires b > a");
        return DistributionSpec(Uniform{a, b});
    }
    static DistributionSpec pareto(double shape, double scale) {
        if (!(shape > 0.0)) throw std::invalid_argument("pareto: shape must be > 0");
        if (!(scale > 0.0)) throw std::invalid_argument("pareto: scale must be > 0");
        return DistributionSpec(Pareto{shape, scale});
    }
    static DistributionSpec power_singularity(double center, double exponent, double halfwidth) {
        if (!(exponent > 0.0 && exponent <= 1.0))
            throw std::invalid_argument("power_singularity: exponent must be in (0,1]");
        if (!(halfwidth > 0.0)) throw std::invalid_argument("power_singularity: halfwidth must be > 0");
        return DistributionSpec(PowerSingularity{center, exponent, halfwidth});
    }
    static DistributionSpec mixture(std::vector<double> weights, std::vector<DistributionSpec> components) {
        if (weights.size() != components.size() || weights.empty())
            throw std::invalid_argument("mixture: weights and components must match and be nonempty");
        double total = 0.0;
        for (double w : weights) {
            if (!(w > 0.0)) throw std::invalid_argument("mixture: weights must be strictly positive");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-12) {
            std::ostringstream os;
            os << "mixture: weights sum to " << total;
            throw std::invalid_argument(os.str());
        }
        for (const auto& c : components)
            if (c.is_mixture())
                throw std::invalid_argument("mixture: components must not themselves be mixtures");
        return DistributionSpec(Mixture{std::move(weights), std::move(components)});
    }

    const Variant& value() const { return v_; }

    bool is_mixture() const { return std::holds_alternative<Mixture>(v_); }
    bool is_discrete() const { return std::holds_alternative<Discrete>(v_); }

    bool has_discrete_part() const {
        if (is_discrete()) return true;
        if (const auto* m = std::get_if<Mixture>(&v_)) {
            for (const auto& c : m->components)
                if (c.is_discrete()) return true;
        }
        return false;
    }
    bool has_continuous_part() const {
        if (is_discrete()) return false;
        if (const auto* m = std::get_if<Mixture>(&v_)) {
            for (const auto& c : m->components)
                if (!c.is_discrete()) return true;
            return false;
        }
        return true;
    }
    bool is_continuous() const { return !has_discrete_part(); }

    std::string kind_name() const {
        struct V {
            std::string operator()(const Discrete&) const { return "discrete"; }
            std::string operator()(const Normal&) const { return "normal"; }
            std::string operator()(const Cauchy&) const { return "cauchy"; }
            std::string operator()(const Uniform&) const { return "uniform"; }
            std::string operator()(const Pareto&) const { return "pareto"; }
            std::string operator()(const PowerSingularity&) const { return "power_singularity"; }
            std::string operator()(const Mixture&) const { return "mixture"; }
        };
        return std::visit(V{}, v_);
    }

private:
    explicit DistributionSpec(Variant v) : v_(std::move(v)) {}
    Variant v_;
};

// ---------------------------------------------------------------------------
// Point queries

inline double cdf(const DistributionSpec& d, double x);

namespace detail {

inline double cdf_impl(const DistributionSpec::Discrete& d, double x) {
    double s = 0.0;
    for (const auto& a : d.atoms) {
        if (a.point <= x) s += a.prob;
        else break;
    }
    return s;
}
inline double cdf_impl(const DistributionSpec::Normal& d, double x) {
    return normal_cdf((x - d.mean) / d.stddev);
}
inline double cdf_impl(const DistributionSpec::Cauchy& d, double x) {
    return 0.5 + std::atan((x - d.location) / d.scale) / M_PI;
}
inline double cdf_impl(const DistributionSpec::Uniform& d, double x) {
    if (x <= d.a) return 0.0;
    if (x >= d.b) return 1.0;
    return (x - d.a) / (d.b - d.a);
}
inline double cdf_impl(const DistributionSpec::Pareto& d, double x) {
    if (x <= d.scale) return 0.0;
    return 1.0 - std::pow(d.scale / x, d.shape);
}
inline double cdf_impl(const DistributionSpec::PowerSingularity& d, double x) {
    const double z = x - d.center;
    if (z <= -d.halfwidth) return 0.0;
    if (z >= d.halfwidth) return 1.0;
    const double frac = std::pow(std::abs(z) / d.halfwidth, d.exponent);
    return z >= 0.0 ? 0.5 + 0.5 * frac : 0.5 - 0.5 * frac;
}
inline double cdf_impl(const DistributionSpec::Mixture& d, double x) {
    double s = 0.0;
    for (std::size_t i = 0; i < d.components.size(); ++i) s += d.weights[i] * cdf(d.components[i], x);
    return s;
}

}  // namespace detail

inline double cdf(const DistributionSpec& d, double x) {
    return std::visit([x](const auto& v) { return detail::cdf_impl(v, x); }, d.value());
}

inline double atom_mass(const DistributionSpec& d, double x) {
    if (const auto* disc = std::get_if<DistributionSpec::Discrete>(&d.value())) {
        auto it = std::lower_bound(disc->atoms.begin(), disc->atoms.end(), x,
                                   [](const Atom& a, double v) { return a.point < v; });
        if (it != disc->atoms.end() && it->point == x) return it->prob;
        return 0.0;
    }
    if (const auto* m = std::get_if<DistributionSpec::Mixture>(&d.value())) {
        double s = 0.0;
        for (std::size_t i = 0; i < m->components.size(); ++i)
            s += m->weights[i] * atom_mass(m->components[i], x);
        return s;
    }
    return 0.0;
}

// P(lo <= X <= hi); zero when the interval is empty.
inline double prob_closed(const DistributionSpec& d, double lo, double hi) {
    if (!(lo <= hi)) return 0.0;
    return std::max(0.0, cdf(d, hi) - cdf(d, lo) + atom_mass(d, lo));
}

// P(lo < X < hi).
inline double prob_open(const DistributionSpec& d, double lo, double hi) {
    if (!(lo < hi)) return 0.0;
    return std::max(0.0, cdf(d, hi) - atom_mass(d, hi) - cdf(d, lo));
}

// All atoms of the law with their absolute masses (mixture weights applied),
// sorted by position; empty for purely continuous laws.
inline std::vector<Atom> atoms_of(const DistributionSpec& d) {
    std::vector<Atom> out;
    if (const auto* disc = std::get_if<DistributionSpec::Discrete>(&d.value())) {
        out = disc->atoms;
        return out;
    }
    if (const auto* m = std::get_if<DistributionSpec::Mixture>(&d.value())) {
        for (std::size_t i = 0; i < m->components.size(); ++i) {
            for (const auto& a : atoms_of(m->components[i])) out.push_back({a.point, m->weights[i] * a.prob});
        }
        std::sort(out.begin(), out.end(), [](const Atom& x, const Atom& y) { return x.point < y.point; });
        // merge coincident points across components
        std::vector<Atom> merged;
        for (const auto& a : out) {
            if (!merged.empty() && merged.back().point == a.point) merged.back().prob += a.prob;
            else merged.push_back(a);
        }
        return merged;
    }
    return out;
}

inline double quantile(const DistributionSpec& d, double p);

namespace detail {

inline double quantile_impl(const DistributionSpec::Discrete& d, double p) {
    double cum = 0.0;
    for (const auto& a : d.atoms) {
        cum += a.prob;
        if (cum >= p) return a.point;
    }
    return d.atoms.back().point;
}
inline double quantile_impl(const DistributionSpec::Normal& d, double p) {
    return d.mean + d.stddev * normal_quantile(p);
}
inline double quantile_impl(const DistributionSpec::Cauchy& d, double p) {
    return d.location + d.scale * std::tan(M_PI * (p - 0.5));
}
inline double quantile_impl(const DistributionSpec::Uniform& d, double p) {
    return d.a + (d.b - d.a) * p;
}
inline double quantile_impl(const DistributionSpec::Pareto& d, double p) {
    return d.scale * std::pow(1.0 - p, -1.0 / d.shape);
}
inline double quantile_impl(const DistributionSpec::PowerSingularity& d, double p) {
    const double s = 2.0 * p - 1.0;
    const double off = d.halfwidth * std::pow(std::abs(s), 1.0 / d.exponent);
    return d.center + std::copysign(off, s);
}

}  // namespace detail

inline double quantile(const DistributionSpec& d, double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantile: p must be in (0,1)");
    if (const auto* m = std::get_if<DistributionSpec::Mixture>(&d.value())) {
        // bracket from component quantiles, then bisect on the mixture CDF
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (const auto& c : m->components) {
            lo = std::min(lo, quantile(c, std::min(p, 1e-3)));
            hi = std::max(hi, quantile(c, std::max(p, 1.0 - 1e-3)));
        }
        double step = std::max(1.0, hi - lo);
        while (cdf(d, lo) >= p && std::isfinite(lo)) lo -= step, step *= 2;
        step = std::max(1.0, hi - lo);
        while (cdf(d, hi) < p && std::isfinite(hi)) hi += step, step *= 2;
        for (int it = 0; it < 200 && hi - lo > 1e-14 * (1.0 + std::abs(lo) + std::abs(hi)); ++it) {
            const double mid = 0.5 * (lo + hi);
            if (cdf(d, mid) >= p) hi = mid;
            else lo = mid;
        }
        return hi;
    }
    return std::visit(
        [p](const auto& v) -> double {
            if constexpr (std::is_same_v<std::decay_t<decltype(v)>, DistributionSpec::Mixture>)
                return 0.0;  // unreachable, handled above
            else
                return detail::quantile_impl(v, p);
        },
        d.value());
}

// ---------------------------------------------------------------------------
// Sampling

inline double draw(const DistributionSpec& d, RandomStream& rs);

namespace detail {

inline double draw_impl(const DistributionSpec::Discrete& d, RandomStream& rs) {
    const double u = rs.uniform01();
    double cum = 0.0;
    for (const auto& a : d.atoms) {
        cum += a.prob;
        if (u <= cum) return a.point;
    }
    return d.atoms.back().point;
}
inline double draw_impl(const DistributionSpec::Normal& d, RandomStream& rs) {
    const double u1 = rs.uniform01();
    const double u2 = rs.uniform01();
    return d.mean + d.stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}
inline double draw_impl(const DistributionSpec::Cauchy& d, RandomStream& rs) {
    return d.location + d.scale * std::tan(M_PI * (rs.uniform01() - 0.5));
}
inline double draw_impl(const DistributionSpec::Uniform& d, RandomStream& rs) {
    return d.a + (d.b - d.a) * rs.uniform01();
}
inline double draw_impl(const DistributionSpec::Pareto& d, RandomStream& rs) {
    return d.scale * std::pow(rs.uniform01(), -1.0 / d.shape);
}
inline double draw_impl(const DistributionSpec::PowerSingularity& d, RandomStream& rs) {
    return quantile_impl(d, rs.uniform01());
}
inline double draw_impl(const DistributionSpec::Mixture& d, RandomStream& rs) {
    const double u = rs.uniform01();
    double cum = 0.0;
    for (std::size_t i = 0; i < d.weights.size(); ++i) {
        cum += d.weights[i];
        if (u <= cum || i + 1 == d.weights.size()) return draw(d.components[i], rs);
    }
    return draw(d.components.back(), rs);
}

}  // namespace detail

inline double draw(const DistributionSpec& d, RandomStream& rs) {
    return std::visit([&rs](const auto& v) { return detail::draw_impl(v, rs); }, d.value());
}

// i.i.d. draws; identical (dist, count, seed) yields bit-identical output.
inline std::vector<double> sample(const DistributionSpec& d, std::size_t count, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("sample: count must be >= 1");
    RandomStream rs(seed);
    std::vector<double> out(count);
    for (auto& x : out) x = draw(d, rs);
    return out;
}

// Draw from F conditioned on the closed interval [lo, hi]; requires
// prob_closed(d, lo, hi) > 0. Used by the stratified near-degeneracy probe.
inline double draw_conditional(const DistributionSpec& d, double lo, double hi, RandomStream& rs) {
    const double flo = cdf(d, lo) - atom_mass(d, lo);  // P(X < lo)
    const double fhi = cdf(d, hi);
    if (!(fhi > flo)) throw std::invalid_argument("draw_conditional: interval has zero mass");
    for (int attempt = 0; attempt < 64; ++attempt) {
        const double u = flo + (fhi - flo) * rs.uniform01();
        double x;
        if (u <= 0.0 || u >= 1.0) continue;
        x = quantile(d, u);
        if (x >= lo && x <= hi) return x;
        // quantile rounding can step just outside; clamp when the mass at the
        // clamped endpoint is real
        if (x < lo && prob_closed(d, lo, lo) > 0.0) return lo;
        if (x > hi && prob_closed(d, hi, hi) > 0.0) return hi;
    }
    return std::clamp(quantile(d, 0.5 * (flo + fhi)), lo, hi);
}

// ---------------------------------------------------------------------------
// Concentration functions

namespace detail {

template <class F>
double golden_max(const F& f, double lo, double hi, double xtol) {
    const double invphi = 0.6180339887498949;
    double a = lo, b = hi;
    double best = std::max(f(a), f(b));
    double x1 = b - invphi * (b - a);
    double x2 = a + invphi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    best = std::max({best, f1, f2});
    int guard = 0;
    while (b - a > xtol && ++guard < 200) {
        if (f1 < f2) {
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
        best = std::max({best, f1, f2});
    }
    return best;
}

// Central range covered by grid search for mixture windows.
inline std::pair<double, double> central_range(const DistributionSpec& d) {
    double lo = quantile(d, 1e-4);
    double hi = quantile(d, 1.0 - 1e-4);
    if (!(hi > lo)) {
        lo -= 1.0;
        hi += 1.0;
    }
    return {lo, hi};
}

inline std::vector<double> window_anchor_points(const DistributionSpec& d, double h) {
    std::vector<double> pts;
    struct V {
        double h;
        std::vector<double>* pts;
        void operator()(const DistributionSpec::Discrete& x) const {
            for (const auto& a : x.atoms) {
                pts->push_back(a.point);
                pts->push_back(a.point - h);
                pts->push_back(a.point + h);
            }
        }
        void operator()(const DistributionSpec::Normal& x) const { pts->push_back(x.mean); }
        void operator()(const DistributionSpec::Cauchy& x) const { pts->push_back(x.location); }
        void operator()(const DistributionSpec::Uniform& x) const {
            pts->push_back(0.5 * (x.a + x.b));
            pts->push_back(x.a + h);
            pts->push_back(x.b - h);
        }
        void operator()(const DistributionSpec::Pareto& x) const { pts->push_back(x.scale + h); }
        void operator()(const DistributionSpec::PowerSingularity& x) const { pts->push_back(x.center); }
        void operator()(const DistributionSpec::Mixture& x) const {
            for (const auto& c : x.components) std::visit(V{h, pts}, c.value());
        }
    };
    std::visit(V{h, &pts}, d.value());
    return pts;
}

}  // namespace detail

namespace detail {

// sliding-window supremum over a sorted atom list: the optimal closed
// window has an atom at its left endpoint
inline double discrete_levy_concentration(const std::vector<Atom>& atoms, double h) {
    double best = 0.0;
    double mass = 0.0;  // sum of probs over [j, k)
    std::size_t k = 0;
    for (std::size_t j = 0; j < atoms.size(); ++j) {
        if (k == j) {
            mass += atoms[k].prob;
            ++k;
        }
        while (k < atoms.size() && atoms[k].point <= atoms[j].point + 2.0 * h) {
            mass += atoms[k].prob;
            ++k;
        }
        best = std::max(best, mass);
        mass -= atoms[j].prob;
    }
    return std::min(best, 1.0);
}

}  // namespace detail

// Levy concentration function Q(h) = sup_x P(|X - x| <= h).
// Exact for purely discrete laws and the closed-form unimodal families;
// grid plus golden-section refinement (1e-10 in x) for mixtures with a
// continuous part.
inline double concentration_Q(const DistributionSpec& d, double h) {
    if (!(h >= 0.0)) throw std::invalid_argument("concentration_Q: h must be >= 0");
    if (!d.has_continuous_part()) return detail::discrete_levy_concentration(atoms_of(d), h);

    struct V {
        const DistributionSpec* self;
        double h;
        double operator()(const DistributionSpec::Discrete& x) const {
            return detail::discrete_levy_concentration(x.atoms, h);
        }
        double operator()(const DistributionSpec::Normal& x) const {
            return std::erf(h / (x.stddev * std::sqrt(2.0)));
        }
        double operator()(const DistributionSpec::Cauchy& x) const {
            return 2.0 * std::atan(h / x.scale) / M_PI;
        }
        double operator()(const DistributionSpec::Uniform& x) const {
            return std::min(1.0, 2.0 * h / (x.b - x.a));
        }
        double operator()(const DistributionSpec::Pareto& x) const {
            return 1.0 - std::pow(x.scale / (x.scale + 2.0 * h), x.shape);
        }
        double operator()(const DistributionSpec::PowerSingularity& x) const {
            if (h >= x.halfwidth) return 1.0;
            return std::pow(h / x.halfwidth, x.exponent);
        }
        double operator()(const DistributionSpec::Mixture&) const {
            const DistributionSpec& dist = *self;
            auto objective = [&dist, hh = h](double center) {
                return prob_closed(dist, center - hh, center + hh);
            };
            auto [lo, hi] = detail::central_range(dist);
            std::vector<double> cand = detail::window_anchor_points(dist, h);
            const int grid_n = 512;
            for (int i = 0; i <= grid_n; ++i)
                cand.push_back(lo + (hi - lo) * static_cast<double>(i) / grid_n);
            std::sort(cand.begin(), cand.end());
            double best = 0.0;
            std::vector<double> vals(cand.size());
            for (std::size_t i = 0; i < cand.size(); ++i) vals[i] = objective(cand[i]);
            // refine around the strongest candidates
            std::vector<std::size_t> order(cand.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::partial_sort(order.begin(), order.begin() + std::min<std::size_t>(8, order.size()),
                              order.end(), [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
            for (std::size_t r = 0; r < std::min<std::size_t>(8, order.size()); ++r) {
                const std::size_t i = order[r];
                const double a = i > 0 ? cand[i - 1] : cand[i] - (hi - lo) / grid_n;
                const double b = i + 1 < cand.size() ? cand[i + 1] : cand[i] + (hi - lo) / grid_n;
                best = std::max(best, detail::golden_max(objective, a, b, 1e-10));
            }
            return std::min(1.0, std::max(best, vals.empty() ? 0.0 : *std::max_element(vals.begin(), vals.end())));
        }
    };
    return std::visit(V{&d, h}, d.value());
}

// Scaled concentration function q(h) = sup_{x != 0} P(|X - x| <= |x| h),
// h in [0,1). Exact for purely discrete laws (candidate centers are atoms
// and window-boundary alignments); multistart numeric maximization
// otherwise. The returned value is a certified lower bound for the
// supremum.
inline double concentration_q(const DistributionSpec& d, double h) {
    if (!(h >= 0.0 && h < 1.0)) throw std::invalid_argument("concentration_q: h must be in [0,1)");

    auto window_mass = [&d, h](double x) {
        if (x == 0.0) return 0.0;
        const double half = std::abs(x) * h;
        return prob_closed(d, x - half, x + half);
    };

    if (!d.has_continuous_part()) {
        double best = 0.0;
        for (const auto& a : atoms_of(d)) {
            if (a.point == 0.0) continue;
            for (double cand : {a.point, a.point / (1.0 - h), a.point / (1.0 + h)})
                best = std::max(best, window_mass(cand));
        }
        return best;
    }

    double best = 0.0;
    std::vector<double> cand;
    for (const auto& a : atoms_of(d)) {
        if (a.point == 0.0) continue;
        cand.push_back(a.point);
        cand.push_back(a.point / (1.0 - h));
        cand.push_back(a.point / (1.0 + h));
    }
    // log-spaced grid over +/-[1e-6, 1e6], 512 points per sign
    const int grid_n = 512;
    for (int i = 0; i < grid_n; ++i) {
        const double expo = -6.0 + 12.0 * static_cast<double>(i) / (grid_n - 1);
        const double mag = std::pow(10.0, expo);
        cand.push_back(mag);
        cand.push_back(-mag);
    }
    std::vector<double> vals(cand.size());
    for (std::size_t i = 0; i < cand.size(); ++i) vals[i] = window_mass(cand[i]);
    std::vector<std::size_t> order(cand.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t keep = std::min<std::size_t>(8, order.size());
    std::partial_sort(order.begin(), order.begin() + keep, order.end(),
                      [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });
    for (std::size_t i = 0; i < cand.size(); ++i) best = std::max(best, vals[i]);
    const double ratio = std::pow(10.0, 12.0 / (grid_n - 1));
    for (std::size_t r = 0; r < keep; ++r) {
        const double x0 = cand[order[r]];
        if (x0 == 0.0) continue;
        const double lo = x0 > 0 ? x0 / ratio : x0 * ratio;
        const double hi = x0 > 0 ? x0 * ratio : x0 / ratio;
        best = std::max(best, detail::golden_max(window_mass, lo, hi, 1e-10));
    }
    return std::min(best, 1.0);
}

// ---------------------------------------------------------------------------
// Exponent fitting and regularity certificates

struct LambdaFit {
    double slope = 0.0;
    double intercept = 0.0;
    double residual_norm = 0.0;
    double slope_std_error = 0.0;
};

// Least-squares slope of log v against log h over profile points.
inline LambdaFit fit_lambda(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 4) throw std::invalid_argument("fit_lambda: need at least 4 points");
    std::vector<double> lx, ly;
    for (const auto& [h, v] : points) {
        if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("fit_lambda: h values must be in (0,1)");
        if (!(v > 0.0))
            throw std::invalid_argument("fit_lambda: nonpositive value; exponent undefined");
        lx.push_back(std::log(h));
        ly.push_back(std::log(v));
    }
    const std::size_t m = lx.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(m);
    my /= static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    LambdaFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
        ss += e * e;
    }
    fit.residual_norm = std::sqrt(ss);
    if (m > 2) fit.slope_std_error = std::sqrt(ss / static_cast<double>(m - 2) / sxx);
    return fit;
}

// True when the density is bounded and eventually monotone in both tails,
// which guarantees q(h) = O(h). Answered analytically per family.
inline bool has_bounded_monotone_density(const DistributionSpec& d) {
    struct V {
        bool operator()(const DistributionSpec::Discrete&) const {
            throw std::domain_error("has_bounded_monotone_density: condition inapplicable to discrete laws");
        }
        bool operator()(const DistributionSpec::Normal&) const { return true; }
        bool operator()(const DistributionSpec::Cauchy&) const { return true; }
        bool operator()(const DistributionSpec::Uniform&) const { return true; }
        bool operator()(const DistributionSpec::Pareto&) const { return true; }
        bool operator()(const DistributionSpec::PowerSingularity& x) const {
            return x.exponent >= 1.0;  // exponent < 1 has an unbounded density
        }
        bool operator()(const DistributionSpec::Mixture& x) const {
            bool all = true;
            for (const auto& c : x.components) all = all && std::visit(V{}, c.value());
            return all;
        }
    };
    if (d.has_discrete_part())
        throw std::domain_error("has_bounded_monotone_density: condition inapplicable to laws with a discrete part");
    return std::visit(V{}, d.value());
}

// Analytic exponent lambda with q(h) <= C h^lambda certified per family;
// nullopt when no certificate exists (any discrete part).
inline std::optional<double> certified_lambda(const DistributionSpec& d) {
    struct V {
        std::optional<double> operator()(const DistributionSpec::Discrete&) const { return std::nullopt; }
        std::optional<double> operator()(const DistributionSpec::Normal&) const { return 1.0; }
        std::optional<double> operator()(const DistributionSpec::Cauchy&) const { return 1.0; }
        std::optional<double> operator()(const DistributionSpec::Uniform&) const { return 1.0; }
        std::optional<double> operator()(const DistributionSpec::Pareto&) const { return 1.0; }
        std::optional<double> operator()(const DistributionSpec::PowerSingularity& x) const {
            return x.exponent;
        }
        std::optional<double> operator()(const DistributionSpec::Mixture& x) const {
            double lam = 1.0;
            for (const auto& c : x.components) {
                auto l = std::visit(V{}, c.value());
                if (!l) return std::nullopt;
                lam = std::min(lam, *l);
            }
            return lam;
        }
    };
    return std::visit(V{}, d.value());
}

// Sampled q/Q profile over an h grid with fitted exponents.
struct ConcentrationProfile {
    std::vector<double> h_grid;
    std::vector<double> q_values;
    std::vector<double> Q_values;
    double fitted_lambda_q = std::numeric_limits<double>::quiet_NaN();
    double fitted_lambda_Q = std::numeric_limits<double>::quiet_NaN();
    double fit_residual_q = std::numeric_limits<double>::quiet_NaN();
    double fit_residual_Q = std::numeric_limits<double>::quiet_NaN();
    double fit_stderr_q = std::numeric_limits<double>::quiet_NaN();
    bool exact = false;  // set for purely discrete laws
};

inline ConcentrationProfile make_concentration_profile(const DistributionSpec& d,
                                                       std::vector<double> h_grid) {
    std::sort(h_grid.begin(), h_grid.end());
    ConcentrationProfile p;
    p.h_grid = std::move(h_grid);
    p.exact = d.is_discrete();
    double run_q = 0.0, run_Q = 0.0;
    for (double h : p.h_grid) {
        // the numeric supremum search returns certified lower bounds, so the
        // running max keeps the profile exactly monotone
        run_q = std::max(run_q, concentration_q(d, h));
        run_Q = std::max(run_Q, concentration_Q(d, h));
        p.q_values.push_back(run_q);
        p.Q_values.push_back(run_Q);
    }
    std::vector<std::pair<double, double>> pq, pQ;
    for (std::size_t i = 0; i < p.h_grid.size(); ++i) {
        if (p.h_grid[i] > 0.0 && p.h_grid[i] < 1.0) {
            if (p.q_values[i] > 0.0) pq.push_back({p.h_grid[i], p.q_values[i]});
            if (p.Q_values[i] > 0.0) pQ.push_back({p.h_grid[i], p.Q_values[i]});
        }
    }
    if (pq.size() >= 4) {
        const LambdaFit f = fit_lambda(pq);
        p.fitted_lambda_q = f.slope;
        p.fit_residual_q = f.residual_norm;
        p.fit_stderr_q = f.slope_std_error;
    }
    if (pQ.size() >= 4) {
        const LambdaFit f = fit_lambda(pQ);
        p.fitted_lambda_Q = f.slope;
        p.fit_residual_Q = f.residual_norm;
    }
    return p;
}

}  // namespace tstatlab
