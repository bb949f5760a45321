#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>
#include <stdexcept>
#include <vector>

namespace tstatlab {

// Gauss-Kronrod 7-15 pair on [a,b]; returns the K15 value and an error
// estimate from the G7/K15 discrepancy.
template <class Func>
double gauss_kronrod_15(const Func& f, double a, double b, double& err) {
    static const double nodes[8] = {
        0.000000000000000, 0.207784955007898, 0.405845151377397, 0.586087235467691,
        0.741531185599394, 0.864864423359769, 0.949107912342759, 0.991455371120813};
    static const double wk[8] = {
        0.209482141084728, 0.204432940075298, 0.190350578064785, 0.169004726639267,
        0.140653259715525, 0.104790010322250, 0.063092092629979, 0.022935322010529};
    // Gauss weights attach to the even-indexed nodes.
    static const double wg[4] = {
        0.417959183673469, 0.381830050505119, 0.279705391489277, 0.129484966168870};

    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);

    const double f0 = f(mid);
    double k15 = wk[0] * f0;
    double g7 = wg[0] * f0;
    for (int i = 1; i < 8; ++i) {
        const double dx = half * nodes[i];
        const double fi = f(mid + dx) + f(mid - dx);
        k15 += wk[i] * fi;
        if (i % 2 == 0) g7 += wg[i / 2] * fi;
    }
    k15 *= half;
    g7 *= half;
    err = std::abs(k15 - g7);
    return k15;
}

// Globally adaptive quadrature: repeatedly bisects the subinterval with the
// largest error estimate. Jump or kink locations known in advance (step
// survival functions, interpolation grids) can be passed as knots; each
// resulting piece is then smooth and the nested error estimate is reliable.
template <class Func>
double integrate_adaptive(const Func& f, double a, double b,
                          double rel_tol = 1e-10, double abs_tol = 1e-14,
                          int max_intervals = 8000,
                          const std::vector<double>& knots = {}) {
    if (!(a < b)) return 0.0;

    struct Piece {
        double err, a, b, val;
        bool operator<(const Piece& o) const { return err < o.err; }
    };
    std::priority_queue<Piece> heap;

    std::vector<double> edges;
    edges.push_back(a);
    for (double k : knots)
        if (k > a && k < b) edges.push_back(k);
    edges.push_back(b);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    double total = 0.0;
    double total_err = 0.0;
    for (std::size_t i = 1; i < edges.size(); ++i) {
        double e = 0.0;
        const double v = gauss_kronrod_15(f, edges[i - 1], edges[i], e);
        heap.push({e, edges[i - 1], edges[i], v});
        total += v;
        total_err += e;
    }

    int used = static_cast<int>(edges.size()) - 1;
    while (used < max_intervals) {
        if (total_err <= abs_tol || total_err <= rel_tol * std::abs(total)) break;
        Piece top = heap.top();
        heap.pop();
        const double mid = 0.5 * (top.a + top.b);
        if (mid <= top.a || mid >= top.b) {
            // interval exhausted at double precision
            heap.push({0.0, top.a, top.b, top.val});
            continue;
        }
        double el = 0.0, er = 0.0;
        const double vl = gauss_kronrod_15(f, top.a, mid, el);
        const double vr = gauss_kronrod_15(f, mid, top.b, er);
        total += (vl + vr) - top.val;
        total_err += (el + er) - top.err;
        heap.push({el, top.a, mid, vl});
        heap.push({er, mid, top.b, vr});
        ++used;
    }
    return total;
}

}  // namespace tstatlab
