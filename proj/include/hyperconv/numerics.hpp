#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <vector>

#include "hyperconv/errors.hpp"

namespace hyperconv {

inline constexpr double pi = 3.14159265358979323846;

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

// Trapezoid rule over uniformly spaced samples.
inline double trapezoid(double h, const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double s = 0.5 * (v.front() + v.back());
    for (std::size_t i = 1; i + 1 < v.size(); ++i) s += v[i];
    return h * s;
}

namespace detail {

template <typename F>
double adaptive_simpson_rec(const F& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (depth <= 0) throw numeric_error("adaptive_simpson: max recursion depth reached");
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

} // namespace detail

// Adaptive Simpson with absolute tolerance.
template <typename F>
double adaptive_simpson(const F& f, double a, double b, double abs_tol, int max_depth = 48) {
    if (a == b) return 0.0;
    double m = 0.5 * (a + b);
    double fa = f(a), fm = f(m), fb = f(b);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

// Fixed 8-point Gauss-Legendre on [a, b]; enough for the per-cell masses
// of smooth (post-substitution) densities.
template <typename F>
double gauss8(const F& f, double a, double b) {
    static const double xs[4] = {0.1834346424956498, 0.5255324099163290,
                                 0.7966664774136267, 0.9602898564975363};
    static const double ws[4] = {0.3626837833783620, 0.3137066458778873,
                                 0.2223810344533745, 0.1012285362903763};
    double c = 0.5 * (a + b), r = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += ws[i] * (f(c + r * xs[i]) + f(c - r * xs[i]));
    return r * s;
}

// ---------------------------------------------------------------------------
// Piecewise-linear sample access
// ---------------------------------------------------------------------------

// Value of the piecewise-linear interpolant of `v` (nodes origin + i*h) at t;
// zero outside the sampled window.
inline double pl_eval(double origin, double h, const std::vector<double>& v, double t) {
    if (v.empty()) return 0.0;
    double u = (t - origin) / h;
    if (u <= 0.0 || u >= double(v.size() - 1)) {
        // exact node hits at the window ends still count
        if (u == 0.0) return v.front();
        if (u == double(v.size() - 1)) return v.back();
        return 0.0;
    }
    auto i = static_cast<std::size_t>(u);
    double w = u - double(i);
    return v[i] * (1.0 - w) + v[i + 1] * w;
}

// ---------------------------------------------------------------------------
// Adaptive Runge-Kutta (Dormand-Prince 5(4)) for small fixed-size systems
// ---------------------------------------------------------------------------

template <typename T, std::size_t N>
using state = std::array<T, N>;

namespace detail {

template <typename T, std::size_t N>
state<T, N> axpy(const state<T, N>& y, double a, const state<T, N>& d) {
    state<T, N> r;
    for (std::size_t i = 0; i < N; ++i) r[i] = y[i] + a * d[i];
    return r;
}

} // namespace detail

// Integrates y' = f(x, y) from x0, sampling the solution at each point of
// `xs` (strictly increasing, xs.front() >= x0). Local error controlled to
// rtol * |y| + atol per step.
template <typename T, std::size_t N, typename F>
std::vector<state<T, N>> rk45_path(const F& f, double x0, state<T, N> y, const std::vector<double>& xs,
                                   double rtol = 1e-10, double atol = 1e-12) {
    // Dormand-Prince coefficients
    static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static const double a21 = 1.0 / 5;
    static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
    static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                        b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // embedded 4th-order weights
    static const double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
                        e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

    std::vector<state<T, N>> out;
    out.reserve(xs.size());
    double x = x0;
    double hstep = xs.empty() ? 0.0 : std::max(1e-8, (xs.back() - x0) * 1e-4);
    auto k1 = f(x, y);
    std::size_t next = 0;
    int rejected_in_a_row = 0;
    while (next < xs.size()) {
        if (xs[next] <= x + 1e-14 * std::max(1.0, std::abs(x))) {
            out.push_back(y);
            ++next;
            continue;
        }
        double target = xs[next];
        double h = std::min(hstep, target - x);
        using detail::axpy;
        auto y2 = axpy(y, h * a21, k1);
        auto k2 = f(x + c2 * h, y2);
        state<T, N> y3;
        for (std::size_t i = 0; i < N; ++i) y3[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        auto k3 = f(x + c3 * h, y3);
        state<T, N> y4;
        for (std::size_t i = 0; i < N; ++i)
            y4[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        auto k4 = f(x + c4 * h, y4);
        state<T, N> y5;
        for (std::size_t i = 0; i < N; ++i)
            y5[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        auto k5 = f(x + c5 * h, y5);
        state<T, N> y6;
        for (std::size_t i = 0; i < N; ++i)
            y6[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        auto k6 = f(x + h, y6);
        state<T, N> ynew;
        for (std::size_t i = 0; i < N; ++i)
            ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        auto k7 = f(x + h, ynew);
        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            T e4th = y[i] + h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] +
                                 e7 * k7[i]);
            double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err = std::max(err, std::abs(ynew[i] - e4th) / sc);
        }
        if (err <= 1.0) {
            x += h;
            y = ynew;
            k1 = k7; // FSAL
            rejected_in_a_row = 0;
        } else if (++rejected_in_a_row > 60) {
            throw numeric_error("rk45_path: step size collapsed at x = " + std::to_string(x));
        }
        double fac = 0.9 * std::pow(err > 0 ? 1.0 / err : 1e6, 0.2);
        hstep = h * std::clamp(fac, 0.2, 5.0);
        hstep = std::max(hstep, 1e-13 * std::max(1.0, std::abs(x)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

// Worker count: HYPERCONV_THREADS if set, else hardware concurrency.
inline unsigned worker_count() {
    if (const char* env = std::getenv("HYPERCONV_THREADS")) {
        long n = std::strtol(env, nullptr, 10);
        if (n >= 1) return static_cast<unsigned>(n);
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc ? hc : 1;
}

// Runs fn(i) for i in [0, n). Chunks are disjoint, so results written to
// disjoint slots are deterministic regardless of scheduling.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    unsigned workers = worker_count();
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    workers = std::min<std::size_t>(workers, n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&fn, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace hyperconv
