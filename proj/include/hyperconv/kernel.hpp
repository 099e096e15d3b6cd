#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hyperconv/errors.hpp"
#include "hyperconv/measure.hpp"
#include "hyperconv/model.hpp"
#include "hyperconv/numerics.hpp"

namespace hyperconv {

// ---------------------------------------------------------------------------
// Explicit marching for u_yy + (A'/A)(y) u_y = u_xx + (A'/A)(x) u_x
// with u(x, 0) = f(x), u_y(x, 0) = 0 and a Neumann wall at x = 0.
//
// Space discretization is the self-adjoint three-point stencil
//   (Lx u)_i = [A(x_{i+1/2})(u_{i+1}-u_i) - A(x_{i-1/2})(u_i-u_{i-1})]
//              / (A(x_i) h^2),
// at the wall (even extension) (Lx u)_0 = 2(1+alpha0)(u_1-u_0)/h^2.
// Time stepping uses the matching half-point weights:
//   u^{n+1} = u^n + r_n (u^n - u^{n-1}) + s_n (Lx u^n),
//   r_n = A(y_{n-1/2})/A(y_{n+1/2}),  s_n = A(y_n) h_y^2 / A(y_{n+1/2}),
// started by u^1 = u^0 + (h_y^2/2) Lx u^0. Stable for h_y <= h_x; h_y
// targets cfl * h_x and is shrunk so the rows land exactly on y.
//
// Optional zeroth-order terms V(x), W(y) (used by the transmuted-coordinates
// route) turn the right side into Lx u - V(x) u + W(y_n) u.
// ---------------------------------------------------------------------------

namespace detail {

struct SpaceOperator {
    double h = 0.0;
    std::vector<double> sub, diag, sup; // row i: sub u_{i-1} + diag u_i + sup u_{i+1}

    std::size_t size() const { return diag.size(); }

    // Last row is zero: the right boundary is frozen. The domain is widened
    // past the dependence cone, so the freeze is never felt at the output.
    void apply(const std::vector<double>& u, std::vector<double>& out) const {
        std::size_t n = size();
        out[0] = diag[0] * u[0] + sup[0] * u[1];
        for (std::size_t i = 1; i + 1 < n; ++i)
            out[i] = sub[i] * u[i - 1] + diag[i] * u[i] + sup[i] * u[i + 1];
        out[n - 1] = 0.0;
    }

    void apply_t(const std::vector<double>& v, std::vector<double>& out) const {
        std::size_t n = size();
        out[0] = diag[0] * v[0] + sub[1] * v[1];
        for (std::size_t i = 1; i + 1 < n; ++i)
            out[i] = sup[i - 1] * v[i - 1] + diag[i] * v[i] + sub[i + 1] * v[i + 1];
        out[n - 1] = sup[n - 2] * v[n - 2];
    }
};

inline SpaceOperator make_space_operator(const SturmLiouvilleModel& m, double h, std::size_t cols,
                                         const std::function<double(double)>& potential = {}) {
    if (cols < 3) throw domain_error("marching: domain too small");
    SpaceOperator op;
    op.h = h;
    op.sub.assign(cols, 0.0);
    op.diag.assign(cols, 0.0);
    op.sup.assign(cols, 0.0);
    const double inv_h2 = 1.0 / (h * h);
    op.diag[0] = -2.0 * (1.0 + m.alpha0) * inv_h2;
    op.sup[0] = 2.0 * (1.0 + m.alpha0) * inv_h2;
    if (potential) op.diag[0] -= potential(0.0);
    for (std::size_t i = 1; i + 1 < cols; ++i) {
        double x = double(i) * h;
        double ai = m.A(x);
        double p = m.A(x + 0.5 * h) * inv_h2 / ai;
        double q = m.A(x - 0.5 * h) * inv_h2 / ai;
        op.sub[i] = q;
        op.sup[i] = p;
        op.diag[i] = -(p + q);
        if (potential) op.diag[i] -= potential(x);
    }
    return op;
}

struct RowWeights {
    double h_y = 0.0;
    double k0 = 0.0;                // startup curvature factor h_y^2 / (2 (1 + alpha0))
    std::size_t steps = 0;          // levels run 0..steps
    std::vector<double> r, s, pot;  // indexed by level n = 1..steps-1; pot[0] used in startup
};

inline RowWeights make_row_weights(const SturmLiouvilleModel& m, double y, double h_x, double cfl,
                                   const std::function<double(double)>& potential = {}) {
    if (!(cfl > 0.0) || cfl > 1.0) throw domain_error("marching: need 0 < cfl <= 1");
    if (!(y > 0.0)) throw domain_error("marching: need y > 0");
    auto steps = static_cast<std::size_t>(std::ceil(y / (cfl * h_x) - 1e-12));
    if (steps < 2) steps = 2;
    RowWeights w;
    w.steps = steps;
    w.h_y = y / double(steps);
    // Even solutions have (Ly u)(0) = (1 + alpha0) u_yy(0), so the first row
    // advances with the reduced curvature h_y^2 / (2 (1 + alpha0)).
    w.k0 = 0.5 * w.h_y * w.h_y / (1.0 + m.alpha0);
    if (w.h_y > h_x * (1.0 + 1e-12))
        throw numeric_error("marching: h_y exceeds h_x; explicit step unstable");
    w.r.assign(steps, 0.0);
    w.s.assign(steps, 0.0);
    w.pot.assign(steps, 0.0);
    if (potential) w.pot[0] = potential(0.0);
    for (std::size_t n = 1; n < steps; ++n) {
        double yn = double(n) * w.h_y;
        double ap = m.A(yn + 0.5 * w.h_y);
        double am = m.A(yn - 0.5 * w.h_y);
        w.r[n] = am / ap;
        w.s[n] = m.A(yn) * w.h_y * w.h_y / ap;
        if (potential) w.pot[n] = potential(yn);
    }
    return w;
}

// Forward march; returns the final row in u0 and the sup-norm growth ratio.
inline double march_forward(const SpaceOperator& op, const RowWeights& w, std::vector<double>& u0) {
    std::size_t cols = op.size();
    std::vector<double> prev = u0, cur(cols), lx(cols);
    double sup0 = 0.0;
    for (double v : u0) sup0 = std::max(sup0, std::abs(v));
    if (sup0 == 0.0) sup0 = 1.0;
    double sup_max = sup0;

    op.apply(u0, lx);
    for (std::size_t i = 0; i < cols; ++i) cur[i] = u0[i] + w.k0 * (lx[i] + w.pot[0] * u0[i]);

    for (std::size_t n = 1; n < w.steps; ++n) {
        op.apply(cur, lx);
        double a = 1.0 + w.r[n] + w.s[n] * w.pot[n];
        double sup = 0.0;
        for (std::size_t i = 0; i < cols; ++i) {
            double next = a * cur[i] - w.r[n] * prev[i] + w.s[n] * lx[i];
            prev[i] = cur[i];
            cur[i] = next;
            sup = std::max(sup, std::abs(next));
        }
        sup_max = std::max(sup_max, sup);
        if (sup > 1e6 * sup0) throw numeric_error("marching: sup norm blow-up detected");
    }
    u0 = std::move(cur);
    return sup_max / sup0;
}

// Largest stable leapfrog step: h_y^2 lam <= 4 with lam the spectral radius
// of -Lx. The wall row pushes lam h^2 above the interior value 4 (about
// 3 + 1.75 alpha0 empirically), so the step is measured on the actual
// operator by a deterministic power iteration, with a 5% safety margin.
inline double max_stable_hy(const SpaceOperator& op) {
    std::size_t n = op.size();
    std::vector<double> v(n), w(n);
    unsigned state = 0x9e3779b9u;
    for (auto& e : v) {
        state = state * 1664525u + 1013904223u;
        e = double(state >> 8) * (1.0 / double(1u << 24)) - 0.5;
    }
    double lam = 0.0;
    for (int it = 0; it < 300; ++it) {
        op.apply(v, w);
        double n2 = 0.0;
        for (double e : w) n2 += e * e;
        n2 = std::sqrt(n2);
        if (!(n2 > 0.0)) break;
        lam = n2;
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / n2;
    }
    if (!(lam > 0.0)) throw numeric_error("marching: spectral probe failed");
    return 1.9 / std::sqrt(lam);
}

// Gradient of sum_j seed_j * (final row)_j with respect to the initial row,
// by one backward sweep of the transposed recurrence. This is the exact
// transpose of march_forward as a linear map.
inline std::vector<double> march_adjoint(const SpaceOperator& op, const RowWeights& w,
                                         std::vector<double> seed) {
    std::size_t cols = op.size();
    if (seed.size() != cols) throw domain_error("marching: seed size mismatch");
    std::vector<double> an1 = std::move(seed), an(cols, 0.0), anm1(cols), lx(cols);
    for (std::size_t n = w.steps - 1; n >= 1; --n) {
        op.apply_t(an1, lx);
        double a = 1.0 + w.r[n] + w.s[n] * w.pot[n];
        for (std::size_t i = 0; i < cols; ++i) {
            an[i] += a * an1[i] + w.s[n] * lx[i];
            anm1[i] = -w.r[n] * an1[i];
        }
        if (n == 1) break;
        std::swap(an1, an);
        an = std::move(anm1);
        anm1.resize(cols);
    }
    // an = lambda^1, anm1 = lambda^0; add the startup transpose.
    op.apply_t(an, lx);
    std::vector<double> g(cols);
    for (std::size_t i = 0; i < cols; ++i)
        g[i] = anm1[i] + an[i] + w.k0 * (lx[i] + w.pot[0] * an[i]);
    double sup = 0.0;
    for (double v : g) sup = std::max(sup, std::abs(v));
    if (!(sup < 1e6)) throw numeric_error("marching: adjoint sweep blow-up detected");
    return g;
}

inline std::vector<double> march_adjoint(const SpaceOperator& op, const RowWeights& w,
                                         std::size_t target) {
    if (target >= op.size()) throw domain_error("marching: target outside domain");
    std::vector<double> seed(op.size(), 0.0);
    seed[target] = 1.0;
    return march_adjoint(op, w, std::move(seed));
}

} // namespace detail

// ---------------------------------------------------------------------------
// Generalized translation of a function: (T_y f)(x).
// ---------------------------------------------------------------------------

struct TranslateOptions {
    double h = 1e-3;        // spatial step
    double cfl = 0.8;       // h_y target as a fraction of h
    double x_out = 4.0;     // report u on [0, x_out]
    double f_window = std::numeric_limits<double>::infinity(); // largest valid x for f
};

struct TranslateResult {
    double step = 0.0;          // x grid step; values[i] = (T_y f)(i * step)
    double h_y = 0.0;
    std::vector<double> values;
    double sup_ratio = 1.0;     // max_n sup|u^n| / sup|f| (near 1 for stable runs)
};

inline TranslateResult translate_function(const SturmLiouvilleModel& m,
                                          const std::function<double(double)>& f, double y,
                                          const TranslateOptions& opt = {}) {
    if (!(y > 0.0)) throw domain_error("translate_function: need y > 0");
    if (!(opt.h > 0.0) || !(opt.x_out > 0.0))
        throw domain_error("translate_function: need h, x_out > 0");
    const double h = opt.h;
    // The effective step ratio is capped by the measured stability bound; the
    // span must cover the dependence cone, which widens as the cap shrinks.
    double c = std::min(opt.cfl, 1.7 / std::sqrt(3.0 + 2.0 * m.alpha0));
    std::size_t cols = 0;
    detail::SpaceOperator op;
    for (int pass = 0;; ++pass) {
        double span = opt.x_out + y / c + 8.0 * h;
        if (span > opt.f_window + 1e-12)
            throw domain_error("translate_function: f window too small; need samples to x_out + y/cfl");
        cols = static_cast<std::size_t>(std::ceil(span / h)) + 1;
        op = detail::make_space_operator(m, h, cols);
        double cap = detail::max_stable_hy(op) / h;
        if (cap >= c) break;
        if (pass == 2) throw numeric_error("translate_function: no stable time step for this model");
        c = cap;
    }
    auto w = detail::make_row_weights(m, y, h, c);
    std::vector<double> u(cols);
    for (std::size_t i = 0; i < cols; ++i) u[i] = f(double(i) * h);

    TranslateResult res;
    res.step = h;
    res.h_y = w.h_y;
    res.sup_ratio = detail::march_forward(op, w, u);
    auto keep = static_cast<std::size_t>(std::floor(opt.x_out / h + 1e-9)) + 1;
    keep = std::min(keep, cols);
    u.resize(keep);
    res.values = std::move(u);
    return res;
}

// ---------------------------------------------------------------------------
// Convolution kernel density: delta_x * delta_y = k_{xy}(t) dt,
// supported on [|x-y|, x+y] with unit mass.
// ---------------------------------------------------------------------------

enum class KernelMethod { automatic, closed_form, marched, transmuted };

struct TranslationKernel {
    double x = 0.0, y = 0.0;          // snapped to the t grid
    double support_lo = 0.0, support_hi = 0.0;
    KernelMethod method = KernelMethod::automatic;
    GridMeasure density;              // pure density on the t grid

    // marched-route diagnostics (trivial for closed forms)
    double refine_l1 = 0.0;           // L1 gap between the h and h/2 solutions
    double clipped_outside = 0.0;     // mass removed outside the support
    double clipped_negative = 0.0;    // mass removed clamping negative ripples
    double renorm_factor = 1.0;       // final rescale restoring unit mass
    double raw_mass = 1.0;            // mass before clipping and rescaling

    double mass() const { return density.mass(); }
};

namespace detail {

inline GridMeasure naimark_kernel_cells(double x, double y, double h) {
    // k(t) = sinh t / (2 sinh x sinh y); exact cell masses via cosh.
    double lo = std::abs(x - y), hi = x + y;
    double norm = 1.0 / (2.0 * std::sinh(x) * std::sinh(y));
    auto i0 = static_cast<long>(std::floor(lo / h + 0.5)) - 1;
    auto i1 = static_cast<long>(std::floor(hi / h + 0.5)) + 1;
    GridMeasure out;
    out.origin = double(i0) * h;
    out.step = h;
    out.density.assign(static_cast<std::size_t>(i1 - i0 + 1), 0.0);
    for (long i = i0; i <= i1; ++i) {
        double a = std::max(lo, (double(i) - 0.5) * h);
        double b = std::min(hi, (double(i) + 0.5) * h);
        if (b <= a) continue;
        out.density[static_cast<std::size_t>(i - i0)] = norm * (std::cosh(b) - std::cosh(a)) / h;
    }
    out.normalize();
    return out;
}

struct MollyDiag {
    double raw_mass = 1.0;
    double clipped_outside = 0.0;
    double clipped_negative = 0.0;
    double renorm_factor = 1.0;
};

// One complete marched-kernel solve at step h: hat-seeded adjoint sweep,
// endpoint rebuild, support clip, renormalization. Target sits at node xi.
inline GridMeasure mollified_kernel_level(const SturmLiouvilleModel& coeff, long long xi, double y,
                                          double h, double cfl,
                                          const std::function<double(double)>& vx,
                                          const std::function<double(double)>& wy,
                                          const TransmutationData* tr, MollyDiag* diag) {
    const double xs = double(xi) * h;
    const double lo = std::abs(xs - y), hi = xs + y;

    // hat half-width W ~ h^{1/3}, shrunk so it stays inside [0, 2 xs]
    auto Wn = std::max<long long>(1, std::min(xi, std::llround(0.3 * std::cbrt(h) / h)));
    const double W = double(Wn) * h;

    // Stability-capped step ratio; the adjoint cone reaches xs + W + steps*h,
    // so the span grows as the cap shrinks. The cap in cfl units is h-scale
    // invariant, so both refinement levels land on the same ratio.
    double c = std::min(cfl, 1.7 / std::sqrt(3.0 + 2.0 * coeff.alpha0));
    std::size_t cols = 0;
    SpaceOperator op;
    for (int pass = 0;; ++pass) {
        double span = hi + W + y * (1.0 / c - 1.0) + 10.0 * h;
        cols = static_cast<std::size_t>(std::ceil(span / h)) + 1;
        op = make_space_operator(coeff, h, cols, vx);
        double cap = max_stable_hy(op) / h;
        if (cap >= c) break;
        if (pass == 2) throw numeric_error("kernel_density: no stable time step for this model");
        c = cap;
    }
    auto w = make_row_weights(coeff, y, h, c, wy);

    std::vector<double> seed(cols, 0.0);
    seed[static_cast<std::size_t>(xi)] = 1.0 / double(Wn);
    for (long long j = 1; j < Wn; ++j) {
        double v = (1.0 - double(j) / double(Wn)) / double(Wn);
        seed[static_cast<std::size_t>(xi - j)] = v;
        if (xi + j < (long long)cols) seed[static_cast<std::size_t>(xi + j)] = v;
    }
    auto g = march_adjoint(op, w, std::move(seed));
    for (auto& v : g) v /= h;

    if (tr) {
        // k_{xy}(t) = B(t) / (B(x) B(y)) * transmuted kernel
        double bx = tr->B(xs), by = tr->B(y);
        for (std::size_t i = 0; i < cols; ++i) g[i] *= tr->B(double(i) * h) / (bx * by);
    }

    MollyDiag d;
    d.raw_mass = trapezoid(h, g);
    for (std::size_t i = 0; i < cols; ++i) {
        double t = double(i) * h;
        if (t < lo - 0.5 * h || t > hi + 0.5 * h) d.clipped_outside += std::abs(g[i]) * h;
    }

    // Endpoint bands [lo, lo+B] and [hi-B, hi] are ruined by the smeared
    // jumps; rebuild them from the secant through the adjacent smooth region,
    // assigning boundary cells exactly their clipped share of the line.
    double B = 1.5 * W;
    if (hi - lo < 6.0 * B) B = (hi - lo) / 6.0;
    B = std::max(B, 2.0 * h);
    auto node = [&](double t) { return std::llround(t / h); };
    auto line_fill = [&](double t1, double t2, long long from, long long to) {
        long long j1 = node(t1), j2 = node(t2);
        if (j1 < 0 || j2 >= (long long)cols || j2 <= j1) return;
        double slope = (g[j2] - g[j1]) / (double(j2 - j1) * h);
        double v1 = g[j1];
        for (long long j = std::max(0ll, from); j <= std::min<long long>(to, cols - 1); ++j) {
            double t = double(j) * h;
            double ca = std::max(t - 0.5 * h, lo), cb = std::min(t + 0.5 * h, hi);
            if (cb <= ca) {
                g[j] = 0.0;
                continue;
            }
            double mid = 0.5 * (ca + cb);
            g[j] = (v1 + slope * (mid - double(j1) * h)) * (cb - ca) / h;
        }
    };
    line_fill(lo + 1.25 * B, lo + 1.75 * B, node(lo - h) - 1, node(lo + B));
    line_fill(hi - 1.75 * B, hi - 1.25 * B, node(hi - B), node(hi + h) + 1);

    for (std::size_t i = 0; i < cols; ++i) {
        double t = double(i) * h;
        if (t < lo - 0.5 * h || t > hi + 0.5 * h) {
            g[i] = 0.0;
        } else if (g[i] < 0.0) {
            d.clipped_negative += -g[i] * h;
            g[i] = 0.0;
        }
    }

    GridMeasure out;
    out.origin = 0.0;
    out.step = h;
    out.density = std::move(g);
    out.normalize();
    double mass = out.mass();
    if (!(mass > 0.1))
        throw numeric_error("kernel_density: marched kernel lost its mass; refine h");
    d.renorm_factor = 1.0 / mass;
    for (auto& v : out.density) v *= d.renorm_factor;
    if (diag) *diag = d;
    return out;
}

} // namespace detail

inline TranslationKernel kernel_density(const SturmLiouvilleModel& m, double x, double y,
                                        double h = 1e-3, KernelMethod method = KernelMethod::automatic,
                                        double cfl = 0.8) {
    if (!(h > 0.0)) throw domain_error("kernel_density: need h > 0");
    if (!(x >= h) || !(y >= h))
        throw domain_error("kernel_density: need x, y >= h (atoms at 0 convolve as identity)");
    if (method == KernelMethod::automatic)
        method = (m.family == Family::naimark) ? KernelMethod::closed_form : KernelMethod::marched;

    TranslationKernel ker;
    ker.method = method;

    if (method == KernelMethod::closed_form) {
        if (m.family != Family::naimark)
            throw domain_error("kernel_density: closed form available for the sinh^2 model only");
        ker.x = x;
        ker.y = y;
        ker.support_lo = std::abs(x - y);
        ker.support_hi = x + y;
        ker.density = detail::naimark_kernel_cells(x, y, h);
        return ker;
    }

    // Marched routes. Snap x to the t grid; rows land exactly on y.
    auto xi = static_cast<std::size_t>(std::floor(x / h + 0.5));
    double xs = double(xi) * h;
    ker.x = xs;
    ker.y = y;
    ker.support_lo = std::abs(xs - y);
    ker.support_hi = xs + y;

    std::function<double(double)> vx, wy;
    const SturmLiouvilleModel* coeff = &m;
    SturmLiouvilleModel bk;
    TransmutationData tr;
    if (method == KernelMethod::transmuted) {
        // March in transmuted coordinates: Bessel-Kingman coefficients with
        // the potential q on both axes, then undo the B rescale.
        bk = make_bessel_kingman(m.alpha0);
        tr = transmutation(m);
        double q0 = tr.q(std::max(m.x_regular, 1e-3)); // q extends continuously to 0
        auto q = [&m, tr, q0](double t) { return t < m.x_regular ? q0 : tr.q(t); };
        vx = q;
        wy = q;
        coeff = &bk;
    }

    // Point targets make the leapfrog march ring across the whole cone, so the
    // adjoint is seeded with a hat of half-width W ~ h^{1/3} instead. The
    // hat's O(W^2) smoothing bias is proportional to the kernel itself for
    // these coefficient families and cancels in the final renormalization;
    // what it cannot repair, the endpoint jumps, is rebuilt from the interior
    // profile, the support being known exactly. Two grids an octave apart
    // feed the refine_l1 convergence gap.
    detail::MollyDiag diag;
    auto fine = detail::mollified_kernel_level(*coeff, xi, y, h, cfl, vx, wy,
                                               method == KernelMethod::transmuted ? &tr : nullptr,
                                               &diag);
    auto coarse = detail::mollified_kernel_level(
        *coeff, (xi + 1) / 2, y, 2.0 * h, cfl, vx, wy,
        method == KernelMethod::transmuted ? &tr : nullptr, nullptr);
    ker.refine_l1 = tv_distance(fine, coarse);
    ker.raw_mass = diag.raw_mass;
    ker.clipped_outside = diag.clipped_outside;
    ker.clipped_negative = diag.clipped_negative;
    ker.renorm_factor = diag.renorm_factor;
    ker.density = std::move(fine);
    return ker;
}

// ---------------------------------------------------------------------------
// Hypergroup convolution of atomic measures, and translation of a density
// by an atom (the building block behind approximate identities).
// ---------------------------------------------------------------------------

using WarnLog = std::function<void(const std::string&)>;

// (delta_x * g lambda)(t) = integral of k_{x,s}(t) g(s) ds.
// For the sinh^2 model the kernel separates:
//   out(t) = sinh t / (2 sinh x) * int_{|t-x|}^{t+x} g(s)/sinh(s) ds,
// evaluated from a prefix integral of g/sinh on g's own grid. Otherwise the
// A-symmetry of the kernel triple gives out = A * T_x(g / A), one forward
// march. Input must live on [0, inf).
inline GridMeasure hyper_translate_density(const SturmLiouvilleModel& m, double x,
                                           const GridMeasure& g, double h = 1e-3,
                                           double cfl = 0.8) {
    if (!g.has_density() || !g.atoms.empty())
        throw domain_error("hyper_translate_density: expected a pure density");
    for (std::size_t i = 0; i < g.density.size(); ++i)
        if (g.density[i] != 0.0 && g.origin + double(i) * g.step < -0.5 * g.step)
            throw domain_error("hyper_translate_density: density must be supported on [0, inf)");
    if (!(x > 0.0)) throw domain_error("hyper_translate_density: need x > 0");
    const double ghi = g.window_hi();

    if (m.family == Family::naimark) {
        // (delta_x * g)(t) = sinh(t)/(2 sinh x) int_{|t-x|}^{t+x} g(s)/sinh(s) ds.
        // Naive prefix sums of g/sinh span a dynamic range of e^{2t} and lose
        // all precision past t ~ 36, so each node integrates its own window,
        // in the ratio form sinh(t)/sinh(s) = e^{t-s} (1-e^{-2t})/(1-e^{-2s})
        // whose terms stay O(e^x). x is snapped to the s lattice so the
        // window endpoints are node-aligned for t >= x.
        const double hg = g.step;
        const auto n = static_cast<long long>(g.density.size());
        auto xi = static_cast<long long>(std::llround(x / hg));
        if (xi < 1) xi = 1;
        const double xs = double(xi) * hg;
        if (ghi + xs > 600.0)
            throw domain_error("hyper_translate_density: window too large for the sinh weights");

        // per-node factors, with the first half cell capped away from the
        // sinh singularity (error O(h^2 log h) in mass)
        std::vector<double> w(n), phat(n);
        for (long long k = 0; k < n; ++k) {
            double s = g.origin + double(k) * hg;
            double sc = std::max(s, 0.5 * hg);
            double em = -std::expm1(-2.0 * sc);
            w[k] = g.density[k] / std::sinh(sc);
            phat[k] = g.density[k] * std::exp(s - sc) / em;
        }

        // output lattice shares g's offset; the pad node sits at or below 0
        auto q0 = static_cast<long long>(std::floor(-g.origin / hg));
        GridMeasure out;
        out.origin = g.origin + double(q0) * hg;
        out.step = hg;
        auto M = static_cast<std::size_t>(std::max<long long>(n + xi - q0 + 1, 3));
        out.density.assign(M, 0.0);
        const double norm = 1.0 / (2.0 * std::sinh(xs));
        const double decay = std::exp(-hg);

        for (std::size_t p = 0; p < M; ++p) {
            double t = out.origin + double(p) * hg;
            if (t <= 0.0) continue;
            double v;
            if (t < xs) {
                // window [xs - t, xs + t]: off-lattice lower end, short span;
                // direct trapezoid of w is safe here (no cancellation, and
                // sinh(t) * w stays within range for xs <= 300)
                double b = xs - t;
                auto k0 = static_cast<long long>(std::ceil((b - g.origin) / hg - 1e-9));
                long long kT = q0 + static_cast<long long>(p) + xi;
                double q = 0.0;
                if (k0 > 0 && k0 < n) {
                    double sb = g.origin + double(k0) * hg;
                    double wb = pl_eval(g.origin, hg, g.density, b) /
                                std::sinh(std::max(b, 0.5 * hg));
                    q += 0.5 * (wb + w[k0]) * (sb - b);
                }
                for (long long k = std::max(k0, 0ll); k < std::min(kT, n - 1); ++k)
                    q += 0.5 * hg * (w[k] + w[k + 1]);
                v = std::sinh(t) * norm * q;
            } else {
                // aligned window [t - xs, t + xs] = s nodes [b .. b + 2 xi]
                long long b = q0 + static_cast<long long>(p) - xi;
                long long kT = b + 2 * xi;
                long long k_lo = std::max(b, 0ll), k_hi = std::min(kT, n - 1);
                double run = std::exp(t - (g.origin + double(k_lo) * hg));
                double sum = 0.0;
                for (long long k = k_lo; k <= k_hi; ++k) {
                    double wgt = (k == b || k == kT) ? 0.5 : 1.0;
                    sum += wgt * phat[k] * run;
                    run *= decay;
                }
                v = -std::expm1(-2.0 * t) * norm * hg * sum;
            }
            out.density[p] = std::max(v, 0.0);
        }
        out.normalize();
        return out;
    }

    // General route: out = A * T_x(g / A). The data g/A is regularized at the
    // wall node, where A vanishes.
    auto f = [&](double s) {
        double v = pl_eval(g.origin, g.step, g.density, s);
        if (v == 0.0) return 0.0;
        return v / m.A(std::max(s, 0.5 * g.step));
    };
    TranslateOptions opt;
    opt.h = h;
    opt.cfl = cfl;
    opt.x_out = ghi + x + 2.0 * h;
    auto res = translate_function(m, f, x, opt);
    GridMeasure out;
    out.origin = -h;
    out.step = h;
    out.density.assign(res.values.size() + 2, 0.0);
    for (std::size_t i = 0; i < res.values.size(); ++i)
        out.density[i + 1] = std::max(res.values[i] * m.A(std::max(double(i) * h, 0.5 * h)), 0.0);
    out.normalize();
    return out;
}

// Hypergroup convolution. Atom pairs expand through kernel_density; an atom
// at a position in (0, h) cannot be resolved on the t grid and is snapped to
// h with a warning. Atoms at 0 act as the identity.
inline GridMeasure convolve_H(const SturmLiouvilleModel& m, const GridMeasure& mu,
                              const GridMeasure& nu, double h = 1e-3,
                              KernelMethod method = KernelMethod::automatic,
                              const WarnLog& warn = {}) {
    auto snap = [&](double pos) {
        if (pos > 0.0 && pos < h) {
            if (warn) warn("convolve_H: atom at " + std::to_string(pos) + " snapped to h");
            return h;
        }
        return pos;
    };
    GridMeasure out;
    out.step = h;
    for (const auto& [pa, ma] : mu.atoms) {
        double a = snap(pa);
        for (const auto& [pb, mb] : nu.atoms) {
            double b = snap(pb);
            double mass = ma * mb;
            if (a == 0.0 && b == 0.0) {
                out.atoms.emplace_back(0.0, mass);
            } else if (a == 0.0) {
                out.atoms.emplace_back(b, mass);
            } else if (b == 0.0) {
                out.atoms.emplace_back(a, mass);
            } else {
                auto ker = kernel_density(m, a, b, h, method);
                out = plus(out, scaled(ker.density, mass));
            }
        }
        if (nu.has_density()) {
            GridMeasure d = nu;
            d.atoms.clear();
            out = plus(out, scaled(a > 0.0 ? hyper_translate_density(m, a, d, h) : d, ma));
        }
    }
    if (mu.has_density()) {
        GridMeasure md = mu;
        md.atoms.clear();
        for (const auto& [pb, mb] : nu.atoms) {
            double b = snap(pb);
            if (b == 0.0) {
                out = plus(out, scaled(md, mb));
            } else {
                auto t = hyper_translate_density(m, b, md, h);
                out = plus(out, scaled(t, mb));
            }
        }
        if (nu.has_density())
            throw domain_error("convolve_H: density * density is not supported; atomize one side");
    }
    out.normalize();
    return out;
}

// Approximate-identity defect: || delta_x * v_n - v_n ||_TV for the window
// measure v_n = (1/n) 1_{[0,n]} lambda. For fixed x this decays like 1/n.
inline double approx_identity_defect(const SturmLiouvilleModel& m, double x, double n,
                                     double h = 1e-3) {
    if (!(n > x) || !(x > 0.0)) throw domain_error("approx_identity_defect: need 0 < x < n");
    auto vn = make_box(0.0, n, h, 1.0);
    auto moved = hyper_translate_density(m, x, vn, h);
    return tv_distance(moved, vn);
}

} // namespace hyperconv
