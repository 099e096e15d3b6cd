#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "hyperconv/errors.hpp"
#include "hyperconv/measure.hpp"
#include "hyperconv/model.hpp"
#include "hyperconv/numerics.hpp"

namespace hyperconv {

// ---------------------------------------------------------------------------
// The measures nu_y on [-y, y]: the distribution of the signed radial part,
// normalized to mass one. They satisfy the Volterra-type recursion
//   2 A(y) nu_y = int_0^y [ e^{2 rho (eta - y)} (A' + 2 rho A)(eta) d_{eta-y}
//                         + e^{2 rho (y - eta)} (A' - 2 rho A)(eta) d_{y-eta} ]
//                 * nu_eta  d eta          (* = line convolution, d_c = atom)
// whose each weight integrates to A(y) exactly, so mass is conserved.
// ---------------------------------------------------------------------------

enum class NuMethod { automatic, closed_form, recursion };

namespace detail {

inline GridMeasure shift_measure(GridMeasure m, double dy) {
    for (auto& [p, w] : m.atoms) p += dy;
    if (m.has_density()) m.origin += dy;
    return m;
}

// Drop negligible density tails so iterated convolutions stay compact.
inline void trim_tails(GridMeasure& m, double eps) {
    if (!m.has_density()) return;
    double tv = m.tv_norm();
    double budget = eps * std::max(tv, 1e-300);
    std::size_t lo = 0, hi = m.density.size();
    double acc = 0.0;
    while (lo + 1 < hi && acc + std::abs(m.density[lo]) * m.step < budget)
        acc += std::abs(m.density[lo]) * m.step, ++lo;
    acc = 0.0;
    while (hi > lo + 1 && acc + std::abs(m.density[hi - 1]) * m.step < budget)
        acc += std::abs(m.density[hi - 1]) * m.step, --hi;
    std::vector<double> keep(m.density.begin() + long(lo), m.density.begin() + long(hi));
    m.origin += double(lo) * m.step;
    m.density = std::move(keep);
    m.normalize();
}

// nu_y for A = sinh^2: density e^t / (2 sinh y) on [-y, y], exact cell masses.
inline GridMeasure naimark_nu_cells(double y, double h) {
    double norm = 1.0 / (2.0 * std::sinh(y));
    auto i0 = static_cast<long>(std::floor(-y / h + 0.5)) - 1;
    auto i1 = static_cast<long>(std::floor(y / h + 0.5)) + 1;
    GridMeasure out;
    out.origin = double(i0) * h;
    out.step = h;
    out.density.assign(static_cast<std::size_t>(i1 - i0 + 1), 0.0);
    for (long i = i0; i <= i1; ++i) {
        double a = std::max(-y, (double(i) - 0.5) * h);
        double b = std::min(y, (double(i) + 0.5) * h);
        if (b <= a) continue;
        out.density[static_cast<std::size_t>(i - i0)] = norm * (std::exp(b) - std::exp(a)) / h;
    }
    out.normalize();
    return out;
}

// nu_y for A = x^{alpha0}: the symmetric beta-type density
//   g_y(t) = (1/B(alpha0/2, 1/2)) (1/y) (1 - (t/y)^2)^{alpha0/2 - 1},
// cells integrated under t = y sin(theta), where the integrand becomes
// cos^{alpha0 - 1}(theta) (smooth for alpha0 >= 1; endpoint accuracy degrades
// below that).
inline GridMeasure bk_nu_cells(double alpha0, double y, double h) {
    double norm = 1.0 / std::beta(0.5 * alpha0, 0.5);
    auto i0 = static_cast<long>(std::floor(-y / h + 0.5)) - 1;
    auto i1 = static_cast<long>(std::floor(y / h + 0.5)) + 1;
    GridMeasure out;
    out.origin = double(i0) * h;
    out.step = h;
    out.density.assign(static_cast<std::size_t>(i1 - i0 + 1), 0.0);
    auto integrand = [alpha0](double th) { return std::pow(std::cos(th), alpha0 - 1.0); };
    double total = 0.0;
    for (long i = i0; i <= i1; ++i) {
        double a = std::max(-y, (double(i) - 0.5) * h);
        double b = std::min(y, (double(i) + 0.5) * h);
        if (b <= a) continue;
        double ta = std::asin(std::clamp(a / y, -1.0, 1.0));
        double tb = std::asin(std::clamp(b / y, -1.0, 1.0));
        double cell = norm * (gauss8(integrand, ta, 0.5 * (ta + tb)) +
                              gauss8(integrand, 0.5 * (ta + tb), tb));
        out.density[static_cast<std::size_t>(i - i0)] = cell / h;
        total += cell;
    }
    if (total > 0.0)
        for (auto& v : out.density) v /= total;
    out.normalize();
    return out;
}

// One pass of the recursion on the lattice y_n = n h, t grid step h. The
// half-weight endpoint at eta = 0 (nu_0 = delta_0) lands on the support-edge
// cells; the implicit eta = y term moves to the denominator 2A(y) - h A'(y).
// Startup rows (n <= 10) use the flat-power closed form, which matches the
// local behavior A ~ a(0) x^{alpha0}. Prefix sums S+- pick up one cell of
// shift and a constant exponential factor per row, so each row costs O(N).
//
// Accuracy contract: pairings against smooth test functions converge for all
// alpha0 >= 1 (observed 1e-5 .. 1e-8). Pointwise TV fidelity of a single row
// is certified only for alpha0 = 2, where the edge profile is flat; for
// alpha0 != 2 the profile carries an (1 - (t/y)^2)^{(alpha0-2)/2} edge law the
// lattice cannot resolve, and a step-independent startup transient (see the
// drift envelope below) deforms rows at the 1e-2 TV level while leaving every
// smooth functional clean.
struct RecursionStats {
    int renormalized = 0;
    double max_drift = 0.0;
};

template <typename RowFn> // RowFn(n, y_n, node span pointer, support lo index, count)
inline RecursionStats nu_recursion(const SturmLiouvilleModel& m, double Y, double h,
                                   RowFn&& on_row) {
    if (!(Y > 0.0) || !(h > 0.0)) throw domain_error("nu_recursion: need Y, h > 0");
    if (m.alpha0 < 1.0 - 1e-9)
        throw numeric_error("nu_recursion: startup needs alpha0 >= 1 (A' bounded at 0)");
    if (2.0 * m.rho * Y > 500.0)
        throw numeric_error("nu_recursion: exponential weights overflow; reduce the horizon");
    auto N = static_cast<std::size_t>(std::floor(Y / h + 0.5));
    if (N < 12) throw domain_error("nu_recursion: horizon under the startup band; shrink h");

    const double rho = m.rho;
    const double ep = std::exp(-2.0 * rho * h); // S+ row-to-row factor
    const double em = std::exp(2.0 * rho * h);  // S- row-to-row factor
    // A'(0+): zero for alpha0 > 1, a(0) at alpha0 = 1.
    double a0p = (m.alpha0 > 1.0 + 1e-9) ? 0.0 : m.A(1e-6) / 1e-6;

    const std::size_t pad = 3;
    const std::size_t M = 2 * (N + pad) + 1;
    const long c = long(N + pad); // index of t = 0
    std::vector<double> sp(M, 0.0), sm(M, 0.0), g(M, 0.0);
    const std::size_t n_start = 10;

    RecursionStats stats;
    for (std::size_t n = 1; n <= N; ++n) {
        double y = double(n) * h;
        if (n > 1) {
            // advance S+ (shift one cell left, decay) and S- (right, growth)
            for (std::size_t i = 0; i + 1 < M; ++i) sp[i] = sp[i + 1] * ep;
            sp[M - 1] = 0.0;
            for (std::size_t i = M - 1; i >= 1; --i) sm[i] = sm[i - 1] * em;
            sm[0] = 0.0;
        }
        long ilo = c - long(n), ihi = c + long(n);
        double an = m.A(y), apn = m.A_prime(y);
        if (n <= n_start) {
            std::fill(g.begin() + ilo, g.begin() + ihi + 1, 0.0);
            // e^{rho t} tilt on the flat-power cells: the first-order
            // asymmetry of nu_y (exact when A = sinh^2). Renormalized below.
            auto closed = bk_nu_cells(m.alpha0, y, h);
            for (std::size_t j = 0; j < closed.density.size(); ++j) {
                double t = closed.origin + double(j) * h;
                long idx = c + long(std::floor(t / h + 0.5));
                if (idx >= ilo && idx <= ihi) g[idx] = closed.density[j] * std::exp(rho * t);
            }
            double mass = 0.0;
            for (long i = ilo; i <= ihi; ++i) mass += g[i];
            mass *= h;
            for (long i = ilo; i <= ihi; ++i) g[i] /= mass;
        } else {
            double den = 2.0 * an - h * apn;
            if (!(den > 0.0)) throw numeric_error("nu_recursion: degenerate implicit step");
            for (long i = ilo; i <= ihi; ++i) g[i] = h * (sp[i] + sm[i]) / den;
            if (a0p > 0.0) {
                g[ilo] += 0.5 * a0p * std::exp(-2.0 * rho * y) / den;
                g[ihi] += 0.5 * a0p * std::exp(2.0 * rho * y) / den;
            }
            double mass = 0.0;
            for (long i = ilo; i <= ihi; ++i) mass += g[i];
            mass *= h;
            double drift = std::abs(mass - 1.0);
            stats.max_drift = std::max(stats.max_drift, drift);
            // Trapezoid defect of the weight integral: the A'' edge terms
            // cancel at alpha0 = 2 (drift O(h^2)), otherwise the t = 0 edge
            // leaves a transient ~ alpha0 (alpha0 - 1) / (12 n^min(alpha0,2))
            // independent of h. Rows inside that envelope renormalize; drift
            // beyond it means the step cannot resolve the model.
            double envelope =
                std::max(m.alpha0 * (m.alpha0 - 1.0), 1.0) /
                (12.0 * std::pow(double(n), std::min(m.alpha0, 2.0)));
            if (drift > 1e-3 && drift > 4.0 * envelope)
                throw numeric_error("nu_recursion: mass drift above 1e-3; the step is too coarse");
            if (drift > 1e-6) {
                for (long i = ilo; i <= ihi; ++i) g[i] /= mass;
                ++stats.renormalized;
            }
        }
        on_row(n, y, g.data() + ilo, ilo - c, static_cast<std::size_t>(ihi - ilo + 1));
        double wp = apn + 2.0 * rho * an, wm = apn - 2.0 * rho * an;
        for (long i = ilo; i <= ihi; ++i) {
            sp[i] += wp * g[i];
            sm[i] += wm * g[i];
        }
    }
    return stats;
}

inline GridMeasure row_to_measure(const double* v, long lo_idx, std::size_t count, double h) {
    GridMeasure out;
    out.origin = double(lo_idx - 1) * h;
    out.step = h;
    out.density.assign(count + 2, 0.0);
    std::copy(v, v + count, out.density.begin() + 1);
    out.normalize();
    return out;
}

} // namespace detail

struct NuFamily {
    std::vector<double> ys;
    std::vector<GridMeasure> nus;
    NuMethod method = NuMethod::automatic;
    int renormalized = 0;   // recursion rows that needed a mass touch-up
    double max_drift = 0.0; // worst relative mass drift before touch-up
};

inline NuFamily nu_family(const SturmLiouvilleModel& m, std::vector<double> ys, double h = 2e-3,
                          NuMethod method = NuMethod::automatic) {
    if (ys.empty()) throw domain_error("nu_family: no y values");
    std::sort(ys.begin(), ys.end());
    if (!(ys.front() > 0.0)) throw domain_error("nu_family: need y > 0");
    bool closed_ok = (m.family == Family::naimark || m.family == Family::bessel_kingman);
    if (method == NuMethod::automatic)
        method = closed_ok ? NuMethod::closed_form : NuMethod::recursion;
    if (method == NuMethod::closed_form && !closed_ok)
        throw domain_error("nu_family: no closed form for this model; use the recursion");

    NuFamily fam;
    fam.method = method;
    fam.ys = ys;
    if (method == NuMethod::closed_form) {
        for (double y : ys)
            fam.nus.push_back(m.family == Family::naimark ? detail::naimark_nu_cells(y, h)
                                                          : detail::bk_nu_cells(m.alpha0, y, h));
        return fam;
    }
    // snap requested ys to the row lattice
    std::vector<std::size_t> rows;
    for (double& y : ys) {
        auto n = static_cast<std::size_t>(std::floor(y / h + 0.5));
        if (n == 0) throw domain_error("nu_family: y below the step");
        rows.push_back(n);
        y = double(n) * h;
    }
    fam.ys = ys;
    fam.nus.resize(ys.size());
    auto stats = detail::nu_recursion(
        m, ys.back(), h, [&](std::size_t n, double, const double* v, long lo, std::size_t cnt) {
            for (std::size_t k = 0; k < rows.size(); ++k)
                if (rows[k] == n) fam.nus[k] = detail::row_to_measure(v, lo, cnt, h);
        });
    fam.renormalized = stats.renormalized;
    fam.max_drift = stats.max_drift;
    return fam;
}

inline GridMeasure nu_measure(const SturmLiouvilleModel& m, double y, double h = 2e-3,
                              NuMethod method = NuMethod::automatic) {
    return nu_family(m, {y}, h, method).nus.front();
}

// ---------------------------------------------------------------------------
// nu_infty: the centered limit of nu_y in the exponential-normalizable class.
// ---------------------------------------------------------------------------

enum class NuInftyMethod { limit, neumann };

struct NuInftyResult {
    GridMeasure nu;
    NuInftyMethod method = NuInftyMethod::limit;
    double residual = 0.0; // limit: last TV increment; neumann: mass defect
    std::vector<std::pair<double, double>> curve; // (y, centered TV increment)
};

inline void require_exponential(const SturmLiouvilleModel& m, const char* who) {
    auto rep = validate_model(m);
    if (rep.growth != GrowthClass::exponential_normalizable)
        throw regime_error(std::string(who) +
                           ": model is not exponential-normalizable (growth: " +
                           to_string(rep.growth) + ")");
}

inline NuInftyResult nu_infty(const SturmLiouvilleModel& m,
                              NuInftyMethod method = NuInftyMethod::limit, double h = 2e-3,
                              double y_max = 12.0, double tol = 1e-4) {
    require_exponential(m, "nu_infty");
    NuInftyResult out;
    out.method = method;

    if (method == NuInftyMethod::limit) {
        std::vector<double> ys;
        for (double y = 2.0; y <= y_max + 1e-9; y += 1.0) ys.push_back(y);
        auto fam = nu_family(m, ys, h);
        GridMeasure prev;
        for (std::size_t k = 0; k < fam.ys.size(); ++k) {
            auto cand = detail::shift_measure(fam.nus[k], -fam.ys[k]);
            if (k > 0) {
                double d = tv_distance(cand, prev);
                out.curve.emplace_back(fam.ys[k], d);
                out.residual = d;
            }
            prev = std::move(cand);
            if (k > 0 && out.residual < tol && k + 1 < fam.ys.size()) {
                out.nu = std::move(prev);
                return out;
            }
        }
        out.nu = std::move(prev);
        return out;
    }

    // Neumann route. Normalize A so that A e^{-2 rho y} -> 1, truncate the
    // source where the accumulated weight e^{-2 rho Y} A(Y) passes 1 - 1e-6,
    // and invert (delta_0 - u2/2), u2 = 2 rho e^{2 rho eta} 1_{eta<0}, by the
    // telescoping product (delta + w)(delta + w*w)(delta + w^4)... with
    // w = u2/2, stopping on the TV tail bound.
    auto rep = validate_model(m);
    const double scale = rep.haar_scale;
    const double rho = m.rho;
    double Ystar = 2.0;
    while (1.0 - std::exp(-2.0 * rho * Ystar) * m.A(Ystar) / scale > 1e-6) {
        Ystar += 0.5;
        if (Ystar > 200.0) throw numeric_error("nu_infty: source truncation fails to converge");
    }
    auto Nrows = static_cast<std::size_t>(std::ceil(Ystar / h));
    Ystar = double(Nrows) * h;

    // target(t) = 1/2 int_0^{Y*} e^{-2 rho eta} (A' - 2 rho A)(eta)/scale
    //             * (nu_eta shifted by -eta)(t) d eta
    const std::size_t tpad = 3;
    std::vector<double> target(2 * Nrows + 2 * tpad + 1, 0.0);
    const long tc = long(2 * Nrows + tpad); // index of t = 0; support [-2Y*, 0]
    auto add_row = [&](std::size_t n, double y, const double* v, long lo, std::size_t cnt) {
        double w = 0.5 * std::exp(-2.0 * rho * y) * (m.A_prime(y) - 2.0 * rho * m.A(y)) / scale;
        w *= (n == Nrows) ? 0.5 * h : h; // trapezoid endpoint
        long base = tc + (lo - long(n)); // row node i sits at t = (lo + i) h - y
        for (std::size_t i = 0; i < cnt; ++i) target[static_cast<std::size_t>(base) + i] += w * v[i];
    };
    bool closed_ok = (m.family == Family::naimark || m.family == Family::bessel_kingman);
    if (closed_ok && m.family == Family::naimark) {
        for (std::size_t n = 1; n <= Nrows; ++n) {
            double y = double(n) * h;
            auto row = detail::naimark_nu_cells(y, h);
            auto lo = static_cast<long>(std::floor(row.origin / h + 0.5));
            add_row(n, y, row.density.data(), lo, row.density.size());
        }
    } else {
        detail::nu_recursion(m, Ystar, h, add_row);
    }
    GridMeasure tgt;
    tgt.origin = double(-tc) * h;
    tgt.step = h;
    tgt.density = std::move(target);
    // eta = 0 trapezoid endpoint: nu_0 = delta_0 with weight A'(0+)/(2 scale)
    double a0p = (m.alpha0 > 1.0 + 1e-9) ? 0.0 : m.A(1e-6) / 1e-6;
    if (a0p > 0.0) tgt.atoms.emplace_back(0.0, 0.25 * h * a0p / scale);
    tgt.normalize();

    const double L = std::log(1e9) / (2.0 * rho);
    auto wn = static_cast<std::size_t>(std::ceil(L / h));
    GridMeasure w;
    w.origin = -double(wn) * h;
    w.step = h;
    w.density.assign(wn + 2, 0.0);
    for (std::size_t i = 0; i + 1 < wn + 2; ++i) {
        double b = std::min(0.0, w.origin + (double(i) + 0.5) * h);
        double a = w.origin + (double(i) - 0.5) * h;
        if (b <= a) continue;
        // cell mass of u2/2 = rho e^{2 rho t}
        w.density[i] = 0.5 * (std::exp(2.0 * rho * b) - std::exp(2.0 * rho * a)) / h;
    }
    w.normalize();

    GridMeasure acc = tgt;
    GridMeasure wk = w;
    for (int it = 0; it < 40; ++it) {
        acc = plus(acc, convolve_R(wk, acc));
        double tail = wk.tv_norm();
        if (tail * tail / (1.0 - tail * tail) < 1e-9) break;
        wk = convolve_R(wk, wk);
        detail::trim_tails(wk, 1e-12);
        detail::trim_tails(acc, 1e-13);
    }
    detail::trim_tails(acc, 1e-12);
    out.nu = std::move(acc);
    // theory: mass(target) = 1/2 and mass(w) = 1/2, so the mass of nu_infty
    // is 1; the defect collects truncation and drift errors of the route.
    out.residual = std::abs(out.nu.mass() - 1.0);
    return out;
}

// ---------------------------------------------------------------------------
// Regime diagnostics.
// ---------------------------------------------------------------------------

struct DistanceRow {
    double y = 0.0;
    double d_inv = 0.0;    // TV(delta_x * nu_y, nu_y): translation invariance defect
    double d_shift = 0.0;  // TV(nu_{y+x}, nu_y): parameter-shift defect
    double d_center = 0.0; // TV of successive centered measures: Cauchy increment
    double weakstar = 0.0; // <nu_y, f_test>
};

struct RegimeReport {
    std::string label;
    double rho = 0.0, alpha0 = 0.0;
    GrowthClass growth = GrowthClass::indeterminate;
    double x_probe = 1.0;
    std::vector<DistanceRow> rows;
    double ft_min = std::numeric_limits<double>::quiet_NaN();
    std::string verdict; // invariance-regime | nu-infinity-regime | bounded-A-regime | inconclusive
    std::vector<std::string> notes;
};

inline std::vector<DistanceRow> asymptotic_distances(const SturmLiouvilleModel& m, double x,
                                                     const std::vector<double>& ys, double h = 2e-3,
                                                     double f_half_width = 0.5) {
    if (!(x > 0.0)) throw domain_error("asymptotic_distances: need x > 0");
    double xs = double(std::llround(x / h)) * h; // keep shifts lattice-exact
    std::vector<double> need = ys;
    for (double y : ys) need.push_back(y + xs);
    std::sort(need.begin(), need.end());
    need.erase(std::unique(need.begin(), need.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-12; }),
               need.end());
    auto fam = nu_family(m, need, h);
    auto find = [&](double y) -> const GridMeasure& {
        for (std::size_t k = 0; k < fam.ys.size(); ++k)
            if (std::abs(fam.ys[k] - y) < h * 0.51) return fam.nus[k];
        throw numeric_error("asymptotic_distances: family row lookup failed");
    };
    auto f_test = [f_half_width](double t) { return std::abs(t) <= f_half_width ? 1.0 : 0.0; };

    std::vector<DistanceRow> rows;
    GridMeasure prev_centered;
    bool have_prev = false;
    for (double y : ys) {
        const auto& nu = find(y);
        DistanceRow r;
        r.y = y;
        r.d_inv = tv_distance(detail::shift_measure(nu, xs), nu);
        r.d_shift = tv_distance(find(y + xs), nu);
        auto centered = detail::shift_measure(nu, -double(std::llround(y / h)) * h);
        r.d_center = have_prev ? tv_distance(centered, prev_centered) : 0.0;
        prev_centered = std::move(centered);
        have_prev = true;
        r.weakstar = pair_with(nu, f_test);
        rows.push_back(r);
    }
    return rows;
}

inline RegimeReport classify(const SturmLiouvilleModel& m, double h = 2e-3,
                             std::vector<double> ys = {2.0, 4.0, 6.0, 8.0}, double x_probe = 1.0) {
    auto rep = validate_model(m);
    RegimeReport out;
    out.label = m.label;
    out.rho = m.rho;
    out.alpha0 = m.alpha0;
    out.growth = rep.growth;
    out.x_probe = x_probe;
    if (!rep.ok) out.notes.push_back("model validation reported failures");

    if (rep.growth == GrowthClass::bounded) {
        out.verdict = "bounded-A-regime";
        out.notes.push_back("A bounded: nu_y spreads under dilation; see the dilated pairing");
        return out;
    }
    out.rows = asymptotic_distances(m, x_probe, ys, h);
    auto decreasing = [](auto get, const std::vector<DistanceRow>& rows) {
        for (std::size_t i = 1; i < rows.size(); ++i)
            if (get(rows[i]) > get(rows[i - 1]) * 1.05 + 1e-12) return false;
        return true;
    };
    if (rep.growth == GrowthClass::exponential_normalizable) {
        auto inf = nu_infty(m, NuInftyMethod::limit, h, ys.back() + 4.0);
        double mn = std::numeric_limits<double>::infinity();
        for (double lam = -4.0; lam <= 4.0 + 1e-9; lam += 0.1)
            mn = std::min(mn, std::abs(fourier_stieltjes(inf.nu, lam)));
        out.ft_min = mn;
        bool centered_ok = true;
        for (std::size_t i = 2; i < out.rows.size(); ++i)
            if (out.rows[i].d_center > out.rows[i - 1].d_center * 1.05 + 1e-12) centered_ok = false;
        if (centered_ok && out.ft_min > 0.0) {
            out.verdict = "nu-infinity-regime";
        } else {
            out.verdict = "inconclusive";
            if (!centered_ok) out.notes.push_back("centered increments do not decrease");
            if (!(out.ft_min > 0.0)) out.notes.push_back("limit transform has a zero");
        }
        return out;
    }
    if (rep.growth == GrowthClass::sub_exponential && std::abs(m.rho) < 1e-9) {
        bool inv_ok = decreasing([](const DistanceRow& r) { return r.d_inv; }, out.rows);
        bool shift_ok = decreasing([](const DistanceRow& r) { return r.d_shift; }, out.rows);
        if (inv_ok && shift_ok) {
            out.verdict = "invariance-regime";
        } else {
            out.verdict = "inconclusive";
            out.notes.push_back("invariance defects do not decrease along the ladder");
        }
        return out;
    }
    out.verdict = "inconclusive";
    out.notes.push_back("growth class does not select a regime");
    return out;
}

// <nu'_x, f> where nu'_x is nu_x dilated by 1/x. Only meaningful when A is
// bounded (rho = 0): the dilated family tightens onto +-1.
inline double dilated_nu(const SturmLiouvilleModel& m, double x,
                         const std::function<double(double)>& f, double h = 1e-2) {
    auto rep = validate_model(m);
    if (rep.growth != GrowthClass::bounded)
        throw regime_error("dilated_nu: model is not in the bounded-A class");
    auto nu = nu_measure(m, x, h, NuMethod::recursion);
    return pair_with(nu, [&f, x](double t) { return f(t / x); });
}

// S(mu) = int nu_x dmu(x) for an atomic mu on [0, inf); T(f)(x) = <nu_x, f>.
inline GridMeasure s_map(const SturmLiouvilleModel& m, const GridMeasure& mu, double h = 2e-3) {
    if (mu.has_density()) throw domain_error("s_map: expected an atomic measure");
    GridMeasure out;
    out.step = h;
    std::vector<double> xs;
    for (const auto& [p, w] : mu.atoms)
        if (p > 0.0) xs.push_back(p);
    NuFamily fam;
    if (!xs.empty()) fam = nu_family(m, xs, h);
    for (const auto& [p, w] : mu.atoms) {
        if (p == 0.0) {
            out.atoms.emplace_back(0.0, w);
            continue;
        }
        for (std::size_t k = 0; k < fam.ys.size(); ++k)
            if (std::abs(fam.ys[k] - p) < h * 0.51 + 1e-12) {
                out = plus(out, scaled(fam.nus[k], w));
                break;
            }
    }
    out.normalize();
    return out;
}

inline std::vector<double> t_map(const SturmLiouvilleModel& m,
                                 const std::function<double(double)>& f,
                                 const std::vector<double>& xs, double h = 2e-3) {
    auto fam = nu_family(m, xs, h);
    std::vector<double> out;
    for (const auto& nu : fam.nus) out.push_back(pair_with(nu, f));
    return out;
}

} // namespace hyperconv
