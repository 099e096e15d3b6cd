#pragma once

#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <hyperconv/asymptotics.hpp>
#include <hyperconv/eigen.hpp>
#include <hyperconv/kernel.hpp>

// Verification battery: each criterion exercises one public claim of the
// library end to end and reports a single measured scalar against its
// reference. Provenance tags say where the reference comes from:
//   closed-form    evaluated from an exact formula inside this file
//   analytic       an identity the measured value must satisfy
//   frozen-oracle  a constant computed once with independent tooling
//   invariant      a structural property (bounds, monotonicity, containment)

namespace hyperconv::verify {

struct CriterionResult {
    int id = 0;
    std::string name;
    double measured = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    std::string provenance;
    bool aux_ok = true; // structural sub-checks not covered by the headline comparison
    bool pass = false;  // aux_ok && |measured - expected| <= tolerance
    std::string detail;
};

inline std::string format_line(const CriterionResult& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "C%02d %s %-26s measured=%.9e expected=%.9e tol=%.1e [%s]%s%s",
                  r.id, r.pass ? "PASS" : "FAIL", r.name.c_str(), r.measured, r.expected,
                  r.tolerance, r.provenance.c_str(), r.detail.empty() ? "" : "  ",
                  r.detail.c_str());
    return buf;
}

namespace detail_v {

inline std::string sci(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3e", v);
    return b;
}

inline std::complex<double> tau_hat(const SturmLiouvilleModel& m, const GridMeasure& nu,
                                    double lam) {
    double rho = m.rho;
    double re = pair_with(nu, [&](double t) { return std::exp(-rho * t) * std::cos(lam * t); });
    double im = pair_with(nu, [&](double t) { return -std::exp(-rho * t) * std::sin(lam * t); });
    return {re, im};
}

struct Spec {
    int id;
    const char* name;
    const char* provenance;
    // march_h_scale coarsens the step ladder of the march-fidelity criterion;
    // the others run at their frozen parameterizations and ignore it.
    std::function<void(CriterionResult&, double /*march_h_scale*/)> run;
};

inline void crit_kernel_closed_form(CriterionResult& r) {
    auto nm = make_naimark();
    auto ker = kernel_density(nm, 1.0, 2.0, 2e-3);
    double mass_err = std::abs(ker.mass() - 1.0);
    r.expected = 1.0 / (2.0 * std::sinh(1.0));
    r.measured = pl_eval(ker.density.origin, ker.density.step, ker.density.density, 2.0);
    r.tolerance = 1e-6;
    r.aux_ok = mass_err <= 1e-10;
    r.detail = "mass defect " + sci(mass_err) + " (tol 1e-10)";
}

inline void crit_kernel_march_convergence(CriterionResult& r, double h_scale = 1.0) {
    auto nm = make_naimark();
    const double hs[3] = {4e-3 * h_scale, 2e-3 * h_scale, 1e-3 * h_scale};
    double l1[3];
    for (int i = 0; i < 3; ++i) {
        auto ker = kernel_density(nm, 1.0, 2.0, hs[i], KernelMethod::marched);
        l1[i] = tv_distance(ker.density, detail::naimark_kernel_cells(1.0, 2.0, hs[i]));
    }
    double o1 = std::log2(l1[0] / l1[1]);
    double o2 = std::log2(l1[1] / l1[2]);
    r.measured = l1[2];
    r.expected = 0.0;
    r.tolerance = 5e-3;
    r.aux_ok = std::min(o1, o2) >= 1.0;
    r.detail = "L1 " + sci(l1[0]) + " / " + sci(l1[1]) + " / " + sci(l1[2]) + ", orders " +
               sci(o1) + ", " + sci(o2) + " (need >= 1)";
}

inline void crit_eigenfunction_values(CriterionResult& r) {
    auto nm = make_naimark();
    auto v = phi_lambda_at(nm, 1.0, 1.0);
    r.measured = v.real();
    r.expected = std::sin(1.0) / std::sinh(1.0);
    r.tolerance = 1e-6;

    // lambda = i rho makes the spectral parameter vanish: phi is exactly 1
    std::vector<SturmLiouvilleModel> ms = {nm, make_bessel_kingman(2.0), make_jacobi(1.0, 0.0)};
    double sup = 0.0;
    for (const auto& m : ms) {
        auto sol = phi_lambda(m, {0.0, m.rho}, 10.0, 5e-2);
        for (const auto& p : sol.phi) sup = std::max(sup, std::abs(p - std::complex<double>(1.0)));
    }
    r.aux_ok = std::abs(v.imag()) <= 1e-8 && sup <= 1e-8;
    r.detail = "sup|phi_{i rho} - 1| on [0,10] over three models: " + sci(sup) + " (tol 1e-8)";
}

inline void crit_projection_transform(CriterionResult& r) {
    auto nm = make_naimark();
    auto th = tau_hat(nm, nu_measure(nm, 1.0, 2e-3), 1.0);
    r.measured = th.real();
    r.expected = std::sin(1.0) / std::sinh(1.0);
    r.tolerance = 1e-6;

    // fully numeric route: lattice recursion paired against the ODE solution
    auto jc = make_jacobi(1.0, 0.0);
    auto thj = tau_hat(jc, nu_measure(jc, 1.0, 1e-3, NuMethod::recursion), 1.0);
    auto phij = phi_lambda_at(jc, 1.0, 1.0);
    double jerr = std::abs(thj - phij);
    r.aux_ok = std::abs(th.imag()) <= 1e-6 && jerr <= 1e-2;
    r.detail = "numeric route |tau-hat - phi| = " + sci(jerr) + " (tol 1e-2)";
}

inline void crit_shifted_kernel_decay(CriterionResult& r) {
    auto nm = make_naimark();
    auto nu1 = nu_measure(nm, 1.0, 2e-3);
    auto rate = [](double y) {
        return std::exp(-y) * (std::cosh(1.0) - 1.0) / (std::sinh(1.0) * std::sinh(y));
    };
    double tv3 = 0.0, tv5 = 0.0;
    for (double y : {3.0, 5.0}) {
        auto ker = kernel_density(nm, 1.0, y, 2e-3);
        double tv = tv_distance(detail::shift_measure(ker.density, -y), nu1);
        (y == 3.0 ? tv3 : tv5) = tv;
    }
    r.measured = tv3;
    r.expected = rate(3.0);
    r.tolerance = 0.1 * r.expected;
    r.aux_ok = std::abs(tv5 - rate(5.0)) <= 0.1 * rate(5.0);
    r.detail = "y=5: " + sci(tv5) + " vs " + sci(rate(5.0)) + " (10%)";
}

inline void crit_invariance_defect(CriterionResult& r) {
    auto bk = make_bessel_kingman(2.0);
    auto rows = asymptotic_distances(bk, 1.0, {10.0, 50.0}, 2e-3);
    r.measured = rows[1].d_inv;
    r.expected = 0.02;
    r.tolerance = 0.05 * r.expected;
    bool ok10 = std::abs(rows[0].d_inv - 0.1) <= 0.005;
    auto rec = nu_measure(bk, 10.0, 2e-3, NuMethod::recursion);
    double route_gap = tv_distance(rec, nu_measure(bk, 10.0, 2e-3));
    r.aux_ok = ok10 && route_gap <= 1e-2;
    r.detail = "y=10: " + sci(rows[0].d_inv) + " vs 0.1 (5%); recursion-vs-closed TV " +
               sci(route_gap) + " (tol 1e-2)";
}

inline void crit_limit_measure_routes(CriterionResult& r) {
    auto nm = make_naimark();
    auto lim = nu_infty(nm, NuInftyMethod::limit, 2e-3, 8.0, 0.0);
    auto neu = nu_infty(nm, NuInftyMethod::neumann, 2e-3);
    r.measured = tv_distance(lim.nu, neu.nu);
    r.expected = 0.0;
    r.tolerance = 2e-3;
    auto ft = fourier_stieltjes(lim.nu, 1.0);
    double ft_err = std::abs(ft - std::complex<double>(0.5, 0.5));
    double ft_min = std::numeric_limits<double>::infinity();
    for (double lam = -4.0; lam <= 4.0 + 1e-9; lam += 0.1)
        ft_min = std::min(ft_min, std::abs(fourier_stieltjes(lim.nu, lam)));
    r.aux_ok = ft_err <= 1e-3 && ft_min > 0.2;
    r.detail = "transform at 1: err " + sci(ft_err) + " (tol 1e-3); min modulus on [-4,4]: " +
               sci(ft_min) + " (need > 0.2)";
}

inline void crit_boundary_coefficient(CriterionResult& r) {
    auto nm = make_naimark();
    r.measured = std::abs(c_function(nm, 1.0).c_plus);
    r.expected = 1.0;
    r.tolerance = 1e-3;
    auto lim = nu_infty(nm);
    double link = 0.0;
    for (double lam : {0.5, 1.0, 2.0})
        link = std::max(link,
                        std::abs(fourier_stieltjes(lim.nu, lam) - c_shifted(nm, lam).c_plus));
    r.aux_ok = link <= 1e-3;
    r.detail = "max |limit transform - shifted coefficient| over {0.5,1,2}: " + sci(link) +
               " (tol 1e-3)";
}

inline void crit_kernel_invariants_random(CriterionResult& r) {
    std::mt19937 rng(0xC0FFEEu);
    std::uniform_real_distribution<double> uxy(0.3, 2.2), ua(1.2, 3.5), uj(0.5, 1.5),
        ub(0.0, 0.5);
    const double h = 2e-3;
    double worst_mass = 0.0, worst_neg = 0.0, worst_spill = 0.0;
    for (int i = 0; i < 200; ++i) {
        SturmLiouvilleModel m;
        switch (i % 4) {
            case 0: m = make_naimark(); break;
            case 1: m = make_bessel_kingman(ua(rng)); break;
            case 2: m = make_jacobi(uj(rng), ub(rng)); break;
            default: m = make_bounded_demo(); break;
        }
        double x = uxy(rng), y = uxy(rng);
        auto ker = kernel_density(m, x, y, h);
        worst_mass = std::max(worst_mass, std::abs(ker.raw_mass - 1.0));
        const auto& d = ker.density;
        for (std::size_t k = 0; k < d.density.size(); ++k) {
            double v = d.density[k];
            worst_neg = std::min(worst_neg, v);
            if (v > 1e-14) {
                double t = d.origin + double(k) * d.step;
                worst_spill = std::max(worst_spill,
                                       std::max(ker.support_lo - t, t - ker.support_hi));
            }
        }
    }
    r.measured = worst_mass;
    r.expected = 0.0;
    r.tolerance = 1e-4;
    r.aux_ok = worst_neg >= -1e-8 && worst_spill <= h + 1e-9;
    r.detail = "200 draws; min density " + sci(worst_neg) + " (>= -1e-8); support spill " +
               sci(worst_spill) + " (<= one cell " + sci(h) + ")";
}

inline void crit_translation_locality(CriterionResult& r) {
    auto nm = make_naimark();
    auto f = [](double x) { return (x >= 1.0 && x <= 2.0) ? 1.0 : 0.0; };
    TranslateOptions o;
    o.h = 1e-3;
    o.x_out = 3.0;
    auto tr = translate_function(nm, f, 1e-2, o);
    double mx = 0.0;
    for (std::size_t i = 0; i < tr.values.size(); ++i) {
        double x = double(i) * tr.step;
        if (x < 0.1 - 1e-12 || x > 3.0 + 1e-12) continue;
        if (std::min(std::abs(x - 1.0), std::abs(x - 2.0)) < 0.1 - 1e-12) continue;
        mx = std::max(mx, std::abs(tr.values[i] - f(x)));
    }
    r.measured = mx;
    r.expected = 0.0;
    r.tolerance = 1e-2;
    r.detail = "step target 1e-2; grid x in [0.1,3], 0.1 away from the jumps";
}

inline void crit_approximate_identity(CriterionResult& r) {
    auto nm = make_naimark();
    double d[4];
    const double ns[4] = {25.0, 50.0, 100.0, 200.0};
    for (int i = 0; i < 4; ++i) d[i] = approx_identity_defect(nm, 1.0, ns[i]);
    bool decreasing = d[0] > d[1] && d[1] > d[2] && d[2] > d[3];
    r.measured = d[3];
    r.expected = 0.0075998988; // window n = 200, independent quadrature
    r.tolerance = 0.1;         // the stated bound is d(200) < 0.1
    // the lattice defect carries an O(h) edge-sampling bias against the
    // continuum reference (3e-4 relative at h = 1e-3)
    r.aux_ok = decreasing && d[3] < 0.1 && std::abs(d[3] - r.expected) <= 1e-5;
    r.detail = "defects " + sci(d[0]) + " > " + sci(d[1]) + " > " + sci(d[2]) + " > " + sci(d[3]) +
               "; matches reference within 1e-5";
}

inline void crit_regime_classification(CriterionResult& r) {
    auto md = make_bounded_demo();
    auto f2 = [](double t) { return t * t; };
    double v10 = dilated_nu(md, 10.0, f2);
    double v20 = dilated_nu(md, 20.0, f2);
    double v50 = dilated_nu(md, 50.0, f2);
    r.measured = v50;
    // exact second moment of the dilated measure: 2 u(x)/x^2, (A u')' = A;
    // the approach to the two-atom limit value 1 is O(log x / x)
    r.expected = 0.8542946266794967;
    r.tolerance = 0.05;
    bool trend = v10 < v20 && v20 < v50 && v50 < 1.0;

    bool verdicts = classify(make_naimark()).verdict == "nu-infinity-regime" &&
                    classify(make_bessel_kingman(2.0)).verdict == "invariance-regime" &&
                    classify(make_jacobi(1.0, 0.0)).verdict == "nu-infinity-regime" &&
                    classify(md).verdict == "bounded-A-regime";
    r.aux_ok = trend && verdicts;
    r.detail = std::string("dilated pairing rises ") + sci(v10) + " < " + sci(v20) + " < " +
               sci(v50) + " < 1 toward the limit; four verdicts " +
               (verdicts ? "correct" : "WRONG");
}

inline const std::vector<Spec>& criteria_table() {
    auto fixed = [](void (*f)(CriterionResult&)) {
        return [f](CriterionResult& r, double) { f(r); };
    };
    static const std::vector<Spec> table = {
        {1, "kernel-closed-form", "closed-form", fixed(crit_kernel_closed_form)},
        {2, "kernel-march-convergence", "closed-form", crit_kernel_march_convergence},
        {3, "eigenfunction-values", "analytic", fixed(crit_eigenfunction_values)},
        {4, "projection-transform", "analytic", fixed(crit_projection_transform)},
        {5, "shifted-kernel-decay", "closed-form", fixed(crit_shifted_kernel_decay)},
        {6, "invariance-defect", "analytic", fixed(crit_invariance_defect)},
        {7, "limit-measure-routes", "analytic", fixed(crit_limit_measure_routes)},
        {8, "boundary-coefficient", "analytic", fixed(crit_boundary_coefficient)},
        {9, "kernel-invariants-random", "invariant", fixed(crit_kernel_invariants_random)},
        {10, "translation-locality", "invariant", fixed(crit_translation_locality)},
        {11, "approximate-identity", "frozen-oracle", fixed(crit_approximate_identity)},
        {12, "regime-classification", "frozen-oracle", fixed(crit_regime_classification)},
    };
    return table;
}

} // namespace detail_v

// Centered third-convolution defect ||delta_{-y} *_R (delta_x * delta_y) - nu_x||
// for A = sinh^2, with its closed-form decay rate. Reported alongside the
// battery (the y = 5 value backs the shifted-kernel-decay criterion).
struct DCenterReport {
    double x = 1.0, y = 5.0;
    double measured = 0.0;
    double expected = 0.0; // e^{-y} (cosh x - 1) / (sinh x sinh y)
};

inline DCenterReport d_center_naimark(double x = 1.0, double y = 5.0) {
    DCenterReport rep;
    rep.x = x;
    rep.y = y;
    auto nm = make_naimark();
    auto ker = kernel_density(nm, x, y, 2e-3);
    rep.measured = tv_distance(detail::shift_measure(ker.density, -y), nu_measure(nm, x, 2e-3));
    rep.expected = std::exp(-y) * (std::cosh(x) - 1.0) / (std::sinh(x) * std::sinh(y));
    return rep;
}

// Run the battery (or the ids in `only`), streaming each result as it lands.
// `tol_overrides` rebinds the headline tolerance by criterion name or id;
// `march_h_scale` coarsens the march-fidelity step ladder.
inline std::vector<CriterionResult> run_criteria(
    const std::function<void(const CriterionResult&)>& emit = {},
    const std::vector<int>& only = {},
    const std::map<std::string, double>& tol_overrides = {},
    double march_h_scale = 1.0) {
    std::vector<CriterionResult> out;
    for (const auto& spec : detail_v::criteria_table()) {
        if (!only.empty() && std::find(only.begin(), only.end(), spec.id) == only.end()) continue;
        CriterionResult r;
        r.id = spec.id;
        r.name = spec.name;
        r.provenance = spec.provenance;
        bool raised = false;
        try {
            spec.run(r, march_h_scale);
        } catch (const std::exception& e) {
            raised = true;
            r.detail = std::string("exception: ") + e.what();
        }
        if (auto it = tol_overrides.find(r.name); it != tol_overrides.end())
            r.tolerance = it->second;
        else if (auto jt = tol_overrides.find(std::to_string(r.id)); jt != tol_overrides.end())
            r.tolerance = jt->second;
        r.pass = !raised && r.aux_ok && std::abs(r.measured - r.expected) <= r.tolerance;
        if (emit) emit(r);
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace hyperconv::verify
