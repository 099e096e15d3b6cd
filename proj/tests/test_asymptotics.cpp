#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include <hyperconv/asymptotics.hpp>
#include <hyperconv/eigen.hpp>
#include <hyperconv/kernel.hpp>

using namespace hyperconv;
using Catch::Approx;

namespace {

// tau-hat_x(lambda) = <nu_x, e^{(i lambda - rho) t}>, split into real pairings
std::complex<double> tau_hat(const SturmLiouvilleModel& m, const GridMeasure& nu, double lam) {
    double rho = m.rho;
    double re = pair_with(nu, [&](double t) { return std::exp(-rho * t) * std::cos(lam * t); });
    double im = pair_with(nu, [&](double t) { return -std::exp(-rho * t) * std::sin(lam * t); });
    return {re, im};
}

} // namespace

TEST_CASE("sinh^2 projected measure closed form: mass, profile, pairing") {
    auto m = make_naimark();
    auto nu = nu_measure(m, 3.0, 2e-3);
    CHECK(nu.mass() == Approx(1.0).margin(1e-9));
    // density e^t / (2 sinh y) on [-y, y]
    CHECK(pl_eval(nu.origin, nu.step, nu.density, 0.0) ==
          Approx(1.0 / (2.0 * std::sinh(3.0))).epsilon(1e-6));
    // <nu_x, 1_[-1/2,1/2]> = sinh(1/2)/sinh(x), decreasing in x; the node
    // sampling of the jump costs (h/2) x edge density
    double p3 = pair_with(nu, [](double t) { return std::abs(t) <= 0.5 ? 1.0 : 0.0; });
    CHECK(p3 == Approx(std::sinh(0.5) / std::sinh(3.0)).margin(2.5e-4));
    auto nu4 = nu_measure(m, 4.0, 2e-3);
    double p4 = pair_with(nu4, [](double t) { return std::abs(t) <= 0.5 ? 1.0 : 0.0; });
    CHECK(p4 < p3);
}

TEST_CASE("power model projected measure is the symmetric beta profile") {
    auto nu = detail::bk_nu_cells(2.0, 5.0, 2e-3);
    CHECK(nu.mass() == Approx(1.0).margin(1e-9));
    // alpha0 = 2: flat 1/(2y) on [-y, y]
    CHECK(pl_eval(nu.origin, nu.step, nu.density, 0.3) == Approx(0.1).epsilon(1e-6));
    CHECK(pl_eval(nu.origin, nu.step, nu.density, -4.9) == Approx(0.1).epsilon(1e-6));
}

TEST_CASE("lattice recursion reproduces the closed forms at alpha0 = 2") {
    auto nm = make_naimark();
    auto rec = nu_family(nm, {3.0}, 2e-3, NuMethod::recursion);
    CHECK(tv_distance(rec.nus[0], detail::naimark_nu_cells(3.0, 2e-3)) < 5e-6);
    CHECK(rec.max_drift < 1e-5);

    auto bk = make_bessel_kingman(2.0);
    auto recb = nu_family(bk, {10.0}, 2e-3, NuMethod::recursion);
    CHECK(tv_distance(recb.nus[0], detail::bk_nu_cells(2.0, 10.0, 2e-3)) < 1e-10);
}

TEST_CASE("recursion transient at alpha0 != 2 stays inside the drift envelope") {
    // alpha0 = 3: the startup transient ~ alpha0(alpha0-1)/(12 n^2) deforms
    // rows at the 1e-2 TV level but smooth pairings stay clean.
    auto bk3 = make_bessel_kingman(3.0);
    auto fam = nu_family(bk3, {1.0}, 2e-3, NuMethod::recursion);
    CHECK(fam.max_drift < 1e-2);
    auto closed = detail::bk_nu_cells(3.0, 1.0, 2e-3);
    auto f = [](double t) { return std::cos(t); };
    CHECK(pair_with(fam.nus[0], f) == Approx(pair_with(closed, f)).margin(1e-4));
    CHECK(tv_distance(fam.nus[0], closed) < 5e-2);
}

TEST_CASE("recursion argument and regime guards") {
    auto nm = make_naimark();
    CHECK_THROWS_AS(nu_measure(nm, 0.02, 2e-3, NuMethod::recursion), domain_error);
    CHECK_THROWS_AS(nu_measure(nm, 300.0, 2e-3, NuMethod::recursion), numeric_error);
    CHECK_THROWS_AS(nu_measure(make_bessel_kingman(0.5), 1.0, 2e-3, NuMethod::recursion),
                    numeric_error);
    CHECK_THROWS_AS(nu_family(make_jacobi(1.0, 0.0), {1.0}, 2e-3, NuMethod::closed_form),
                    domain_error);
    CHECK_THROWS_AS(nu_family(nm, {}, 2e-3), domain_error);
}

TEST_CASE("shifted translation kernel approaches nu_x at the closed-form rate") {
    // || delta_{-y} *_R (delta_1 * delta_y) - nu_1 || = e^{-y} (cosh 1 - 1) /
    // (sinh 1 sinh y) for the sinh^2 model
    auto nm = make_naimark();
    auto nu1 = nu_measure(nm, 1.0, 2e-3);
    for (double y : {3.0, 5.0}) {
        auto ker = kernel_density(nm, 1.0, y, 2e-3);
        auto shifted = detail::shift_measure(ker.density, -y);
        double expect = std::exp(-y) * (std::cosh(1.0) - 1.0) / (std::sinh(1.0) * std::sinh(y));
        CHECK(tv_distance(shifted, nu1) == Approx(expect).epsilon(1e-2));
    }
}

TEST_CASE("flat-profile model: invariance defect decays like 1/y") {
    auto bk = make_bessel_kingman(2.0);
    auto rows = asymptotic_distances(bk, 1.0, {10.0, 50.0}, 2e-3);
    CHECK(rows[0].d_inv == Approx(0.1).epsilon(1e-3));
    CHECK(rows[1].d_inv == Approx(0.02).epsilon(1e-3));
    CHECK(rows[1].d_shift < rows[0].d_shift);
}

TEST_CASE("centered limit: ladder and series inversion routes agree") {
    auto nm = make_naimark();
    auto lim = nu_infty(nm);
    auto neu = nu_infty(nm, NuInftyMethod::neumann);
    CHECK(lim.residual < 1e-4);
    CHECK(neu.residual < 1e-4);
    CHECK(tv_distance(lim.nu, neu.nu) < 2e-3);
    CHECK(lim.nu.mass() == Approx(1.0).margin(1e-4));

    // transform of e^t 1_{t<0}: 1/(1 - i lambda)
    auto ft = fourier_stieltjes(lim.nu, 1.0);
    CHECK(ft.real() == Approx(0.5).margin(1e-3));
    CHECK(ft.imag() == Approx(0.5).margin(1e-3));

    CHECK_THROWS_AS(nu_infty(make_bessel_kingman(2.0)), regime_error);
}

TEST_CASE("limit transform equals the shifted boundary coefficient") {
    auto nm = make_naimark();
    auto lim = nu_infty(nm);
    for (double lam : {0.5, 1.0, 2.0}) {
        auto ft = fourier_stieltjes(lim.nu, lam);
        auto cs = c_shifted(nm, lam);
        CHECK(std::abs(ft - cs.c_plus) < 1e-4);
        CHECK(cs.residual < 1e-8);
    }
    // oscillatory-regime coefficient: c(lambda) = 1/(i lambda), modulus 1 at 1
    CHECK(std::abs(c_function(nm, 1.0).c_plus) == Approx(1.0).margin(1e-4));
}

TEST_CASE("transform of the projected measure evaluates the eigenfunction") {
    auto nm = make_naimark();
    auto th = tau_hat(nm, nu_measure(nm, 1.0, 2e-3), 1.0);
    CHECK(th.real() == Approx(std::sin(1.0) / std::sinh(1.0)).margin(1e-6));
    CHECK(std::abs(th.imag()) < 1e-6);

    // fully numeric route: lattice recursion paired against the ODE solution
    auto jc = make_jacobi(1.0, 0.0);
    auto thj = tau_hat(jc, nu_measure(jc, 1.0, 2e-3, NuMethod::recursion), 1.0);
    auto phi = phi_lambda_at(jc, 1.0, 1.0);
    CHECK(std::abs(thj - phi) < 1e-3);
    CHECK(thj.real() == Approx(0.55270180262833804076).margin(1e-3));
}

TEST_CASE("regime classifier identifies the four builtin models") {
    auto rn = classify(make_naimark());
    CHECK(rn.verdict == "nu-infinity-regime");
    CHECK(rn.growth == GrowthClass::exponential_normalizable);
    CHECK(rn.ft_min == Approx(1.0 / std::sqrt(17.0)).margin(1e-3));

    auto rb = classify(make_bessel_kingman(2.0));
    CHECK(rb.verdict == "invariance-regime");
    CHECK(rb.growth == GrowthClass::sub_exponential);

    auto rj = classify(make_jacobi(1.0, 0.0));
    CHECK(rj.verdict == "nu-infinity-regime");

    auto rd = classify(make_bounded_demo());
    CHECK(rd.verdict == "bounded-A-regime");
    CHECK(rd.growth == GrowthClass::bounded);
}

TEST_CASE("dilated pairing tracks the exact second moment of the bounded model") {
    // (A u')' = A with u(0) = u'(0) = 0 gives the second moment 2u(x); for
    // A = (x/(1+x))^2 the dilated values approach 1 like log(x)/x.
    auto md = make_bounded_demo();
    auto f2 = [](double t) { return t * t; };
    double v10 = dilated_nu(md, 10.0, f2);
    double v20 = dilated_nu(md, 20.0, f2);
    double v50 = dilated_nu(md, 50.0, f2);
    CHECK(v10 == Approx(0.6746023277796966).margin(2e-3));
    CHECK(v20 == Approx(0.7609705156851122).margin(2e-3));
    CHECK(v50 == Approx(0.8542946266794967).margin(2e-3));
    CHECK(v10 < v20);
    CHECK(v20 < v50);
    CHECK(v50 < 1.0);

    CHECK(dilated_nu(md, 10.0, [](double) { return 1.0; }) == Approx(1.0).margin(1e-9));
    CHECK(dilated_nu(md, 10.0, [](double t) { return t * t * t; }) == Approx(0.0).margin(1e-9));
    CHECK_THROWS_AS(dilated_nu(make_naimark(), 10.0, f2), regime_error);
}

TEST_CASE("averaging map blends projected measures; dual map pairs them") {
    auto nm = make_naimark();
    GridMeasure mu;
    mu.atoms = {{1.0, 0.5}, {3.0, 0.5}};
    auto s = s_map(nm, mu);
    CHECK(s.mass() == Approx(1.0).margin(1e-9));
    double expect0 = 0.5 * (1.0 / (2.0 * std::sinh(1.0)) + 1.0 / (2.0 * std::sinh(3.0)));
    CHECK(pl_eval(s.origin, s.step, s.density, 0.0) == Approx(expect0).margin(1e-5));

    GridMeasure dens;
    dens.origin = 0.0;
    dens.step = 1e-2;
    dens.density = {0.0, 1.0, 0.0};
    CHECK_THROWS_AS(s_map(nm, dens), domain_error);

    auto box = [](double t) { return std::abs(t) <= 0.5 ? 1.0 : 0.0; };
    auto tv = t_map(nm, box, {3.0, 4.0});
    CHECK(tv[0] == Approx(std::sinh(0.5) / std::sinh(3.0)).margin(2.5e-4));
    CHECK(tv[1] < tv[0]);
}
