#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>

#include <hyperconv/eigen.hpp>

using namespace hyperconv;
using Catch::Approx;

TEST_CASE("sinh^2 eigenfunction matches sin(lambda x)/(lambda sinh x)") {
    auto m = make_naimark();
    auto sol = phi_lambda(m, 1.0, 3.0, 0.5);
    for (std::size_t k = 1; k < sol.phi.size(); ++k) {
        double x = sol.x_at(k);
        double expect = std::sin(x) / std::sinh(x);
        CHECK(sol.phi[k].real() == Approx(expect).margin(1e-9));
        CHECK(std::abs(sol.phi[k].imag()) < 1e-12);
    }
    CHECK(sol.phi[0] == cdouble(1.0));
    CHECK(phi_lambda_at(m, 1.0, 1.0).real() ==
          Approx(std::sin(1.0) / std::sinh(1.0)).margin(1e-10));

    // at lambda = 2.5 as well, and at a deep point
    CHECK(phi_lambda_at(m, 2.5, 4.0).real() ==
          Approx(std::sin(10.0) / (2.5 * std::sinh(4.0))).margin(1e-10));
}

TEST_CASE("series handoff point does not move the result") {
    // the startup series is truncated at x^4, so the handoff error scales like
    // x_start^5: small handoffs agree tightly and halving 0.2 -> 0.1 shrinks
    // the gap by roughly 2^5
    for (auto& m : {make_naimark(), make_jacobi(1.0, 0.0), make_bessel_kingman(2.0)}) {
        auto a = phi_lambda_at(m, 1.3, 0.8, 1e-2);
        auto b = phi_lambda_at(m, 1.3, 0.8, 2e-2);
        CHECK(std::abs(a - b) < 1e-9);

        double gap_coarse = std::abs(phi_lambda_at(m, 1.3, 0.8, 0.2) - a);
        double gap_fine = std::abs(phi_lambda_at(m, 1.3, 0.8, 0.1) - a);
        if (gap_coarse > 1e-12) {
            double order = std::log2(gap_coarse / std::max(gap_fine, 1e-300));
            CHECK(order > 3.5);
        }
    }
}

TEST_CASE("power-law model eigenfunction reduces to sinc") {
    // A = x^2: phi_lambda(x) = sin(lambda x)/(lambda x)
    auto m = make_bessel_kingman(2.0);
    CHECK(phi_lambda_at(m, 1.0, 1.0).real() == Approx(std::sin(1.0)).margin(1e-10));
    CHECK(phi_lambda_at(m, 2.0, 3.0).real() == Approx(std::sin(6.0) / 6.0).margin(1e-10));
}

TEST_CASE("hyperbolic-weight model eigenfunction against quadrature values") {
    // independently computed by high-precision series/quadrature
    auto m = make_jacobi(1.0, 0.0);
    CHECK(phi_lambda_at(m, 1.0, 1.0).real() == Approx(0.55270180262833804076).margin(1e-9));
    CHECK(phi_lambda_at(m, 1.0, 2.0).real() == Approx(0.11486140958488705606).margin(1e-9));
}

TEST_CASE("phi at lambda = i rho is identically one") {
    for (auto& m : {make_naimark(), make_bessel_kingman(2.0), make_jacobi(1.0, 0.0)}) {
        cdouble lam(0.0, m.rho);
        auto sol = phi_lambda(m, lam, 10.0, 0.25);
        double worst = 0.0;
        for (const auto& v : sol.phi) worst = std::max(worst, std::abs(v - cdouble(1.0)));
        CHECK(worst < 1e-8);
    }
}

TEST_CASE("scattering coefficient for the sinh^2 model is 1/(i lambda)") {
    auto m = make_naimark();
    for (double lam : {0.5, 1.0, 2.0}) {
        auto est = c_function(m, lam);
        CHECK(std::abs(est.c_plus - cdouble(0.0, -1.0 / lam)) < 1e-6);
        CHECK(std::abs(est.c_minus - std::conj(est.c_plus)) < 1e-6);
        CHECK(est.residual < 1e-8);
    }
    CHECK(std::abs(c_function(m, 1.0).c_plus) == Approx(1.0).epsilon(1e-6));
}

TEST_CASE("scattering coefficient for the hyperbolic-weight model") {
    // gamma-product values, computed independently
    auto m = make_jacobi(1.0, 0.0);
    auto c1 = c_function(m, 1.0);
    CHECK(std::abs(c1.c_plus - cdouble(-1.4832126662828213, -2.6724739783804325)) < 1e-6);
    CHECK(std::abs(c1.c_plus) == Approx(3.0564745996887218).epsilon(1e-7));
    auto c2 = c_function(m, 2.0);
    CHECK(std::abs(c2.c_plus - cdouble(-0.6846210546840600, -0.8943081215347137)) < 1e-6);
}

TEST_CASE("scattering coefficient rejects unusable inputs") {
    CHECK_THROWS_AS(c_function(make_naimark(), 0.0), domain_error);
    CHECK_THROWS_AS(c_function(make_naimark(), 1.0, 5.0), domain_error);
    // rho = 0: no exponential regime to fit against
    CHECK_THROWS_AS(c_function(make_bessel_kingman(2.0), 1.0), regime_error);
}

TEST_CASE("shifted boundary coefficient matches 1/(1 - i lambda) for sinh^2") {
    auto m = make_naimark();
    auto est = c_shifted(m, 1.0);
    CHECK(est.c_plus.real() == Approx(0.5).margin(1e-6));
    CHECK(est.c_plus.imag() == Approx(0.5).margin(1e-6));
    CHECK(est.residual < 1e-6);

    // lambda = 0 reduces to phi_{i rho} = 1
    auto at0 = c_shifted(m, 0.0);
    CHECK(std::abs(at0.c_plus - cdouble(1.0)) < 1e-8);

    CHECK_THROWS_AS(c_shifted(make_bessel_kingman(2.0), 1.0), regime_error);
}
