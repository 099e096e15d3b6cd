#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include <hyperconv/expr.hpp>
#include <hyperconv/model.hpp>

using namespace hyperconv;
using Catch::Approx;

TEST_CASE("expression grammar evaluates the usual operators") {
    CHECK(expr::parse("sinh(x)^2")->eval(1.3) == Approx(std::sinh(1.3) * std::sinh(1.3)));
    CHECK(expr::parse("(x/(1+x))^2")->eval(1.0) == Approx(0.25));
    CHECK(expr::parse("exp(-2*x) + log(x)")->eval(2.0) ==
          Approx(std::exp(-4.0) + std::log(2.0)));
    CHECK(expr::parse("2^3^2")->eval(0.0) == Approx(512.0)); // right-associative power
    CHECK_THROWS_AS(expr::parse("x +"), parse_error);
    CHECK_THROWS_AS(expr::parse("bogus(x)"), parse_error);
}

TEST_CASE("builtin coefficients and their log-derivatives") {
    auto nm = make_naimark();
    CHECK(nm.A(2.0) == Approx(std::sinh(2.0) * std::sinh(2.0)).epsilon(1e-14));
    CHECK(nm.log_deriv(2.0) == Approx(2.0 / std::tanh(2.0)).epsilon(1e-13));
    CHECK(nm.rho == 1.0);
    CHECK(nm.alpha0 == 2.0);

    auto bk = make_bessel_kingman(2.5);
    CHECK(bk.rho == 0.0);
    CHECK(bk.log_deriv(0.5) == Approx(2.5 / 0.5).epsilon(1e-13));
    CHECK(bk.beta(0.7) == 0.0);

    auto jc = make_jacobi(1.0, 0.0);
    CHECK(jc.rho == 2.0);
    CHECK(jc.alpha0 == 3.0);
    double x = 0.9;
    double expect = 3.0 / std::tanh(x) + 1.0 * std::tanh(x); // (2a+1) coth + (2b+1) tanh
    CHECK(jc.log_deriv(x) == Approx(expect).epsilon(1e-12));

    // jacobi(1/2, -1/2) has the same log-derivative as the sinh^2 model
    auto jm = make_jacobi(0.5, -0.5);
    CHECK(jm.rho == 1.0);
    CHECK(jm.log_deriv(1.7) == Approx(nm.log_deriv(1.7)).epsilon(1e-12));
}

TEST_CASE("log-derivative splits into singular and regular parts near 0") {
    auto nm = make_naimark();
    // beta(x) = 2(coth x - 1/x) ~ 2x/3
    CHECK(nm.beta(1e-4) == Approx(2e-4 / 3.0).epsilon(1e-6));
    CHECK(nm.beta_prime(1e-4) == Approx(2.0 / 3.0).epsilon(1e-6));
    CHECK(nm.log_deriv(1e-4) == Approx(2.0 / 1e-4 + 2e-4 / 3.0).epsilon(1e-10));

    auto cm = make_custom("sinh(x)^2", 2.0, "custom-sinh2");
    CHECK(cm.beta(0.3) == Approx(nm.beta(0.3)).margin(1e-7));
    CHECK(cm.beta_prime(0.3) == Approx(nm.beta_prime(0.3)).margin(1e-5));
}

TEST_CASE("numeric index recovers the closed-form values") {
    CHECK(index_rho(make_naimark()) == 1.0);
    CHECK(index_rho(make_jacobi(1.0, 0.0)) == 4.0 / 2.0);
    auto cm = make_custom("sinh(x)^2", 2.0);
    CHECK(cm.rho == Approx(1.0).margin(1e-6));
    auto cj = make_custom("(2*sinh(x))^3 * (2*cosh(x))^1", 3.0);
    CHECK(cj.rho == Approx(2.0).margin(1e-6));
    CHECK(make_bounded_demo().rho == 0.0); // snapped exactly
    auto cb = make_custom("x^2", 2.0);
    CHECK(cb.rho == 0.0);
}

TEST_CASE("validation classifies the growth of the builtins") {
    auto rn = validate_model(make_naimark());
    CHECK(rn.ok);
    CHECK(rn.growth == GrowthClass::exponential_normalizable);
    CHECK(rn.haar_scale == Approx(0.25).epsilon(1e-6)); // sinh^2 e^{-2x} -> 1/4

    auto rb = validate_model(make_bessel_kingman(2.0));
    CHECK(rb.ok);
    CHECK(rb.growth == GrowthClass::sub_exponential);

    auto rj = validate_model(make_jacobi(1.0, 0.0));
    CHECK(rj.ok);
    CHECK(rj.growth == GrowthClass::exponential_normalizable);

    auto rd = validate_model(make_bounded_demo());
    CHECK(rd.ok);
    CHECK(rd.growth == GrowthClass::bounded);
    CHECK(rd.haar_scale == Approx(1.0).margin(0.05)); // sup (x/(1+x))^2 = 1
}

TEST_CASE("validation flags a decreasing coefficient") {
    SturmLiouvilleModel m;
    m.family = Family::custom;
    m.custom_A = expr::parse("x^2 * exp(-x)");
    m.alpha0 = 2.0;
    m.rho = 0.0;
    m.label = "shrinking";
    auto rep = validate_model(m);
    CHECK_FALSE(rep.ok);
    bool increasing_failed = false;
    for (const auto& c : rep.checks)
        if (c.name == "A increasing" && !c.passed) increasing_failed = true;
    CHECK(increasing_failed);
}

TEST_CASE("transmutation data for the sinh^2 model") {
    auto t = transmutation(make_naimark());
    // B(x) = exp((1/2) int_0^x 2(coth - 1/x)) = sinh(x)/x
    CHECK(t.B(1.0) == Approx(std::sinh(1.0)).epsilon(1e-9));
    CHECK(t.B(2.5) == Approx(std::sinh(2.5) / 2.5).epsilon(1e-9));
    // q = beta'/2 + beta^2/4 + beta alpha0/(2x) collapses to the constant 1
    CHECK(t.q(0.7) == Approx(1.0).epsilon(1e-10));
    CHECK(t.q(3.0) == Approx(1.0).epsilon(1e-10));
    // B_inf(x) = exp((1/2) int_1^x (2 coth - 2)) = sinh(x) e^{-x} * e / sinh(1)
    CHECK(t.B_inf(2.0) ==
          Approx(std::sinh(2.0) * std::exp(-2.0) * std::exp(1.0) / std::sinh(1.0)).epsilon(1e-9));
    // q_inf = (sqrt A conjugation potential) - rho^2 = coth^2 - csch^2 - 1 = 0
    CHECK(t.q_inf(2.0) == Approx(0.0).margin(1e-10));
}

TEST_CASE("model files parse and reject malformed input") {
    {
        std::istringstream in("family = jacobi\nalpha = 1.0\nbeta = 0.0\nlabel = demo\n");
        auto m = parse_model_text(in, "<test>");
        CHECK(m.family == Family::jacobi);
        CHECK(m.rho == 2.0);
        CHECK(m.label == "demo");
    }
    {
        std::istringstream in("family = custom\nA = x^2\nalpha0 = 2\nrho = 0\n");
        auto m = parse_model_text(in, "<test>");
        CHECK(m.A(3.0) == Approx(9.0));
        CHECK(m.rho == 0.0);
    }
    {
        std::istringstream in("family = naimark\nfamily = naimark\n");
        CHECK_THROWS_AS(parse_model_text(in, "<test>"), parse_error);
    }
    {
        std::istringstream in("family = sphere\n");
        CHECK_THROWS_AS(parse_model_text(in, "<test>"), parse_error);
    }
    {
        std::istringstream in("family = jacobi\nalpha = nope\nbeta = 0\n");
        CHECK_THROWS_AS(parse_model_text(in, "<test>"), parse_error);
    }
    CHECK_THROWS_AS(make_jacobi(0.0, 0.5), domain_error); // needs alpha >= beta
}

TEST_CASE("model aliases resolve") {
    CHECK(resolve_model("naimark").family == Family::naimark);
    CHECK(resolve_model("bessel-kingman:2.5").alpha0 == Approx(2.5));
    auto j = resolve_model("jacobi:1,0.5");
    CHECK(j.jac_alpha == Approx(1.0));
    CHECK(j.jac_beta == Approx(0.5));
    CHECK(resolve_model("bounded-demo").label == "bounded-demo");
    CHECK_THROWS_AS(resolve_model("no/such/file.model"), parse_error);
}
