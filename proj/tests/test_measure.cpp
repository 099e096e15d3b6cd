#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <sstream>

#include <hyperconv/measure.hpp>

using namespace hyperconv;
using Catch::Approx;

TEST_CASE("cell constructors carry exact mass") {
    // cells of e^t restricted to [-1, 1]: total mass e - 1/e to rounding
    auto m = from_cells(-1.0, 1.0, 1e-3, [](double a, double b) {
        return std::exp(std::min(b, 1.0)) - std::exp(std::max(a, -1.0));
    });
    CHECK(m.mass() == Approx(std::exp(1.0) - std::exp(-1.0)).epsilon(1e-12));

    auto box = make_box(0.0, 2.0, 1e-3, 3.0);
    CHECK(box.mass() == Approx(3.0).epsilon(1e-13));
    CHECK(box.window_lo() <= 0.0);
    CHECK(box.window_hi() >= 2.0);
}

TEST_CASE("normalize merges atoms and trims padding") {
    GridMeasure m;
    m.atoms = {{1.0, 0.5}, {1.0 + 1e-12, 0.25}, {2.0, -0.75}};
    m.normalize();
    REQUIRE(m.atoms.size() == 2);
    CHECK(m.atoms[0].second == Approx(0.75));
    CHECK(m.mass() == Approx(0.0).margin(1e-15));
    CHECK(m.tv_norm() == Approx(1.5));
}

TEST_CASE("line convolution multiplies mass exactly and commutes") {
    auto a = make_box(0.0, 1.0, 1e-3, 1.0);
    auto b = make_box(0.5, 2.0, 1e-3, 0.7);
    auto ab = convolve_R(a, b);
    auto ba = convolve_R(b, a);
    CHECK(ab.mass() == Approx(0.7).epsilon(1e-11));
    CHECK(tv_distance(ab, ba) == Approx(0.0).margin(1e-14));

    // box * box: triangle density; at the midpoint of [0,1]*[0,1] the
    // interpolated value is 1 (peak of the unit triangle)
    auto t = convolve_R(make_box(0.0, 1.0, 1e-3, 1.0), make_box(0.0, 1.0, 1e-3, 1.0));
    CHECK(pl_eval(t.origin, t.step, t.density, 1.0) == Approx(1.0).margin(2e-3));
    CHECK(pl_eval(t.origin, t.step, t.density, 0.5) == Approx(0.5).margin(2e-3));

    // atoms shift exactly
    auto shifted = convolve_R(make_atom(0.25, 2.0), b);
    CHECK(shifted.mass() == Approx(1.4).epsilon(1e-11));
    CHECK(shifted.window_lo() == Approx(b.window_lo() + 0.25));
}

TEST_CASE("line convolution is associative on densities") {
    auto a = make_box(0.0, 0.5, 2e-3, 1.0);
    auto b = make_box(-0.25, 0.25, 2e-3, 1.0);
    auto c = make_box(0.1, 0.6, 2e-3, 1.0);
    auto left = convolve_R(convolve_R(a, b), c);
    auto right = convolve_R(a, convolve_R(b, c));
    CHECK(tv_distance(left, right) < 1e-8);
}

TEST_CASE("total variation distance matches hand values") {
    auto u1 = make_box(0.0, 1.0, 1e-3, 1.0);
    auto u2 = make_box(0.02, 1.02, 1e-3, 1.0);
    // overlap misses 0.02 on each side
    CHECK(tv_distance(u1, u2) == Approx(0.04).margin(1e-3));
    CHECK(tv_distance(u1, u1) == 0.0);

    // triangle inequality on a random-ish triple
    auto u3 = make_box(-0.5, 0.75, 1e-3, 1.0);
    CHECK(tv_distance(u1, u3) <= tv_distance(u1, u2) + tv_distance(u2, u3) + 1e-12);

    // atom against nothing counts fully
    CHECK(tv_distance(make_atom(1.0, 0.5), GridMeasure{}) == Approx(0.5));
}

TEST_CASE("pairing integrates atoms exactly and densities by trapezoid") {
    GridMeasure m = make_box(-1.0, 1.0, 1e-3, 2.0);
    m.atoms = {{0.25, 0.5}};
    double v = pair_with(m, [](double t) { return t * t; });
    // density part: height 1, int t^2 = 2/3; atom: 0.5 * 0.0625
    CHECK(v == Approx(2.0 / 3.0 + 0.03125).margin(1e-5));
}

TEST_CASE("Fourier-Stieltjes transform is multiplicative under convolution") {
    const double h = 1e-3;
    auto a = make_box(0.0, 1.0, h, 1.0);
    auto b = from_cells(-0.5, 0.5, h,
                        [](double lo, double hi) { return std::exp(hi) - std::exp(lo); });
    auto c = convolve_R(a, b);
    for (double lam : {0.0, 0.7, 2.5, -3.3}) {
        // stored densities are node sequences smoothed by the unit hat, so the
        // transform of a convolution carries one hat factor, the product two;
        // compensating by sinc^2(lambda h / 2) makes the identity exact
        double s = 1.0;
        if (lam != 0.0) {
            double z = 0.5 * lam * h;
            s = std::sin(z) / z;
            s *= s;
        }
        auto lhs = fourier_stieltjes(c, lam) * s;
        auto rhs = fourier_stieltjes(a, lam) * fourier_stieltjes(b, lam);
        CHECK(std::abs(lhs - rhs) < 1e-11);
    }

    // with an atom in the mix the identity holds to the hat-factor defect
    GridMeasure bm = b;
    bm.atoms = {{0.3, 0.25}};
    auto cm = convolve_R(a, bm);
    for (double lam : {0.7, 2.5}) {
        auto lhs = fourier_stieltjes(cm, lam);
        auto rhs = fourier_stieltjes(a, lam) * fourier_stieltjes(bm, lam);
        CHECK(std::abs(lhs - rhs) < 5e-6);
    }
}

TEST_CASE("Fourier-Stieltjes transform matches closed forms") {
    // uniform on [-1, 1]: transform sin(lambda)/lambda
    auto u = make_box(-1.0, 1.0, 1e-3, 1.0);
    for (double lam : {0.5, 1.0, 4.0}) {
        auto v = fourier_stieltjes(u, lam);
        CHECK(v.real() == Approx(std::sin(lam) / lam).margin(1e-5));
        CHECK(v.imag() == Approx(0.0).margin(1e-12));
    }
    // atom at 1: e^{-i lambda}
    auto a = fourier_stieltjes(make_atom(1.0, 1.0), 2.0);
    CHECK(a.real() == Approx(std::cos(2.0)));
    CHECK(a.imag() == Approx(-std::sin(2.0)));
}

TEST_CASE("exponential weighting of a measure") {
    // e^{-t} against the density e^t/(2 sinh 1) on [-1,1] gives the uniform 1/(2 sinh 1)
    auto nu = from_cells(-1.0, 1.0, 1e-3, [](double a, double b) {
        return std::exp(std::min(b, 1.0)) - std::exp(std::max(a, -1.0));
    });
    nu = scaled(nu, 1.0 / (2.0 * std::sinh(1.0)));
    auto tau = exp_weight(nu, 1.0);
    double height = 1.0 / (2.0 * std::sinh(1.0)); // 0.42545906
    CHECK(pl_eval(tau.origin, tau.step, tau.density, 0.0) == Approx(height).margin(1e-6));
    CHECK(pl_eval(tau.origin, tau.step, tau.density, 0.9) == Approx(height).margin(1e-6));
    CHECK(tau.mass() == Approx(2.0 * height).margin(1e-6));

    auto at = exp_weight(make_atom(2.0, 1.0), 0.5);
    CHECK(at.atoms[0].second == Approx(std::exp(-1.0)));
}

TEST_CASE("Neumann series inverts delta - u/2 against the closed form") {
    // u = 2 rho e^{2 rho t} on t < 0; (delta - u/2)^{-1} = delta + rho e^{rho t} 1_{t<0}
    const double rho = 1.0, h = 2e-3, L = 18.0;
    auto u = from_cells(-L, 0.0, h, [rho](double a, double b) {
        b = std::min(b, 0.0);
        if (b <= a) return 0.0;
        return std::exp(2.0 * rho * b) - std::exp(2.0 * rho * a);
    });
    GridMeasure target = make_box(-0.5, 0.0, h, 1.0);
    auto inv = neumann_inverse(u, target, 1e-8, -40.0, 1.0);

    GridMeasure closed = target;
    auto kernel = from_cells(-L, 0.0, h, [rho](double a, double b) {
        b = std::min(b, 0.0);
        if (b <= a) return 0.0;
        return std::exp(rho * b) - std::exp(rho * a);
    });
    closed = plus(closed, convolve_R(kernel, target));
    CHECK(tv_distance(inv, closed) < 5e-4);
    CHECK(inv.mass() == Approx(target.mass() / (1.0 - 0.5 * u.mass())).margin(1e-4));
}

TEST_CASE("Neumann series rejects a non-contracting u") {
    auto u = make_box(-1.0, 0.0, 1e-2, 2.5); // |u| = 2.5 >= 2
    auto t = make_box(-0.5, 0.0, 1e-2, 1.0);
    CHECK_THROWS_AS(neumann_inverse(u, t, 1e-6, -10.0, 1.0), domain_error);
}

TEST_CASE("CSV round-trip preserves atoms and samples") {
    GridMeasure m = make_box(-0.25, 0.75, 1e-3, 1.25);
    m.atoms = {{0.0, 0.5}, {1.0 / 3.0, -0.125}};
    m.normalize();
    std::ostringstream out;
    write_csv(out, m);
    std::istringstream in(out.str());
    auto back = read_csv(in);
    back.normalize();
    CHECK(back.atoms.size() == m.atoms.size());
    CHECK(back.atoms[1].first == m.atoms[1].first); // bit-exact through %.17g
    CHECK(back.step == Approx(m.step).epsilon(1e-12));
    CHECK(tv_distance(m, back) < 1e-12);
}

TEST_CASE("CSV reader reports malformed rows") {
    std::istringstream bad1("t;density\n0,1\n");
    CHECK_THROWS_AS(read_csv(bad1), parse_error);
    std::istringstream bad2("t,density\n0.0,zero\n");
    CHECK_THROWS_AS(read_csv(bad2), parse_error);
}
