#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "hyperconv/errors.hpp"
#include "hyperconv/model.hpp"
#include "hyperconv/numerics.hpp"

namespace hyperconv {

using cdouble = std::complex<double>;

// Solution of L phi = (lambda^2 + rho^2) phi, L = -d^2/dx^2 - (A'/A) d/dx,
// normalized by phi(0) = 1, phi'(0) = 0. Sampled on x = k * step.
struct EigenSolution {
    cdouble lambda;
    double step = 0.0;
    std::vector<cdouble> phi;
    std::vector<cdouble> phi_prime;

    double x_at(std::size_t k) const { return double(k) * step; }
};

namespace detail {

// beta(0+) and beta'(0+). beta is odd for the classical families; custom
// models may have beta(0) != 0, so extrapolate both linearly from x_regular.
inline void beta_origin(const SturmLiouvilleModel& m, double& b0, double& b1) {
    switch (m.family) {
        case Family::bessel_kingman: b0 = 0.0, b1 = 0.0; return;
        case Family::naimark: b0 = 0.0, b1 = 2.0 / 3.0; return;
        case Family::jacobi:
            b0 = 0.0;
            b1 = (2.0 * m.jac_alpha + 1.0) / 3.0 + (2.0 * m.jac_beta + 1.0);
            return;
        case Family::custom: {
            double e = m.x_regular;
            double v1 = m.beta(e), v2 = m.beta(2.0 * e);
            b0 = 2.0 * v1 - v2;
            b1 = (v2 - v1) / e;
            return;
        }
    }
}

// Four-term Frobenius startup:
// phi = 1 + c2 x^2 + c3 x^3 + c4 x^4 near the regular singular point, with
// A'/A = alpha0/x + b0 + b1 x + O(x^2).
struct FrobeniusSeries {
    cdouble c2, c3, c4;
    cdouble value(double x) const {
        double x2 = x * x;
        return 1.0 + c2 * x2 + c3 * (x2 * x) + c4 * (x2 * x2);
    }
    cdouble deriv(double x) const {
        double x2 = x * x;
        return 2.0 * c2 * x + 3.0 * c3 * x2 + 4.0 * c4 * (x2 * x);
    }
};

inline FrobeniusSeries frobenius_startup(const SturmLiouvilleModel& m, cdouble s) {
    double b0, b1;
    beta_origin(m, b0, b1);
    double a0 = m.alpha0;
    FrobeniusSeries f;
    f.c2 = -s / (2.0 * (1.0 + a0));
    f.c3 = -2.0 * b0 * f.c2 / (3.0 * (2.0 + a0));
    f.c4 = -(3.0 * b0 * f.c3 + (2.0 * b1 + s) * f.c2) / (4.0 * (3.0 + a0));
    return f;
}

} // namespace detail

// Eigenfunction phi_lambda on [0, x_max], sampled at multiples of `step`.
// Startup by the Frobenius series to x_start, then adaptive Runge-Kutta.
inline EigenSolution phi_lambda(const SturmLiouvilleModel& m, cdouble lambda, double x_max,
                                double step = 1e-2, double x_start = 1e-2, double rtol = 1e-11) {
    if (!(x_max > 0.0) || !(step > 0.0)) throw domain_error("phi_lambda: need x_max, step > 0");
    if (!(x_start > 0.0) || x_start > 0.5) throw domain_error("phi_lambda: x_start out of range");
    const cdouble s = lambda * lambda + cdouble(m.rho * m.rho);
    auto series = detail::frobenius_startup(m, s);

    EigenSolution sol;
    sol.lambda = lambda;
    sol.step = step;
    auto n = static_cast<std::size_t>(std::floor(x_max / step + 1e-9)) + 1;
    sol.phi.resize(n);
    sol.phi_prime.resize(n);
    sol.phi[0] = 1.0;
    sol.phi_prime[0] = 0.0;

    std::vector<double> tail_xs; // grid points handled by the integrator
    std::size_t first_tail = n;
    for (std::size_t k = 1; k < n; ++k) {
        double x = double(k) * step;
        if (x < x_start) {
            sol.phi[k] = series.value(x);
            sol.phi_prime[k] = series.deriv(x);
        } else {
            if (first_tail == n) first_tail = k;
            tail_xs.push_back(x);
        }
    }
    if (tail_xs.empty()) return sol;

    state<cdouble, 2> y0{series.value(x_start), series.deriv(x_start)};
    auto rhs = [&m, s](double x, const state<cdouble, 2>& y) {
        return state<cdouble, 2>{y[1], -m.log_deriv(x) * y[1] - s * y[0]};
    };
    auto path = rk45_path(rhs, x_start, y0, tail_xs, rtol, 1e-300);
    for (std::size_t j = 0; j < tail_xs.size(); ++j) {
        sol.phi[first_tail + j] = path[j][0];
        sol.phi_prime[first_tail + j] = path[j][1];
    }
    return sol;
}

// phi_lambda at a single point.
inline cdouble phi_lambda_at(const SturmLiouvilleModel& m, cdouble lambda, double x,
                             double x_start = 1e-2, double rtol = 1e-11) {
    if (x == 0.0) return 1.0;
    const cdouble s = lambda * lambda + cdouble(m.rho * m.rho);
    auto series = detail::frobenius_startup(m, s);
    if (x < x_start) return series.value(x);
    state<cdouble, 2> y0{series.value(x_start), series.deriv(x_start)};
    auto rhs = [&m, s](double t, const state<cdouble, 2>& y) {
        return state<cdouble, 2>{y[1], -m.log_deriv(t) * y[1] - s * y[0]};
    };
    auto path = rk45_path(rhs, x_start, y0, {x}, rtol, 1e-300);
    return path[0][0];
}

// Harish-Chandra-type coefficient extracted from the oscillatory regime:
// e^{rho x} phi_lambda(x) ~ c_plus e^{i lambda x} + c_minus e^{-i lambda x}.
struct CEstimate {
    cdouble c_plus;
    cdouble c_minus;
    double residual; // relative mismatch at the validation point
};

// Two-point fit at x_fit and x_fit + pi/(4 lambda), validated at a third
// point. Requires real lambda != 0 and a model whose growth is
// exponential-normalizable (otherwise the expansion does not hold).
inline CEstimate c_function(const SturmLiouvilleModel& m, double lambda, double x_fit = 30.0) {
    if (lambda == 0.0) throw domain_error("c_function: lambda must be nonzero");
    if (!(x_fit >= 10.0)) throw domain_error("c_function: x_fit too small for the asymptotic fit");
    if (!(m.rho > 0.0))
        throw regime_error("c_function: model must have rho > 0 (exponential growth)");
    {
        double s20 = m.A(20.0) * std::exp(-2.0 * m.rho * 20.0);
        double s40 = m.A(40.0) * std::exp(-2.0 * m.rho * 40.0);
        if (!(std::isfinite(s40) && s40 > 0.0 && std::abs(s40 / s20 - 1.0) < 1e-2))
            throw regime_error("c_function: A e^{-2 rho x} does not stabilize; no c expansion");
    }
    const double x1 = x_fit;
    const double x2 = x_fit + pi / (4.0 * std::abs(lambda));
    const double xv = std::max(x_fit + 5.0, 35.0);
    const double x_end = std::max(x2, xv);

    auto sol_rhs = [&m, lambda](double x, const state<cdouble, 2>& y) {
        cdouble s = cdouble(lambda * lambda + m.rho * m.rho);
        return state<cdouble, 2>{y[1], -m.log_deriv(x) * y[1] - s * y[0]};
    };
    auto series = detail::frobenius_startup(m, cdouble(lambda * lambda + m.rho * m.rho));
    state<cdouble, 2> y0{series.value(1e-2), series.deriv(1e-2)};
    std::vector<double> xs{x1, x2, x_end};
    std::sort(xs.begin(), xs.end());
    auto path = rk45_path(sol_rhs, 1e-2, y0, xs, 1e-11, 1e-300);
    auto at = [&](double x) -> cdouble {
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (xs[i] == x) return path[i][0];
        return 0.0;
    };

    const cdouble I(0.0, 1.0);
    cdouble g1 = std::exp(cdouble(m.rho * x1)) * at(x1);
    cdouble g2 = std::exp(cdouble(m.rho * x2)) * at(x2);
    cdouble e1p = std::exp(I * lambda * x1), e1m = std::exp(-I * lambda * x1);
    cdouble e2p = std::exp(I * lambda * x2), e2m = std::exp(-I * lambda * x2);
    cdouble det = e1p * e2m - e1m * e2p; // -2i sin(lambda (x2 - x1))
    if (std::abs(det) < 0.5)
        throw numeric_error("c_function: fit points nearly degenerate (conditioning)");
    CEstimate est;
    est.c_plus = (g1 * e2m - g2 * e1m) / det;
    est.c_minus = (g2 * e1p - g1 * e2p) / det;
    cdouble gv = std::exp(cdouble(m.rho * xv)) * at(xv);
    cdouble pred = est.c_plus * std::exp(I * lambda * xv) + est.c_minus * std::exp(-I * lambda * xv);
    est.residual = std::abs(pred - gv) / std::max(1.0, std::abs(gv));
    return est;
}

// c(-lambda - i rho) = lim_y e^{i lambda y} phi_{lambda + i rho}(y); the
// correction decays like e^{-2 rho y}, so two sample points double as a
// residual check. This is the boundary value matched by the Fourier-Stieltjes
// transform of nu_infty.
inline CEstimate c_shifted(const SturmLiouvilleModel& m, double lambda, double x_fit = 30.0) {
    if (!(m.rho > 0.0))
        throw regime_error("c_shifted: model must have rho > 0 (exponential growth)");
    const cdouble I(0.0, 1.0);
    const cdouble mu = cdouble(lambda, m.rho);
    const double x1 = x_fit, x2 = x_fit + 3.0;
    auto rhs = [&m, mu](double x, const state<cdouble, 2>& y) {
        cdouble s = mu * mu + cdouble(m.rho * m.rho);
        return state<cdouble, 2>{y[1], -m.log_deriv(x) * y[1] - s * y[0]};
    };
    auto series = detail::frobenius_startup(m, mu * mu + cdouble(m.rho * m.rho));
    state<cdouble, 2> y0{series.value(1e-2), series.deriv(1e-2)};
    auto path = rk45_path(rhs, 1e-2, y0, {x1, x2}, 1e-11, 1e-300);
    cdouble v1 = std::exp(I * lambda * x1) * path[0][0];
    cdouble v2 = std::exp(I * lambda * x2) * path[1][0];
    CEstimate est;
    est.c_plus = v2;
    est.c_minus = std::conj(v2);
    est.residual = std::abs(v2 - v1) / std::max(1.0, std::abs(v2));
    return est;
}

} // namespace hyperconv
