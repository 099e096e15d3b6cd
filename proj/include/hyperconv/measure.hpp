#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hyperconv/errors.hpp"
#include "hyperconv/numerics.hpp"

namespace hyperconv {

// Finite signed measure on R: a list of exact atoms plus an absolutely
// continuous part sampled on a uniform grid with piecewise-linear
// interpretation. Density sample arrays always carry one zero node at each
// end; with that convention the trapezoid mass functional agrees with the
// plain nodal sum, and discrete convolution multiplies masses exactly and is
// associative/commutative to rounding.
struct GridMeasure {
    std::vector<std::pair<double, double>> atoms; // (position, mass), sorted by position
    double origin = 0.0;                          // position of density node 0
    double step = 1e-3;
    std::vector<double> density; // node values; empty, or >= 3 nodes zero-padded at both ends

    // Largest allowed density window, a guard against runaway convolutions.
    static inline double max_extent = 4096.0;

    bool has_density() const { return !density.empty(); }
    double window_lo() const { return origin; }
    double window_hi() const { return origin + step * double(density.size() - 1); }

    double mass() const {
        double s = 0.0;
        for (const auto& a : atoms) s += a.second;
        return s + trapezoid(step, density);
    }

    double tv_norm() const {
        double s = 0.0;
        for (const auto& a : atoms) s += std::abs(a.second);
        if (!density.empty()) {
            double t = 0.0;
            for (double v : density) t += std::abs(v);
            t -= 0.5 * (std::abs(density.front()) + std::abs(density.back()));
            s += step * t;
        }
        return s;
    }

    // Canonical form: atoms sorted/merged, zero padding restored, all-zero
    // density dropped.
    void normalize() {
        std::sort(atoms.begin(), atoms.end());
        std::vector<std::pair<double, double>> merged;
        for (const auto& a : atoms) {
            if (!merged.empty() &&
                std::abs(a.first - merged.back().first) <= 1e-9 * std::max(1.0, std::abs(a.first)))
                merged.back().second += a.second;
            else
                merged.push_back(a);
        }
        merged.erase(std::remove_if(merged.begin(), merged.end(),
                                    [](const auto& a) { return a.second == 0.0; }),
                     merged.end());
        atoms = std::move(merged);
        if (density.empty()) return;
        if (density.front() != 0.0) {
            density.insert(density.begin(), 0.0);
            origin -= step;
        }
        if (density.back() != 0.0) density.push_back(0.0);
        // trim redundant zero runs, keeping one pad node per side
        std::size_t lo = 0;
        while (lo + 1 < density.size() && density[lo] == 0.0 && density[lo + 1] == 0.0) ++lo;
        std::size_t hi = density.size();
        while (hi >= 2 && density[hi - 1] == 0.0 && density[hi - 2] == 0.0) --hi;
        if (lo > 0 || hi < density.size()) {
            if (hi <= lo + 1) {
                density.clear();
            } else {
                density = std::vector<double>(density.begin() + long(lo), density.begin() + long(hi));
                origin += step * double(lo);
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

inline GridMeasure make_atom(double position, double mass = 1.0) {
    GridMeasure m;
    m.atoms = {{position, mass}};
    return m;
}

// Density from per-cell masses: node i owns [lo + (i-1/2)h, lo + (i+1/2)h]
// and gets value cell_mass(i)/h. Stated masses are then exact to rounding.
// Note the cells overhang [lo, hi] by h/2 on each side; clip inside the cell
// function when the measure must vanish outside [lo, hi].
template <typename CellMass>
GridMeasure from_cells(double lo, double hi, double h, CellMass&& cell_mass) {
    if (!(h > 0.0) || !(hi > lo)) throw domain_error("from_cells: need h > 0 and hi > lo");
    auto n = static_cast<std::size_t>(std::ceil((hi - lo) / h - 1e-9)) + 1;
    GridMeasure m;
    m.step = h;
    m.origin = lo - h;
    m.density.assign(n + 2, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        m.density[i + 1] = cell_mass(lo + double(i) * h - 0.5 * h, lo + double(i) * h + 0.5 * h) / h;
    m.normalize();
    return m;
}

// Density from point samples of f on [lo, hi]; mass is accurate only to the
// trapezoid rule. Prefer from_cells when the mass must be exact.
template <typename F>
GridMeasure from_function(double lo, double hi, double h, F&& f) {
    return from_cells(lo, hi, h, [&f](double a, double b) {
        double t = 0.5 * (a + b);
        return f(t) * (b - a);
    });
}

// Uniform density of total `mass` on [a, b].
inline GridMeasure make_box(double a, double b, double h, double mass = 1.0) {
    if (!(b > a)) throw domain_error("make_box: need b > a");
    double height = mass / (b - a);
    return from_cells(a, b, h, [&](double clo, double chi) {
        double o = std::max(0.0, std::min(chi, b) - std::max(clo, a));
        return height * o;
    });
}

// ---------------------------------------------------------------------------
// Resampling and arithmetic
// ---------------------------------------------------------------------------

namespace detail {

// Piecewise-linear resample of (origin, step, v) onto a new grid; the copy is
// rescaled so its trapezoid mass matches the source (drift would otherwise be
// O(h^2) at interpolation kinks).
inline std::vector<double> resample_density(double origin, double step,
                                            const std::vector<double>& v, double new_origin,
                                            double new_step, std::size_t n) {
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = pl_eval(origin, step, v, new_origin + double(i) * new_step);
    double m_src = trapezoid(step, v), m_dst = trapezoid(new_step, out);
    double tv = 0.0;
    for (double x : out) tv += std::abs(x);
    tv *= new_step;
    if (std::abs(m_dst) > 1e-9 * std::max(tv, 1.0) && std::abs(m_src) > 0.0) {
        double s = m_src / m_dst;
        for (double& x : out) x *= s;
    }
    return out;
}

inline bool same_grid(const GridMeasure& a, const GridMeasure& b) {
    return a.density.size() == b.density.size() && a.step == b.step &&
           std::abs(a.origin - b.origin) <= 1e-12 * std::max(1.0, std::abs(a.origin));
}

// a += weight * density part of b, aligning grids. Assumes equal steps unless
// resampling is unavoidable.
inline void add_density(GridMeasure& a, double weight, const GridMeasure& b) {
    if (!b.has_density() || weight == 0.0) return;
    if (!a.has_density()) {
        a.step = b.step;
        a.origin = b.origin;
        a.density.assign(b.density.size(), 0.0);
    }
    double rel = std::abs(a.step - b.step) / a.step;
    double off = (b.origin - a.origin) / a.step;
    double off_int = std::round(off);
    if (rel < 1e-12 && std::abs(off - off_int) < 1e-6) {
        // commensurate grids: extend and add node-wise
        long shift = long(off_int);
        long lo = std::min(0L, shift);
        long hi = std::max(long(a.density.size()), shift + long(b.density.size()));
        if (double(hi - lo - 1) * a.step > GridMeasure::max_extent)
            throw numeric_error("measure window exceeds the configured maximum extent");
        if (lo < 0 || hi > long(a.density.size())) {
            std::vector<double> grown(std::size_t(hi - lo), 0.0);
            for (std::size_t i = 0; i < a.density.size(); ++i) grown[std::size_t(long(i) - lo)] = a.density[i];
            a.density = std::move(grown);
            a.origin += a.step * double(lo);
            shift -= lo;
        }
        for (std::size_t i = 0; i < b.density.size(); ++i)
            a.density[std::size_t(shift) + i] += weight * b.density[i];
    } else {
        // incommensurate: resample b onto a's lattice
        double lo = std::min(a.window_lo(), b.window_lo());
        double hi = std::max(a.window_hi(), b.window_hi());
        double h = a.step;
        long k0 = long(std::floor((lo - a.origin) / h)) - 1;
        long k1 = long(std::ceil((hi - a.origin) / h)) + 1;
        if (double(k1 - k0) * h > GridMeasure::max_extent)
            throw numeric_error("measure window exceeds the configured maximum extent");
        double new_origin = a.origin + h * double(k0);
        auto n = std::size_t(k1 - k0 + 1);
        auto ra = resample_density(a.origin, a.step, a.density, new_origin, h, n);
        auto rb = resample_density(b.origin, b.step, b.density, new_origin, h, n);
        for (std::size_t i = 0; i < n; ++i) ra[i] += weight * rb[i];
        a.origin = new_origin;
        a.density = std::move(ra);
    }
}

} // namespace detail

inline GridMeasure scaled(GridMeasure m, double c) {
    for (auto& a : m.atoms) a.second *= c;
    for (auto& v : m.density) v *= c;
    return m;
}

inline GridMeasure plus(const GridMeasure& a, const GridMeasure& b) {
    GridMeasure r = a;
    r.atoms.insert(r.atoms.end(), b.atoms.begin(), b.atoms.end());
    detail::add_density(r, 1.0, b);
    r.normalize();
    return r;
}

// Restrict to [lo, hi]; returns the discarded total-variation mass.
inline double clip(GridMeasure& m, double lo, double hi) {
    double dropped = 0.0;
    std::vector<std::pair<double, double>> kept;
    for (const auto& a : m.atoms) {
        if (a.first < lo || a.first > hi)
            dropped += std::abs(a.second);
        else
            kept.push_back(a);
    }
    m.atoms = std::move(kept);
    if (m.has_density()) {
        for (std::size_t i = 0; i < m.density.size(); ++i) {
            double t = m.origin + double(i) * m.step;
            if (t < lo - 1e-12 || t > hi + 1e-12) {
                dropped += std::abs(m.density[i]) * m.step;
                m.density[i] = 0.0;
            }
        }
        m.normalize();
    }
    return dropped;
}

// ---------------------------------------------------------------------------
// Core operations
// ---------------------------------------------------------------------------

// Convolution on the group (R, +). Atom pairs stay exact; atom x density is a
// translate; density x density is the trapezoid-weighted discrete convolution
// (with the zero-padding convention the end weights are immaterial).
inline GridMeasure convolve_R(const GridMeasure& mu, const GridMeasure& nu) {
    GridMeasure r;
    for (const auto& a : mu.atoms)
        for (const auto& b : nu.atoms) r.atoms.emplace_back(a.first + b.first, a.second * b.second);

    auto add_translates = [&r](const GridMeasure& dens,
                               const std::vector<std::pair<double, double>>& atoms) {
        if (!dens.has_density()) return;
        for (const auto& a : atoms) {
            if (a.second == 0.0) continue;
            GridMeasure shifted;
            shifted.step = dens.step;
            shifted.origin = dens.origin + a.first;
            shifted.density = dens.density;
            detail::add_density(r, a.second, shifted);
        }
    };
    add_translates(mu, nu.atoms);
    add_translates(nu, mu.atoms);

    if (mu.has_density() && nu.has_density()) {
        double rel = std::abs(mu.step - nu.step) / mu.step;
        const GridMeasure* f = &mu;
        const GridMeasure* g = &nu;
        GridMeasure resampled;
        if (rel >= 1e-12) {
            // resample the coarser factor onto the finer lattice
            const GridMeasure* coarse = mu.step > nu.step ? &mu : &nu;
            const GridMeasure* fine = mu.step > nu.step ? &nu : &mu;
            auto n = std::size_t(std::ceil((coarse->window_hi() - coarse->window_lo()) / fine->step)) + 2;
            resampled.step = fine->step;
            resampled.origin = coarse->window_lo();
            resampled.density = detail::resample_density(coarse->origin, coarse->step,
                                                         coarse->density, resampled.origin,
                                                         fine->step, n);
            resampled.normalize();
            f = fine;
            g = &resampled;
        }
        std::size_t nf = f->density.size(), ng = g->density.size();
        if (double(nf + ng - 1) * f->step > GridMeasure::max_extent)
            throw numeric_error("convolve_R: result window exceeds the configured maximum extent");
        GridMeasure c;
        c.step = f->step;
        c.origin = f->origin + g->origin;
        c.density.assign(nf + ng - 1, 0.0);
        const double h = f->step;
        for (std::size_t i = 0; i < nf; ++i) {
            double fi = f->density[i];
            if (fi == 0.0) continue;
            double w = h * fi;
            const double* gs = g->density.data();
            double* cs = c.density.data() + i;
            for (std::size_t j = 0; j < ng; ++j) cs[j] += w * gs[j];
        }
        detail::add_density(r, 1.0, c);
    }
    r.normalize();
    return r;
}

// Total-variation distance. Atoms are matched by position; densities are
// compared node-wise on a common lattice.
inline double tv_distance(const GridMeasure& mu, const GridMeasure& nu) {
    double s = 0.0;
    {
        std::size_t i = 0, j = 0;
        while (i < mu.atoms.size() || j < nu.atoms.size()) {
            if (j >= nu.atoms.size()) {
                s += std::abs(mu.atoms[i++].second);
            } else if (i >= mu.atoms.size()) {
                s += std::abs(nu.atoms[j++].second);
            } else {
                double pa = mu.atoms[i].first, pb = nu.atoms[j].first;
                if (std::abs(pa - pb) <= 1e-9 * std::max(1.0, std::abs(pa))) {
                    s += std::abs(mu.atoms[i++].second - nu.atoms[j++].second);
                } else if (pa < pb) {
                    s += std::abs(mu.atoms[i++].second);
                } else {
                    s += std::abs(nu.atoms[j++].second);
                }
            }
        }
    }
    if (!mu.has_density() && !nu.has_density()) return s;
    if (detail::same_grid(mu, nu)) {
        double t = 0.0;
        for (std::size_t i = 0; i < mu.density.size(); ++i)
            t += std::abs(mu.density[i] - nu.density[i]);
        t -= 0.5 * (std::abs(mu.density.front() - nu.density.front()) +
                    std::abs(mu.density.back() - nu.density.back()));
        return s + mu.step * t;
    }
    double h = std::min(mu.has_density() ? mu.step : 1e300, nu.has_density() ? nu.step : 1e300);
    double lo = std::min(mu.has_density() ? mu.window_lo() : 1e300,
                         nu.has_density() ? nu.window_lo() : 1e300);
    double hi = std::max(mu.has_density() ? mu.window_hi() : -1e300,
                         nu.has_density() ? nu.window_hi() : -1e300);
    auto n = std::size_t(std::ceil((hi - lo) / h)) + 1;
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) {
        double t = lo + double(i) * h;
        diff[i] = std::abs(pl_eval(mu.origin, mu.step, mu.density, t) -
                           pl_eval(nu.origin, nu.step, nu.density, t));
    }
    return s + trapezoid(h, diff);
}

// <mu, f> for a pointwise-evaluable f: exact on atoms, trapezoid on density.
template <typename F>
double pair_with(const GridMeasure& mu, F&& f) {
    double s = 0.0;
    for (const auto& a : mu.atoms) s += a.second * f(a.first);
    if (mu.has_density()) {
        std::vector<double> v(mu.density.size());
        for (std::size_t i = 0; i < v.size(); ++i)
            v[i] = mu.density[i] * f(mu.origin + double(i) * mu.step);
        s += trapezoid(mu.step, v);
    }
    return s;
}

// Fourier-Stieltjes transform: integral of e^{-i lambda t} d mu(t). The
// density part integrates e^{-i lambda t} against the piecewise-linear
// interpolant cell-exactly.
inline std::complex<double> fourier_stieltjes(const GridMeasure& mu, double lambda) {
    using cd = std::complex<double>;
    const cd I(0.0, 1.0);
    cd s = 0.0;
    for (const auto& a : mu.atoms) s += a.second * std::exp(-I * lambda * a.first);
    if (!mu.has_density()) return s;
    const double h = mu.step, lh = lambda * h;
    cd E0, E1; // integrals of e^{-i lambda u} and u e^{-i lambda u} over [0, h]
    if (std::abs(lh) < 1e-4) {
        E0 = h * (cd(1.0) - I * (lh / 2.0) - lh * lh / 6.0 + I * (lh * lh * lh / 24.0));
        E1 = h * h * (cd(0.5) - I * (lh / 3.0) - lh * lh / 8.0 + I * (lh * lh * lh / 30.0));
    } else {
        cd e = std::exp(-I * lh);
        E0 = (1.0 - e) / (I * lambda);
        E1 = (e * (cd(0.0, 1.0) * lh + 1.0) - 1.0) / (lambda * lambda);
    }
    cd sum0 = 0.0, sum1 = 0.0;
    for (std::size_t i = 0; i + 1 < mu.density.size(); ++i) {
        cd ph = std::exp(-I * lambda * (mu.origin + double(i) * h));
        sum0 += ph * mu.density[i];
        sum1 += ph * (mu.density[i + 1] - mu.density[i]);
    }
    return s + E0 * sum0 + (E1 / h) * sum1;
}

// e^{-rho t} d mu(t), node-wise on the density.
inline GridMeasure exp_weight(GridMeasure mu, double rho) {
    for (auto& a : mu.atoms) a.second *= std::exp(-rho * a.first);
    for (std::size_t i = 0; i < mu.density.size(); ++i)
        mu.density[i] *= std::exp(-rho * (mu.origin + double(i) * mu.step));
    mu.normalize();
    return mu;
}

// (delta_0 - u/2)^{-1} * target by the geometric series
// sum_k (u/2)^{*k} * target, truncated when the remaining tail
// (|u|/2)^{k+1} / (1 - |u|/2) * |target| drops below tol. Terms are clipped
// to [window_lo, window_hi] to keep the series at a fixed extent; u must
// satisfy |u|_TV < 2.
inline GridMeasure neumann_inverse(const GridMeasure& u, const GridMeasure& target, double tol,
                                   double window_lo, double window_hi, int max_terms = 400) {
    double r = 0.5 * u.tv_norm();
    if (!(r < 1.0))
        throw domain_error("neumann_inverse: |u|_TV must be < 2 for the series to converge");
    GridMeasure half_u = scaled(u, 0.5);
    GridMeasure total = target;
    GridMeasure term = target;
    double term_norm = target.tv_norm();
    for (int k = 1; k <= max_terms; ++k) {
        double tail = std::pow(r, k) / (1.0 - r) * target.tv_norm();
        if (tail < tol) {
            total.normalize();
            return total;
        }
        term = convolve_R(half_u, term);
        clip(term, window_lo, window_hi);
        total = plus(total, term);
        term_norm *= r;
        (void)term_norm;
    }
    throw numeric_error("neumann_inverse: series did not reach the tail bound");
}

// ---------------------------------------------------------------------------
// CSV serialization
// ---------------------------------------------------------------------------

// Format: '# atom <pos> <mass>' comment lines, then 't,density' rows.
// 17 significant digits; round-trips exactly.
inline void write_csv(std::ostream& out, const GridMeasure& m) {
    char buf[96];
    for (const auto& a : m.atoms) {
        std::snprintf(buf, sizeof buf, "# atom %.17g %.17g\n", a.first, a.second);
        out << buf;
    }
    out << "t,density\n";
    for (std::size_t i = 0; i < m.density.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", m.origin + double(i) * m.step,
                      m.density[i]);
        out << buf;
    }
}

inline void write_csv_file(const std::string& path, const GridMeasure& m) {
    std::ofstream out(path);
    if (!out) throw error("cannot open '" + path + "' for writing");
    write_csv(out, m);
}

inline GridMeasure read_csv(std::istream& in, const std::string& origin_name = "<csv>") {
    GridMeasure m;
    std::string line;
    std::vector<double> ts;
    bool header_seen = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r") continue;
        if (line[0] == '#') {
            std::istringstream ls(line.substr(1));
            std::string tag;
            double p, w;
            if (ls >> tag >> p >> w && tag == "atom") m.atoms.emplace_back(p, w);
            continue;
        }
        if (!header_seen) {
            if (line.rfind("t,density", 0) != 0)
                throw parse_error(origin_name + ":" + std::to_string(lineno) +
                                  ": expected 't,density' header");
            header_seen = true;
            continue;
        }
        auto comma = line.find(',');
        if (comma == std::string::npos)
            throw parse_error(origin_name + ":" + std::to_string(lineno) + ": expected t,density row");
        try {
            ts.push_back(std::stod(line.substr(0, comma)));
            m.density.push_back(std::stod(line.substr(comma + 1)));
        } catch (const std::exception&) {
            throw parse_error(origin_name + ":" + std::to_string(lineno) + ": bad number");
        }
    }
    if (!header_seen) throw parse_error(origin_name + ": missing 't,density' header");
    if (!ts.empty()) {
        m.origin = ts.front();
        m.step = ts.size() > 1 ? (ts.back() - ts.front()) / double(ts.size() - 1) : 1e-3;
    }
    std::sort(m.atoms.begin(), m.atoms.end());
    return m;
}

inline GridMeasure read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("cannot open '" + path + "' for reading");
    return read_csv(in, path);
}

} // namespace hyperconv
