#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "hyperconv/errors.hpp"
#include "hyperconv/expr.hpp"
#include "hyperconv/numerics.hpp"

namespace hyperconv {

enum class Family { bessel_kingman, naimark, jacobi, custom };

namespace detail {

// coth(x) - 1/x, stable near 0.
inline double coth_m1x(double x) {
    if (std::abs(x) < 0.05) {
        double x2 = x * x;
        return x * (1.0 / 3 + x2 * (-1.0 / 45 + x2 * (2.0 / 945 - x2 / 4725)));
    }
    return 1.0 / std::tanh(x) - 1.0 / x;
}

// d/dx [coth(x) - 1/x] = 1/x^2 - 1/sinh(x)^2, stable near 0.
inline double coth_m1x_prime(double x) {
    if (std::abs(x) < 0.05) {
        double x2 = x * x;
        return 1.0 / 3 + x2 * (-1.0 / 15 + x2 * (2.0 / 189 - 7.0 * x2 / 675.0 / 10.0));
    }
    double s = std::sinh(x);
    return 1.0 / (x * x) - 1.0 / (s * s);
}

} // namespace detail

// A Sturm-Liouville function A on (0, inf): A > 0, increasing, A'/A
// decreasing, A(x) = x^alpha0 * a(x) with a(0) > 0.
struct SturmLiouvilleModel {
    Family family = Family::naimark;
    double alpha0 = 2.0; // leading power of A at the origin
    double rho = 1.0;    // (1/2) lim A'(x)/A(x)
    double x_regular = 1e-3;
    std::string label = "naimark";

    // jacobi(alpha, beta) parameters; valid when family == jacobi
    double jac_alpha = 0.0, jac_beta = 0.0;
    // A expression; valid when family == custom
    expr::NodePtr custom_A;

    double A(double x) const {
        switch (family) {
            case Family::bessel_kingman: return std::pow(x, alpha0);
            case Family::naimark: {
                double s = std::sinh(x);
                return s * s;
            }
            case Family::jacobi:
                return std::pow(2.0 * std::sinh(x), 2.0 * jac_alpha + 1.0) *
                       std::pow(2.0 * std::cosh(x), 2.0 * jac_beta + 1.0);
            case Family::custom: return custom_A->eval(x);
        }
        return 0.0;
    }

    double A_prime(double x) const {
        switch (family) {
            case Family::bessel_kingman: return alpha0 * std::pow(x, alpha0 - 1.0);
            case Family::naimark: return std::sinh(2.0 * x);
            case Family::jacobi: return A(x) * log_deriv(x);
            case Family::custom: return A(x) * log_deriv(x);
        }
        return 0.0;
    }

    // A'/A, always evaluated as alpha0/x + beta(x): beta is smooth at 0 and,
    // for custom models, differentiated in log space, which is exact on the
    // exponential envelope and keeps residual ladders monotone.
    double log_deriv(double x) const {
        if (x <= 0.0) throw domain_error("log_deriv: x must be positive");
        return alpha0 / x + beta(x);
    }

    // beta(x) = A'/A - alpha0/x, the regular part of the log-derivative.
    double beta(double x) const {
        switch (family) {
            case Family::bessel_kingman: return 0.0;
            case Family::naimark: return 2.0 * detail::coth_m1x(x);
            case Family::jacobi:
                return (2.0 * jac_alpha + 1.0) * detail::coth_m1x(x) +
                       (2.0 * jac_beta + 1.0) * std::tanh(x);
            case Family::custom: {
                // d/dx log(A(x) x^-alpha0) by central differences; the
                // quotient is smooth at 0, so an absolute step ~ x/2 is safe.
                double s = std::min(0.5 * x, 1e-4 * std::max(std::abs(x), 1.0));
                auto g = [&](double t) { return std::log(custom_A->eval(t)) - alpha0 * std::log(t); };
                return (g(x + s) - g(x - s)) / (2.0 * s);
            }
        }
        return 0.0;
    }

    double beta_prime(double x) const {
        switch (family) {
            case Family::bessel_kingman: return 0.0;
            case Family::naimark: return 2.0 * detail::coth_m1x_prime(x);
            case Family::jacobi: {
                double c = std::cosh(x);
                return (2.0 * jac_alpha + 1.0) * detail::coth_m1x_prime(x) +
                       (2.0 * jac_beta + 1.0) / (c * c);
            }
            case Family::custom: {
                // central differences, relative step 1e-4
                double s = 1e-4 * std::max(std::abs(x), 1.0);
                s = std::min(s, 0.5 * x);
                return (beta(x + s) - beta(x - s)) / (2.0 * s);
            }
        }
        return 0.0;
    }

    // beta_inf(x) = A'/A - 2 rho, the regular part at infinity.
    double beta_inf(double x) const { return log_deriv(x) - 2.0 * rho; }

    double beta_inf_prime(double x) const {
        switch (family) {
            case Family::bessel_kingman: return -alpha0 / (x * x);
            case Family::naimark: {
                double s = std::sinh(x);
                return -2.0 / (s * s);
            }
            case Family::jacobi: {
                double s = std::sinh(x), c = std::cosh(x);
                return -(2.0 * jac_alpha + 1.0) / (s * s) + (2.0 * jac_beta + 1.0) / (c * c);
            }
            case Family::custom: return beta_prime(x) - alpha0 / (x * x);
        }
        return 0.0;
    }
};

// ---------------------------------------------------------------------------
// Factories
// ---------------------------------------------------------------------------

inline SturmLiouvilleModel make_naimark() {
    SturmLiouvilleModel m;
    m.family = Family::naimark;
    m.alpha0 = 2.0;
    m.rho = 1.0;
    m.label = "naimark";
    return m;
}

inline SturmLiouvilleModel make_bessel_kingman(double alpha0) {
    if (!(alpha0 > 0.0)) throw domain_error("bessel-kingman requires alpha0 > 0");
    SturmLiouvilleModel m;
    m.family = Family::bessel_kingman;
    m.alpha0 = alpha0;
    m.rho = 0.0;
    std::ostringstream os;
    os << "bessel-kingman:" << alpha0;
    m.label = os.str();
    return m;
}

inline SturmLiouvilleModel make_jacobi(double alpha, double beta) {
    if (!(alpha > -0.5) || !(alpha >= beta) || !(beta >= -0.5))
        throw domain_error("jacobi requires alpha >= beta >= -1/2 and alpha > -1/2");
    SturmLiouvilleModel m;
    m.family = Family::jacobi;
    m.jac_alpha = alpha;
    m.jac_beta = beta;
    m.alpha0 = 2.0 * alpha + 1.0;
    m.rho = alpha + beta + 1.0;
    std::ostringstream os;
    os << "jacobi:" << alpha << "," << beta;
    m.label = os.str();
    return m;
}

// rho for a model whose log-derivative limit is not known in closed form:
// evaluate (1/2) A'/A at doubling arguments, require the residual ladder to
// shrink, and accelerate the tail geometrically.
inline double index_rho_numeric(const SturmLiouvilleModel& m) {
    std::vector<double> r;
    for (double x = 8.0; x <= 512.0; x *= 2.0) {
        double v = 0.5 * m.log_deriv(x);
        if (!std::isfinite(v)) break; // A overflowed; keep the finite rungs
        r.push_back(v);
        if (r.size() >= 2 && std::abs(r[r.size() - 1] - r[r.size() - 2]) < 1e-12) break;
    }
    if (r.size() < 3) {
        if (r.size() == 2 && std::abs(r[1] - r[0]) < 1e-10) return std::abs(r[1]) < 1e-6 ? 0.0 : r[1];
        throw numeric_error("index_rho: log-derivative not evaluable over a doubling ladder");
    }
    for (std::size_t i = 2; i < r.size(); ++i) {
        double d1 = std::abs(r[i] - r[i - 1]), d0 = std::abs(r[i - 1] - r[i - 2]);
        if (d1 > d0 * (1.0 + 1e-6) + 1e-12)
            throw numeric_error("index_rho: residuals do not shrink along the doubling ladder");
    }
    // Aitken tail: r_k ~ L + c q^k
    double rk = r[r.size() - 1], rk1 = r[r.size() - 2], rk2 = r[r.size() - 3];
    double d1 = rk - rk1, d0 = rk1 - rk2;
    double L = rk;
    if (std::abs(d0) > 0.0) {
        double q = d1 / d0;
        if (std::abs(q) < 0.9) L = rk + d1 * q / (1.0 - q);
    }
    return std::abs(L) < 1e-6 ? 0.0 : L;
}

inline SturmLiouvilleModel make_custom(const std::string& A_expression, double alpha0,
                                       std::string label = "custom") {
    if (!(alpha0 > 0.0)) throw domain_error("custom model requires alpha0 > 0");
    SturmLiouvilleModel m;
    m.family = Family::custom;
    m.custom_A = expr::parse(A_expression);
    m.alpha0 = alpha0;
    m.label = std::move(label);
    m.rho = index_rho_numeric(m);
    return m;
}

inline SturmLiouvilleModel make_bounded_demo() {
    auto m = make_custom("(x/(1+x))^2", 2.0, "bounded-demo");
    return m;
}

// rho by family; the closed-form families short-circuit the ladder.
inline double index_rho(const SturmLiouvilleModel& m) {
    switch (m.family) {
        case Family::bessel_kingman: return 0.0;
        case Family::naimark: return 1.0;
        case Family::jacobi: return m.jac_alpha + m.jac_beta + 1.0;
        case Family::custom: return index_rho_numeric(m);
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Transmutation data
// ---------------------------------------------------------------------------

// The two conjugations of L = -d^2 - (A'/A) d used by the kernel module:
// at the origin (relative to x^alpha0) and at infinity (relative to e^{2 rho x}).
struct TransmutationData {
    std::function<double(double)> beta;      // A'/A - alpha0/x
    std::function<double(double)> B;         // exp((1/2) int_0^x beta)
    std::function<double(double)> q;         // beta'/2 + beta^2/4 + beta alpha0/(2x)
    std::function<double(double)> beta_inf;  // A'/A - 2 rho
    std::function<double(double)> B_inf;     // exp((1/2) int_1^x beta_inf)
    std::function<double(double)> q_inf;     // beta_inf'/2 + beta_inf^2/4 + beta_inf rho
};

inline TransmutationData transmutation(const SturmLiouvilleModel& m) {
    TransmutationData t;
    t.beta = [m](double x) { return m.beta(x); };
    t.B = [m](double x) {
        if (x == 0.0) return 1.0;
        double I = adaptive_simpson([&m](double s) { return m.beta(s); }, 0.0, x, 1e-10);
        return std::exp(0.5 * I);
    };
    t.q = [m](double x) {
        double b = m.beta(x);
        return 0.5 * m.beta_prime(x) + 0.25 * b * b + b * m.alpha0 / (2.0 * x);
    };
    t.beta_inf = [m](double x) { return m.beta_inf(x); };
    t.B_inf = [m](double x) {
        double I = adaptive_simpson([&m](double s) { return m.beta_inf(s); }, 1.0, x, 1e-10);
        return std::exp(0.5 * I);
    };
    t.q_inf = [m](double x) {
        double b = m.beta_inf(x);
        return 0.5 * m.beta_inf_prime(x) + 0.25 * b * b + b * m.rho;
    };
    return t;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class GrowthClass { sub_exponential, exponential_normalizable, bounded, indeterminate };

inline std::string to_string(GrowthClass g) {
    switch (g) {
        case GrowthClass::sub_exponential: return "sub-exponential";
        case GrowthClass::exponential_normalizable: return "exponential-normalizable";
        case GrowthClass::bounded: return "bounded-A";
        case GrowthClass::indeterminate: return "indeterminate";
    }
    return "?";
}

struct CheckResult {
    std::string name;
    bool passed;
    std::string detail;
};

struct ModelReport {
    std::vector<CheckResult> checks;
    GrowthClass growth = GrowthClass::indeterminate;
    double rho = 0.0;
    double alpha0 = 0.0;
    // lim A e^{-2 rho x} (exponential-normalizable) or sup A (bounded); NaN otherwise
    double haar_scale = std::numeric_limits<double>::quiet_NaN();
    bool ok = false;
};

// Checks the Sturm-Liouville conditions on a grid and classifies the growth
// of A. rho_tol bounds |(1/2)A'/A(x_max) - rho| for the consistency check.
inline ModelReport validate_model(const SturmLiouvilleModel& m, double rho_tol = 0.05) {
    ModelReport rep;
    rep.rho = m.rho;
    rep.alpha0 = m.alpha0;
    auto add = [&rep](const std::string& name, bool ok, std::string detail) {
        rep.checks.push_back({name, ok, std::move(detail)});
    };

    // probe grid: logarithmic near 0, linear out to 40
    std::vector<double> xs;
    for (double x = 1e-4; x < 0.1; x *= 2.0) xs.push_back(x);
    for (double x = 0.1; x <= 40.0; x += 0.1) xs.push_back(x);

    bool positive = true, increasing = true, ld_decreasing = true, smooth = true;
    double prevA = 0.0, prevLd = std::numeric_limits<double>::infinity();
    std::string where;
    for (double x : xs) {
        double a = m.A(x), ld = m.log_deriv(x);
        if (!(a > 0.0) || !std::isfinite(a)) {
            positive = false;
            where = std::to_string(x);
            break;
        }
        if (a < prevA * (1.0 - 1e-12)) increasing = false;
        if (ld > prevLd * (1.0 + 1e-9) + 1e-12) ld_decreasing = false;
        if (!std::isfinite(ld) || !std::isfinite(m.beta_prime(std::max(x, 1e-3)))) smooth = false;
        prevA = a;
        prevLd = ld;
    }
    add("A positive", positive, positive ? "A > 0 on the probe grid" : "A <= 0 near x = " + where);
    add("A increasing", increasing, "A' >= 0 on the probe grid");
    add("log-derivative decreasing", ld_decreasing, "A'/A non-increasing on the probe grid");
    add("C2 regular", smooth, "beta and beta' finite on the probe grid");

    // leading power: a(x) = A(x) x^-alpha0 must stabilize to a positive value
    double a3 = m.A(1e-3) * std::pow(1e-3, -m.alpha0);
    double a4 = m.A(1e-4) * std::pow(1e-4, -m.alpha0);
    double a5 = m.A(1e-5) * std::pow(1e-5, -m.alpha0);
    bool lead = a5 > 0.0 && std::isfinite(a5) && std::abs(a4 / a5 - 1.0) < 0.05 &&
                std::abs(a4 / a5 - 1.0) <= std::abs(a3 / a4 - 1.0) + 1e-9;
    {
        std::ostringstream os;
        os << "A(x) x^-alpha0 -> " << a5 << " at x = 1e-5";
        add("leading power alpha0", lead, os.str());
    }

    // rho consistency at the far end of the grid
    double r_half = 0.5 * m.log_deriv(20.0), r_full = 0.5 * m.log_deriv(40.0);
    bool rho_ok = std::abs(r_full - m.rho) <= rho_tol &&
                  std::abs(r_full - m.rho) <= std::abs(r_half - m.rho) + 1e-12;
    {
        std::ostringstream os;
        os << "(1/2)A'/A(40) = " << r_full << " vs rho = " << m.rho;
        add("rho consistency", rho_ok, os.str());
    }

    // growth classification
    if (m.rho > 1e-6) {
        double s20 = m.A(20.0) * std::exp(-2.0 * m.rho * 20.0);
        double s40 = m.A(40.0) * std::exp(-2.0 * m.rho * 40.0);
        if (std::isfinite(s40) && s40 > 0.0 && std::abs(s40 / s20 - 1.0) < 1e-2) {
            rep.growth = GrowthClass::exponential_normalizable;
            rep.haar_scale = s40;
            std::ostringstream os;
            os << "A e^{-2 rho x} -> " << s40;
            add("exponential normalization", true, os.str());
        } else {
            rep.growth = GrowthClass::indeterminate;
            add("exponential normalization", false, "A e^{-2 rho x} does not stabilize by x = 40");
        }
    } else {
        // rho = 0: bounded iff x A'/A -> 0 (integrable log-derivative tail)
        double tail = 40.0 * m.log_deriv(40.0);
        if (tail < 0.5) {
            rep.growth = GrowthClass::bounded;
            // Aitken estimate of sup A from A(20), A(40), A(80)
            double A0 = m.A(20.0), A1 = m.A(40.0), A2 = m.A(80.0);
            double d1 = A2 - A1, d0 = A1 - A0, q = d0 != 0.0 ? d1 / d0 : 0.0;
            rep.haar_scale = (std::abs(q) < 0.9) ? A2 + d1 * q / (1.0 - q) : A2;
            std::ostringstream os;
            os << "x A'/A(40) = " << tail << ", sup A ~ " << rep.haar_scale;
            add("bounded A", true, os.str());
        } else {
            rep.growth = GrowthClass::sub_exponential;
            std::ostringstream os;
            os << "x A'/A(40) = " << tail << " (A unbounded, rho = 0)";
            add("sub-exponential growth", true, os.str());
        }
    }

    rep.ok = true;
    for (const auto& c : rep.checks) rep.ok = rep.ok && c.passed;
    return rep;
}

// ---------------------------------------------------------------------------
// Model files and aliases
// ---------------------------------------------------------------------------

// Key/value model description:
//   family = naimark | bessel-kingman | jacobi | custom
//   alpha, beta        (jacobi)
//   alpha0             (bessel-kingman, custom)
//   A = <expression>   (custom)
//   rho, x_regular, label   (optional overrides)
inline SturmLiouvilleModel parse_model_text(std::istream& in, const std::string& origin) {
    std::map<std::string, std::string> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r\n") != std::string::npos)
                throw parse_error(origin + ":" + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r\n");
            auto e = s.find_last_not_of(" \t\r\n");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw parse_error(origin + ":" + std::to_string(lineno) + ": empty key or value");
        if (kv.count(key)) throw parse_error(origin + ": duplicate key '" + key + "'");
        kv[key] = val;
    }
    auto num = [&](const std::string& key) {
        try {
            std::size_t used = 0;
            double v = std::stod(kv.at(key), &used);
            if (used != kv.at(key).size()) throw std::invalid_argument(key);
            return v;
        } catch (const std::exception&) {
            throw parse_error(origin + ": bad numeric value for '" + key + "'");
        }
    };
    if (!kv.count("family")) throw parse_error(origin + ": missing 'family'");
    const std::string fam = kv["family"];
    SturmLiouvilleModel m;
    if (fam == "naimark") {
        m = make_naimark();
    } else if (fam == "bessel-kingman") {
        if (!kv.count("alpha0")) throw parse_error(origin + ": bessel-kingman needs 'alpha0'");
        m = make_bessel_kingman(num("alpha0"));
    } else if (fam == "jacobi") {
        if (!kv.count("alpha") || !kv.count("beta"))
            throw parse_error(origin + ": jacobi needs 'alpha' and 'beta'");
        m = make_jacobi(num("alpha"), num("beta"));
    } else if (fam == "custom") {
        if (!kv.count("A") || !kv.count("alpha0"))
            throw parse_error(origin + ": custom needs 'A' and 'alpha0'");
        std::string label = kv.count("label") ? kv["label"] : "custom";
        if (kv.count("rho")) {
            // declared rho: skip the numeric ladder
            m.family = Family::custom;
            m.custom_A = expr::parse(kv["A"]);
            m.alpha0 = num("alpha0");
            m.rho = num("rho");
            m.label = label;
        } else {
            m = make_custom(kv["A"], num("alpha0"), label);
        }
    } else {
        throw parse_error(origin + ": unknown family '" + fam + "'");
    }
    if (kv.count("x_regular")) m.x_regular = num("x_regular");
    if (kv.count("label")) m.label = kv["label"];
    if (!(m.x_regular > 0.0)) throw parse_error(origin + ": x_regular must be positive");
    return m;
}

inline SturmLiouvilleModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error("cannot open model file '" + path + "'");
    return parse_model_text(in, path);
}

// Builtin alias or a path to a model file.
inline SturmLiouvilleModel resolve_model(const std::string& spec) {
    if (spec == "naimark") return make_naimark();
    if (spec == "bounded-demo") return make_bounded_demo();
    auto colon = spec.find(':');
    if (colon != std::string::npos) {
        std::string head = spec.substr(0, colon), args = spec.substr(colon + 1);
        try {
            if (head == "bessel-kingman") return make_bessel_kingman(std::stod(args));
            if (head == "jacobi") {
                auto comma = args.find(',');
                if (comma == std::string::npos)
                    throw parse_error("jacobi alias needs two parameters: jacobi:<alpha>,<beta>");
                return make_jacobi(std::stod(args.substr(0, comma)),
                                   std::stod(args.substr(comma + 1)));
            }
        } catch (const std::invalid_argument&) {
            throw parse_error("bad parameter in model alias '" + spec + "'");
        }
    }
    return load_model_file(spec);
}

} // namespace hyperconv
