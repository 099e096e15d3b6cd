#pragma once

#include <stdexcept>
#include <string>

namespace hyperconv {

// Base for everything thrown by the library.
struct error : std::runtime_error {
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed model files, aliases, or expressions.
struct parse_error : error {
    explicit parse_error(const std::string& msg) : error(msg) {}
};

// Arguments outside an operation's contract (x < 0, bad tolerances, ...).
struct domain_error : error {
    explicit domain_error(const std::string& msg) : error(msg) {}
};

// Operation not defined for the model's growth class
// (e.g. nu_infty on a model with rho = 0).
struct regime_error : error {
    explicit regime_error(const std::string& msg) : error(msg) {}
};

// Numerical failures: resolution too coarse, window exceeded, stability
// bound violated, ill-conditioned fit, route disagreement, non-convergence.
struct numeric_error : error {
    explicit numeric_error(const std::string& msg) : error(msg) {}
};

} // namespace hyperconv
