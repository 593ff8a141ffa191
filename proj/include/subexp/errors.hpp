#pragma once

#include <stdexcept>
#include <string>

namespace subexp {

// Base class for all library errors.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid parameters or arguments outside an operation's domain.
class domain_error : public error {
public:
    using error::error;
};

// A numerical procedure (quadrature, root finding, iteration) failed to
// reach its target accuracy.  `achieved` carries the best error estimate.
class numeric_error : public error {
public:
    explicit numeric_error(const std::string& msg, double achieved = -1.0)
        : error(msg), achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

// Model parameters fall in a regime for which no closed-form expansion
// is available (the excluded exponent bands).
class unsupported_regime_error : public error {
public:
    using error::error;
};

// Grid or run configuration is unusable (e.g. grid too short for the
// jump horizon of the fixed-point operator).
class config_error : public error {
public:
    using error::error;
};

// A requested statistical procedure lacks the power to produce a result
// (too few exceedances, empty sample).
class statistical_error : public error {
public:
    using error::error;
};

// A run would exceed a configured compute budget (e.g. the small-jump
// cutoff makes the event rate unaffordable).
class resource_error : public error {
public:
    using error::error;
};

// A cross-validation band failed (used by the validation pipeline).
class validation_error : public error {
public:
    using error::error;
};

}  // namespace subexp
