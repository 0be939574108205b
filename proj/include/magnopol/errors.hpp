#pragma once

#include <stdexcept>
#include <string>

namespace magnopol {

/// Argument outside the mathematical domain of an operation (negative power,
/// non-positive scale, empty input, ...).
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Non-finite values, amplitude overflow, eigen-solver non-convergence.
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Polynomial coefficients whose spread cannot be represented after scaling.
class conditioning_error : public numeric_error {
public:
    using numeric_error::numeric_error;
};

/// A reconstructed solution failed its own residual check. Signals an algebra
/// bug rather than a physical outcome.
class consistency_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Trajectory left the admissible amplitude range.
class divergence_error : public numeric_error {
public:
    divergence_error(const std::string& what, long step)
        : numeric_error(what), step_(step) {}
    [[nodiscard]] long step() const noexcept { return step_; }

private:
    long step_;
};

class fit_error : public numeric_error {
public:
    using numeric_error::numeric_error;
};

/// Config / input validation failure. `path` locates the offending field.
class config_error : public std::invalid_argument {
public:
    config_error(const std::string& path, const std::string& message)
        : std::invalid_argument(path + ": " + message), path_(path) {}
    [[nodiscard]] const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

} // namespace magnopol
