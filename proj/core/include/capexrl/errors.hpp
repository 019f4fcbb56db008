#pragma once

#include <stdexcept>
#include <string>

namespace capexrl {

/// Bad or missing configuration. Carries the offending key so the CLI can
/// report it and exit with the user-error code.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error(message), key_(std::move(key)) {}

    explicit ConfigError(const std::string& message)
        : std::runtime_error(message) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// A decision violated the feasibility constraint. Never silently clipped.
class FeasibilityError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Tensor/vector dimension mismatch.
class ShapeError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Non-finite values or diverging optimization.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace capexrl
