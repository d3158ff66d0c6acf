#pragma once

#include <stdexcept>
#include <string>

namespace nms {

// Every failure raised by the library derives from Error so callers (the CLI in
// particular) can turn it into a machine-readable record with a stable kind.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& w) : Error("config", w) {}
};
struct CapacityError : Error {
    explicit CapacityError(const std::string& w) : Error("capacity", w) {}
};
struct ParameterError : Error {
    explicit ParameterError(const std::string& w) : Error("parameter", w) {}
};
struct NumericError : Error {
    explicit NumericError(const std::string& w) : Error("numeric", w) {}
};
struct UsageError : Error {
    explicit UsageError(const std::string& w) : Error("usage", w) {}
};

struct IterationLimitError : Error {
    IterationLimitError(const std::string& w, double residual)
        : Error("iteration_limit", w), residual(residual) {}
    double residual;
};

inline void require_fractional(double s) {
    if (!(s > 0.0 && s < 1.0))
        throw ParameterError("fractional parameter s must lie in (0,1), got " + std::to_string(s));
}

} // namespace nms
