#pragma once

#include <stdexcept>
#include <string>

namespace carleman {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// weights
class InfeasibleDelta : public Error { using Error::Error; };
class NoFeasibleDelta : public Error { using Error::Error; };
class GridTooCoarse : public Error { using Error::Error; };

// operators
class UnsupportedDimension : public Error { using Error::Error; };
class WavelengthUnresolved : public Error { using Error::Error; };

// resolvent
class SingularSystem : public Error { using Error::Error; };

// verify
class OverflowRisk : public Error { using Error::Error; };

// scaling
class BudgetExceeded : public Error { using Error::Error; };
class DegenerateFit : public Error { using Error::Error; };

/// Precondition violations on caller-supplied values.
class InvalidInput : public Error { using Error::Error; };

/// Configuration file problems; `pointer` is a JSON pointer to the offending key.
class ConfigInvalid : public Error {
public:
    ConfigInvalid(std::string pointer, const std::string& what)
        : Error(pointer.empty() ? what : pointer + ": " + what), pointer_(std::move(pointer)) {}
    const std::string& pointer() const noexcept { return pointer_; }

private:
    std::string pointer_;
};

}  // namespace carleman
