#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cavityeo {

// Base error with a stable machine-readable kind tag (used by the CLI to
// build structured error records and pick exit codes).
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

// Invalid inputs: bad flags, malformed parameters, violated preconditions.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message)
        : Error("validation", message) {}
};

// Domain errors: the request was well-formed but the physics degenerates.
class PhysicsError : public Error {
public:
    PhysicsError(std::string kind, const std::string& message)
        : Error(std::move(kind), message) {}
};

class DegenerateResponseError : public PhysicsError {
public:
    explicit DegenerateResponseError(const std::string& message)
        : PhysicsError("degenerate-response", message) {}
};

class DegeneratePolesError : public PhysicsError {
public:
    explicit DegeneratePolesError(const std::string& message)
        : PhysicsError("degenerate-poles", message) {}
};

class NonIntegrableError : public PhysicsError {
public:
    explicit NonIntegrableError(const std::string& message)
        : PhysicsError("non-integrable", message) {}
};

class DivergentSeriesError : public PhysicsError {
public:
    explicit DivergentSeriesError(const std::string& message)
        : PhysicsError("divergent-series", message) {}
};

class StiffnessError : public PhysicsError {
public:
    explicit StiffnessError(const std::string& message)
        : PhysicsError("stiffness", message) {}
};

class QuadratureError : public PhysicsError {
public:
    explicit QuadratureError(const std::string& message)
        : PhysicsError("quadrature-cutoff", message) {}
};

// Root search failed to bracket the target; carries the sampled values so
// callers (and error messages) can show what was seen.
class BracketError : public PhysicsError {
public:
    BracketError(const std::string& message,
                 std::vector<std::pair<double, double>> samples)
        : PhysicsError("bracket", message), samples_(std::move(samples)) {}
    const std::vector<std::pair<double, double>>& samples() const noexcept {
        return samples_;
    }

private:
    std::vector<std::pair<double, double>> samples_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& message) : Error("io", message) {}
};

}  // namespace cavityeo
