#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace mfstop {

/// Thrown for malformed input (JSON shape, unknown names, bad numbers).
class InputError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Thrown when a structural invariant fails. Carries the individual findings.
class ValidationError : public std::runtime_error {
  public:
    ValidationError(const std::string& what, std::vector<std::string> issues)
        : std::runtime_error(what), issues_(std::move(issues)) {}

    const std::vector<std::string>& issues() const noexcept { return issues_; }

  private:
    std::vector<std::string> issues_;
};

/// Numerical failure inside a solver (e.g. bracket expansion gave up).
class SolverError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace mfstop
