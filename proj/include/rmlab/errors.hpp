#pragma once

#include <stdexcept>
#include <string>

namespace rmlab {

/// Power iteration hit its iteration cap before meeting the residual test.
class NoConvergence : public std::runtime_error {
  public:
    NoConvergence(int iterations, const std::string& what)
        : std::runtime_error(what), iterations_(iterations) {}
    int iterations() const noexcept { return iterations_; }

  private:
    int iterations_;
};

/// Row-sum total too close to zero for the ratio estimator.
class DegenerateDenominator : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Matrix dimension above the configured dense-solver limit.
class SizeExceeded : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class EmptyInput : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class NonPositiveInput : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class BadRange : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Command-line misuse; the CLI maps this to exit code 1.
class UsageError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// File read/write failure; the CLI maps this to exit code 3.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

}  // namespace rmlab
