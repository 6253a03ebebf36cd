#pragma once

#include <stdexcept>
#include <string>

namespace rvlab {

// Sample has no spread above the order statistic used for estimation.
class DegenerateSample : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every importance weight of a spectral sampler vanished.
class ZeroMass : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An empirical moment that must be finite shows signs of divergence.
class HeavyMoment : public std::runtime_error {
 public:
  HeavyMoment(const std::string& what, double tail_index_hat, double exponent)
      : std::runtime_error(what), tail_index_hat_(tail_index_hat), exponent_(exponent) {}
  double tail_index_hat() const { return tail_index_hat_; }
  double exponent() const { return exponent_; }

 private:
  double tail_index_hat_;
  double exponent_;
};

// A documented precondition of an operation does not hold.
class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rvlab
