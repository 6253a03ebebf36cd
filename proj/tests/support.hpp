#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "rvlab/random.hpp"
#include "rvlab/rv_core.hpp"

namespace rvlab::testing {

// Replays a fixed list of uniforms and throws once it runs out.
class ScriptedSource : public RandomSource {
 public:
  explicit ScriptedSource(std::vector<double> values) : values_(std::move(values)) {}
  double uniform() override {
    if (next_ >= values_.size()) throw std::out_of_range("scripted source exhausted");
    return values_[next_++];
  }
  using RandomSource::uniform;
  std::size_t consumed() const { return next_; }

 private:
  std::vector<double> values_;
  std::size_t next_ = 0;
};

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline Matrix scalar(double x) { return Matrix::Constant(1, 1, x); }

}  // namespace rvlab::testing
