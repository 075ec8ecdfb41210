#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace weu {

// Dense accumulator that remembers which coordinates were touched, so a
// per-example gradient over a large parameter vector costs O(touched).
class SparseGradient {
 public:
  SparseGradient() = default;
  explicit SparseGradient(std::size_t n) : acc_(n, 0.0), mark_(n, 0) {}

  void resize(std::size_t n) {
    acc_.assign(n, 0.0);
    mark_.assign(n, 0);
    touched_.clear();
  }

  // Marks i as touched even when v == 0.
  void add(std::size_t i, double v) {
    if (!mark_[i]) {
      mark_[i] = 1;
      touched_.push_back(i);
    }
    acc_[i] += v;
  }

  double operator[](std::size_t i) const { return acc_[i]; }
  bool touched(std::size_t i) const { return mark_[i] != 0; }
  std::span<const std::size_t> touched() const noexcept { return touched_; }
  std::size_t dimension() const noexcept { return acc_.size(); }

  void clear() {
    for (auto i : touched_) {
      acc_[i] = 0.0;
      mark_[i] = 0;
    }
    touched_.clear();
  }

 private:
  std::vector<double> acc_;
  std::vector<std::uint8_t> mark_;
  std::vector<std::size_t> touched_;
};

// Gradient ascent with classical momentum on the touched coordinates only:
//   v <- mu v + g;  x <- x + lr v
struct MomentumAscent {
  double learning_rate = 0.01;
  double momentum = 0.0;
  std::vector<double> velocity;

  void step(std::vector<double>& x, const SparseGradient& g) {
    if (velocity.size() != x.size()) velocity.assign(x.size(), 0.0);
    for (auto i : g.touched()) {
      velocity[i] = momentum * velocity[i] + g[i];
      x[i] += learning_rate * velocity[i];
    }
  }
};

}  // namespace weu
