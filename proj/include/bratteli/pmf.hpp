#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "bratteli/errors.hpp"

namespace bratteli {

inline constexpr double kPmfTolerance = 1e-9;

// Probability mass function on one level's vertex set, indexed by vertex
// ordinal. Entries are nonnegative and sum to 1 within tolerance.
class Pmf {
 public:
  Pmf(int level, std::vector<double> probs, double tol = kPmfTolerance)
      : level_(level), p_(std::move(probs)) {
    if (p_.empty()) throw ValidationError("Pmf: empty probability vector");
    double sum = 0.0;
    for (double v : p_) {
      if (v < -1e-12 || !std::isfinite(v))
        throw ValidationError("Pmf: negative or non-finite entry");
      sum += v;
    }
    if (std::fabs(sum - 1.0) > tol)
      throw ValidationError("Pmf: probabilities sum to " + std::to_string(sum));
  }

  int level() const { return level_; }
  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> probs() const { return p_; }

 private:
  int level_;
  std::vector<double> p_;
};

// Shannon entropy in bits over the support (0 log 0 = 0).
inline double entropy_bits(std::span<const double> p) {
  double h = 0.0;
  for (double v : p)
    if (v > 0.0) h -= v * std::log2(v);
  return h;
}

inline double entropy_bits(const Pmf& p) { return entropy_bits(p.probs()); }

}  // namespace bratteli
