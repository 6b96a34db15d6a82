#pragma once

#include <cstdint>
#include <vector>

#include "bratteli/pmf.hpp"
#include "bratteli/source.hpp"

namespace bratteli {

// Smallest number of vertices whose total mass reaches 1 - delta: sort the
// probabilities descending (ties by ordinal) and count the shortest prefix.
std::int64_t min_covering_size(const Pmf& p, double delta);

// Right-continuous step CDF with finitely many jumps.
class StepCdf {
 public:
  // (position, mass) pairs; masses must be positive and sum to 1.
  static StepCdf from_point_masses(std::vector<std::pair<double, double>> jumps);
  static StepCdf from_samples(std::vector<double> samples);

  double value(double x) const;  // F(x)
  const std::vector<std::pair<double, double>>& jumps() const { return jumps_; }

  // inf{x : F(x) > 1-delta} and sup{x : F(x) < 1-delta}; the pair brackets
  // the achievable fixed-length rates.
  double r_plus(double delta) const;
  double r_minus(double delta) const;

 private:
  std::vector<std::pair<double, double>> jumps_;  // position -> cumulative mass
};

// Entropy-rate CDF of a finite mixture: point masses of the component
// weights at the component rates. Components must expose a known rate
// (UnknownRateError otherwise).
StepCdf f_mu(const MixtureSpec& spec);

// beta^{-n} log2 M_n(delta, mu) for n = 0..up_to (explicit-table sources).
std::vector<double> lossy_rate_trace(const Source& s, double delta, int up_to);

}  // namespace bratteli
