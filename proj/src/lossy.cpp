#include "bratteli/lossy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bratteli {

namespace {
// Guard against float dust around mass and level comparisons.
constexpr double kMassEps = 1e-12;
}  // namespace

std::int64_t min_covering_size(const Pmf& p, double delta) {
  if (!(delta > 0.0 && delta < 1.0))
    throw ValidationError("min_covering_size: delta must lie in (0,1)");
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
  const double target = 1.0 - delta;
  double mass = 0.0;
  std::int64_t count = 0;
  for (std::size_t i : order) {
    if (mass >= target - kMassEps) break;
    mass += p[i];
    ++count;
  }
  if (mass < target - kMassEps)
    throw ValidationError("min_covering_size: probabilities sum below 1 - delta");
  return count;
}

StepCdf StepCdf::from_point_masses(std::vector<std::pair<double, double>> jumps) {
  if (jumps.empty()) throw ValidationError("StepCdf: no jumps");
  std::sort(jumps.begin(), jumps.end());
  StepCdf cdf;
  double cum = 0.0;
  for (const auto& [x, mass] : jumps) {
    if (mass <= 0.0) throw ValidationError("StepCdf: nonpositive mass");
    cum += mass;
    if (!cdf.jumps_.empty() && cdf.jumps_.back().first == x)
      cdf.jumps_.back().second = cum;  // merge coincident positions
    else
      cdf.jumps_.emplace_back(x, cum);
  }
  if (std::fabs(cum - 1.0) > 1e-9)
    throw ValidationError("StepCdf: masses sum to " + std::to_string(cum));
  return cdf;
}

StepCdf StepCdf::from_samples(std::vector<double> samples) {
  if (samples.empty()) throw ValidationError("StepCdf: no samples");
  std::sort(samples.begin(), samples.end());
  const double mass = 1.0 / static_cast<double>(samples.size());
  std::vector<std::pair<double, double>> jumps;
  for (double x : samples) {
    if (!jumps.empty() && jumps.back().first == x)
      jumps.back().second += mass;
    else
      jumps.emplace_back(x, mass);
  }
  return from_point_masses(std::move(jumps));
}

double StepCdf::value(double x) const {
  double cum = 0.0;
  for (const auto& [pos, c] : jumps_) {
    if (pos > x) break;
    cum = c;
  }
  return cum;
}

double StepCdf::r_plus(double delta) const {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("r_plus: delta outside (0,1)");
  const double target = 1.0 - delta;
  for (const auto& [pos, cum] : jumps_)
    if (cum > target + kMassEps) return pos;
  return jumps_.back().first;  // total mass 1 > 1-delta up to float dust
}

double StepCdf::r_minus(double delta) const {
  if (!(delta > 0.0 && delta < 1.0)) throw ValidationError("r_minus: delta outside (0,1)");
  const double target = 1.0 - delta;
  for (const auto& [pos, cum] : jumps_)
    if (cum >= target - kMassEps) return pos;
  return jumps_.back().first;
}

StepCdf f_mu(const MixtureSpec& spec) {
  spec.validate();
  std::vector<std::pair<double, double>> jumps;
  for (const auto& c : spec.components) {
    const auto rate = c.source->known_entropy_rate();
    if (!rate)
      throw UnknownRateError("f_mu: component has no known entropy rate");
    jumps.emplace_back(*rate, c.weight);
  }
  return StepCdf::from_point_masses(std::move(jumps));
}

std::vector<double> lossy_rate_trace(const Source& s, double delta, int up_to) {
  if (!s.has_tables())
    throw CapExceededError("lossy_rate_trace: needs an explicit-table source");
  if (up_to > s.max_level())
    throw CapExceededError("lossy_rate_trace: level beyond the source tables");
  std::vector<double> out;
  for (int n = 0; n <= up_to; ++n) {
    const auto m = min_covering_size(s.level_pmf(n), delta);
    out.push_back(std::pow(static_cast<double>(s.beta()), -n) *
                  std::log2(static_cast<double>(m)));
  }
  return out;
}

}  // namespace bratteli
