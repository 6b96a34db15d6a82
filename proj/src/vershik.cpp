#include "bratteli/vershik.hpp"

#include <algorithm>
#include <cmath>

namespace bratteli {

namespace {

void check_digits(const AdicAddress& a) {
  if (a.beta < 2) throw RangeError("address: beta must be >= 2");
  for (std::uint8_t d : a.digits)
    if (d >= a.beta) throw RangeError("address: digit out of range");
}

}  // namespace

bool AdicAddress::all_max() const {
  return std::all_of(digits.begin(), digits.end(),
                     [this](std::uint8_t d) { return d == beta - 1; });
}

bool AdicAddress::all_zero() const {
  return std::all_of(digits.begin(), digits.end(), [](std::uint8_t d) { return d == 0; });
}

AdicAddress beta_expand(std::uint64_t i, int beta, int n) {
  if (beta < 2) throw RangeError("beta_expand: beta must be >= 2");
  if (n < 1) throw RangeError("beta_expand: length must be >= 1");
  AdicAddress a;
  a.beta = beta;
  a.digits.resize(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    a.digits[static_cast<std::size_t>(j)] =
        static_cast<std::uint8_t>(i % static_cast<std::uint64_t>(beta));
    i /= static_cast<std::uint64_t>(beta);
  }
  if (i != 0) throw RangeError("beta_expand: index does not fit in the digit count");
  return a;
}

std::uint64_t address_to_index(const AdicAddress& a) {
  check_digits(a);
  std::uint64_t value = 0;
  for (std::size_t j = a.digits.size(); j > 0; --j) {
    const auto b = static_cast<std::uint64_t>(a.beta);
    if (value > (~std::uint64_t{0} - a.digits[j - 1]) / b)
      throw RangeError("address_to_index: index overflows 64 bits");
    value = value * b + a.digits[j - 1];
  }
  return value;
}

AdicAddress add_one(AdicAddress a) {
  check_digits(a);
  for (auto& d : a.digits) {
    if (d < a.beta - 1) {
      ++d;
      return a;
    }
    d = 0;
  }
  throw FinalAddressError("add_one: address is the final one at this truncation");
}

AdicAddress sub_one(AdicAddress a) {
  check_digits(a);
  for (auto& d : a.digits) {
    if (d > 0) {
      --d;
      return a;
    }
    d = static_cast<std::uint8_t>(a.beta - 1);
  }
  throw FinalAddressError("sub_one: address is the initial one at this truncation");
}

AdicAddress adic_add(const AdicAddress& a, const AdicAddress& b) {
  check_digits(a);
  check_digits(b);
  if (a.beta != b.beta) throw MismatchError("adic_add: bases differ");
  if (a.digits.size() != b.digits.size()) throw MismatchError("adic_add: lengths differ");
  AdicAddress out;
  out.beta = a.beta;
  out.digits.resize(a.digits.size());
  int carry = 0;
  for (std::size_t j = 0; j < a.digits.size(); ++j) {
    const int sum = a.digits[j] + b.digits[j] + carry;
    out.digits[j] = static_cast<std::uint8_t>(sum % a.beta);
    carry = sum / a.beta;
  }
  return out;
}

std::optional<int> first_incomplete_level(const AdicAddress& a) {
  for (std::size_t j = 0; j < a.digits.size(); ++j)
    if (a.digits[j] < a.beta - 1) return static_cast<int>(j) + 1;
  return std::nullopt;
}

FinitePath path_from_address(const Source& s, int level, Vertex terminal, AdicAddress a) {
  check_digits(a);
  if (static_cast<int>(a.digits.size()) != level)
    throw LevelMismatchError("path_from_address: address length differs from level");
  if (a.beta != s.beta()) throw MismatchError("path_from_address: base differs from diagram");
  FinitePath p;
  p.level = level;
  p.address = std::move(a);
  p.chain.resize(static_cast<std::size_t>(level) + 1);
  p.chain[static_cast<std::size_t>(level)] = std::move(terminal);
  for (int j = level - 1; j >= 0; --j)
    p.chain[static_cast<std::size_t>(j)] =
        s.child(j + 1, p.chain[static_cast<std::size_t>(j + 1)],
                p.address.digits[static_cast<std::size_t>(j)]);
  return p;
}

FinitePath initial_path(const Source& s, int level, Vertex terminal) {
  AdicAddress zero;
  zero.beta = s.beta();
  zero.digits.assign(static_cast<std::size_t>(level), 0);
  return path_from_address(s, level, std::move(terminal), std::move(zero));
}

namespace {

// Rebuilds the chain below `from_level` after an address change; everything
// from `from_level` up is untouched.
void redescend(const Source& s, FinitePath& p, int from_level) {
  for (int j = from_level - 1; j >= 0; --j)
    p.chain[static_cast<std::size_t>(j)] =
        s.child(j + 1, p.chain[static_cast<std::size_t>(j + 1)],
                p.address.digits[static_cast<std::size_t>(j)]);
}

FinitePath successor(const Source& s, const FinitePath& p) {
  const auto n = first_incomplete_level(p.address);
  FinitePath out = p;
  out.address = add_one(out.address);  // digits 0..N-1 changed, rest untouched
  redescend(s, out, *n);
  return out;
}

}  // namespace

FinitePath step_path(const Source& s, const FinitePath& p) {
  if (p.address.all_max())
    throw FinalPathError("step_path: final path of its fiber");
  return successor(s, p);
}

FinitePath vershik_apply(const Source& s, const FinitePath& p) {
  if (p.address.all_max())
    throw TruncationTooShallowError("vershik_apply: successor needs a deeper truncation");
  return successor(s, p);
}

FinitePath vershik_inverse(const Source& s, const FinitePath& p) {
  if (p.address.all_zero())
    throw TruncationTooShallowError("vershik_inverse: predecessor needs a deeper truncation");
  // First nonzero digit: everything below turns into beta-1.
  int n = 0;
  while (p.address.digits[static_cast<std::size_t>(n)] == 0) ++n;
  FinitePath out = p;
  out.address = sub_one(out.address);
  redescend(s, out, n + 1);
  return out;
}

FinitePath sample_path(const Source& s, int level, Rng& rng) {
  AdicAddress a;
  a.beta = s.beta();
  a.digits.resize(static_cast<std::size_t>(level));
  for (auto& d : a.digits) d = static_cast<std::uint8_t>(rng.next_digit(a.beta));
  return path_from_address(s, level, s.sample(level, rng), std::move(a));
}

double smb_statistic(const Source& s, const FinitePath& p) {
  const double l2 = s.log2_prob(p.level, p.terminal());
  if (!std::isfinite(l2))
    throw ZeroProbabilityError("smb_statistic: sampled vertex outside the support");
  return -std::pow(static_cast<double>(s.beta()), -p.level) * l2;
}

namespace {

double h_mu_at(const Source& s, int n, const Vertex& x) {
  const int beta = s.beta();
  const double top = s.log2_prob(n, x);
  if (!std::isfinite(top)) throw ZeroProbabilityError("h_mu: vertex outside the support");
  double value = -top;
  if (n > 1) {
    for (int i = 0; i < beta; ++i) {
      const double part = s.log2_prob(n - 1, s.child(n, x, i));
      if (!std::isfinite(part))
        throw ZeroProbabilityError("h_mu: decomposition part outside the support");
      value += part;
    }
  }
  return value / static_cast<double>(beta - 1);
}

}  // namespace

double h_mu(const Source& s, const FinitePath& p) {
  const auto n = first_incomplete_level(p.address);
  if (!n)
    throw TruncationTooShallowError("h_mu: first incomplete level beyond the truncation");
  return h_mu_at(s, *n, p.chain[static_cast<std::size_t>(*n)]);
}

double h_mu_sample(const Source& s, Rng& rng, int level_cap) {
  const int beta = s.beta();
  const int cap = std::min(level_cap, s.max_level());
  int n = 1;
  while (rng.next_digit(beta) == beta - 1) {
    if (++n > cap)
      throw TruncationTooShallowError("h_mu_sample: geometric level beyond the cap");
  }
  return h_mu_at(s, n, s.sample(n, rng));
}

double verify_telescoping(const Source& s, int level, const Vertex& x,
                          std::uint64_t budget) {
  const int beta = s.beta();
  std::uint64_t fiber = 1;
  for (int i = 0; i < level; ++i) {
    if (fiber > budget / static_cast<std::uint64_t>(beta))
      throw BudgetError("verify_telescoping: fiber larger than the iteration budget");
    fiber *= static_cast<std::uint64_t>(beta);
  }
  const double top = s.log2_prob(level, x);
  if (!std::isfinite(top))
    throw ZeroProbabilityError("verify_telescoping: vertex outside the support");

  // Walk the whole fiber once via the successor map; the summation window of
  // any starting index i covers exactly the orbit positions 0..beta^n-2 (in
  // increasing position order), so all starting points share one sum.
  double acc = 0.0;
  FinitePath p = initial_path(s, level, x);
  for (std::uint64_t i = 0; i + 1 < fiber; ++i) {
    acc += h_mu(s, p);
    p = step_path(s, p);
  }
  return std::fabs(acc - (-top));
}

}  // namespace bratteli
