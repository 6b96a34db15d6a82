#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bratteli/rng.hpp"
#include "bratteli/source.hpp"

namespace bratteli {

// Digit string in {0..beta-1}, least significant digit first.
struct AdicAddress {
  int beta = 2;
  std::vector<std::uint8_t> digits;

  std::size_t length() const { return digits.size(); }
  bool all_max() const;   // every digit equals beta-1
  bool all_zero() const;
};

// Expansion of i into n digits (throws RangeError unless 0 <= i < beta^n).
AdicAddress beta_expand(std::uint64_t i, int beta, int n);
// Inverse of beta_expand; throws RangeError if the index overflows 64 bits.
std::uint64_t address_to_index(const AdicAddress& a);

// Adding-machine successor: zero the leading run of (beta-1)s and increment
// the first smaller digit. Throws FinalAddressError on the all-max address.
AdicAddress add_one(AdicAddress a);
// Predecessor; throws FinalAddressError on the all-zero address.
AdicAddress sub_one(AdicAddress a);

// Truncated beta-adic sum; digits carry left to right. Lengths and bases
// must agree (MismatchError).
AdicAddress adic_add(const AdicAddress& a, const AdicAddress& b);

// First position (1-based) whose digit is below beta-1; nullopt when the
// whole truncated address is maxed out.
std::optional<int> first_incomplete_level(const AdicAddress& a);

// Finite path from level 0 to `level`: the address (edge labels, LSB first)
// plus the visited vertex chain. chain[j] is the level-j vertex; the descent
// identity chain[j] = chain[j+1][digits[j]] holds throughout.
struct FinitePath {
  int level = 0;
  AdicAddress address;
  std::vector<Vertex> chain;

  const Vertex& terminal() const { return chain.back(); }
};

// Realizes the path with the given terminal vertex and address by the
// backward descent through the decomposition.
FinitePath path_from_address(const Source& s, int level, Vertex terminal, AdicAddress a);
FinitePath initial_path(const Source& s, int level, Vertex terminal);

// Successor path within the same terminal-vertex fiber (index + 1). Throws
// FinalPathError on the final path. Iterating from the initial path visits
// all beta^level paths of the fiber exactly once.
FinitePath step_path(const Source& s, const FinitePath& p);

// The successor map on truncated infinite paths. Identical action to
// step_path, but failure on the all-max address signals that the truncation
// is too shallow to determine the image (TruncationTooShallowError).
FinitePath vershik_apply(const Source& s, const FinitePath& p);
// Inverse; all-zero addresses need a deeper truncation.
FinitePath vershik_inverse(const Source& s, const FinitePath& p);

// Draws a path under the invariant law: the address digits are IID uniform
// and independent of the terminal vertex, which follows mu_level.
FinitePath sample_path(const Source& s, int level, Rng& rng);

// -beta^{-n} log2 mu_n(X_n); ZeroProbabilityError off the support.
double smb_statistic(const Source& s, const FinitePath& p);

// The pathwise entropy integrand: with N the first incomplete level and
// x = X_N,
//   N = 1:  -(beta-1)^{-1} log2 mu(x)
//   N > 1:  -(beta-1)^{-1} log2 [ mu(x) / prod_i mu(x[i]) ].
// Throws TruncationTooShallowError when N exceeds the truncation.
double h_mu(const Source& s, const FinitePath& p);

// Draws (N, X_N) directly (N geometric, X_N independent of the digits) and
// evaluates h_mu; `level_cap` bounds the rare deep excursions.
double h_mu_sample(const Source& s, Rng& rng, int level_cap = 24);

// Verifies the telescoping identity on the fiber of x at `level`: for every
// starting index i, the h_mu sum over the orbit window of length beta^n - 1
// equals -log2 mu_n(x). Returns the largest absolute residual; `budget`
// bounds the orbit length.
double verify_telescoping(const Source& s, int level, const Vertex& x,
                          std::uint64_t budget = 1u << 20);

}  // namespace bratteli
