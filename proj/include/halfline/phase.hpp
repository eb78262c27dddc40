#pragma once

// Resonance phase  Phi(n_1..n_m) = -(sum n_l)^alpha + sum n_l^alpha  and its
// lower bound  |Phi| >= (alpha-1) * max^(alpha-1) * second_max.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

namespace halfline {

using BigInt = boost::multiprecision::cpp_int;

/// Integer-exponent phase in 128-bit arithmetic; nullopt on overflow.
std::optional<__int128> phase_i128(unsigned alpha, std::span<const std::uint64_t> indices);
/// Integer-exponent phase in arbitrary precision.
BigInt phase_exact(unsigned alpha, std::span<const std::uint64_t> indices);

/// Phi as a double. Integer alpha goes through exact integer arithmetic.
double phase(double alpha, std::span<const std::uint64_t> indices);
double phase_lower_bound(double alpha, std::span<const std::uint64_t> indices);

struct PhaseCertificate {
  bool pass = true;
  std::vector<std::uint64_t> counterexample;  // sorted non-increasing
  double alpha = 0.0;
  int k = 0;
  std::uint64_t cap = 0;
  std::uint64_t sorted_tuples = 0;  // tuples actually evaluated
  double ordered_tuples = 0.0;      // cap^(k+1), the unpruned search space
};

/// Exhaustive check of the lower bound over all (k+1)-tuples with entries in
/// [1, cap]. Tuples are enumerated sorted non-increasing (Phi is symmetric);
/// the search is partitioned over the leading index across `threads` workers
/// (0 = default worker count).
PhaseCertificate certify_phase_bound(double alpha, int k, std::uint64_t cap, unsigned threads = 0);

nlohmann::json to_json(const PhaseCertificate& cert);

/// All sums of one or more generators that do not exceed cap, ascending.
std::vector<std::size_t> support_semigroup(std::span<const std::size_t> generators, std::size_t cap);

/// Worker count: HALFLINE_DNLS_THREADS if set, else hardware concurrency.
unsigned default_thread_count();

}  // namespace halfline
