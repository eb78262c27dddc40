#include "halfline/phase.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "halfline/errors.hpp"

namespace halfline {

namespace {

using i128 = __int128;

bool integer_alpha(double alpha, unsigned* out) {
  double ip;
  if (std::modf(alpha, &ip) != 0.0 || ip < 0.0 || ip > 4096.0) return false;
  *out = static_cast<unsigned>(ip);
  return true;
}

void check_indices(std::span<const std::uint64_t> indices) {
  require(!indices.empty(), "phase needs at least one index");
  for (auto n : indices) require(n >= 1, "phase indices must be positive integers");
}

bool mul_checked(i128 a, i128 b, i128* out) { return !__builtin_mul_overflow(a, b, out); }
bool add_checked(i128 a, i128 b, i128* out) { return !__builtin_add_overflow(a, b, out); }

std::optional<i128> ipow(i128 base, unsigned e) {
  i128 r = 1;
  for (unsigned i = 0; i < e; ++i)
    if (!mul_checked(r, base, &r)) return std::nullopt;
  return r;
}

double to_double(i128 v) { return static_cast<double>(static_cast<long double>(v)); }

// Sorted copies: largest first.
std::pair<std::uint64_t, std::uint64_t> top_two(std::span<const std::uint64_t> idx) {
  std::uint64_t a = 0, b = 0;
  for (auto n : idx) {
    if (n > a) {
      b = a;
      a = n;
    } else if (n > b) {
      b = n;
    }
  }
  return {a, b};
}

// Exact test of |Phi| >= bound for integer alpha, falling back to BigInt.
bool bound_holds_exact(unsigned alpha, std::span<const std::uint64_t> idx) {
  const auto [mx, second] = top_two(idx);
  auto phi = phase_i128(alpha, idx);
  std::optional<i128> bound;
  if (alpha >= 1) {
    auto p = ipow(static_cast<i128>(mx), alpha - 1);
    i128 b;
    if (p && mul_checked(*p, static_cast<i128>(alpha - 1), &b) &&
        mul_checked(b, static_cast<i128>(second), &b))
      bound = b;
  }
  if (phi && bound) {
    const i128 mag = *phi < 0 ? -*phi : *phi;
    return mag >= *bound;
  }
  BigInt big_phi = abs(phase_exact(alpha, idx));
  BigInt big_bound = BigInt(alpha - 1) * boost::multiprecision::pow(BigInt(mx), alpha - 1) * BigInt(second);
  return big_phi >= big_bound;
}

bool bound_holds_float(double alpha, std::span<const std::uint64_t> idx) {
  const double phi = std::abs(phase(alpha, idx));
  const double bound = phase_lower_bound(alpha, idx);
  return phi >= bound * (1.0 - 1e-9);
}

}  // namespace

unsigned default_thread_count() {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("HALFLINE_DNLS_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return std::min<unsigned>(static_cast<unsigned>(v), 256u);
  }
  return hw;
}

std::optional<i128> phase_i128(unsigned alpha, std::span<const std::uint64_t> indices) {
  check_indices(indices);
  i128 sum = 0, powsum = 0;
  for (auto n : indices) {
    if (!add_checked(sum, static_cast<i128>(n), &sum)) return std::nullopt;
    auto p = ipow(static_cast<i128>(n), alpha);
    if (!p || !add_checked(powsum, *p, &powsum)) return std::nullopt;
  }
  auto total = ipow(sum, alpha);
  if (!total) return std::nullopt;
  return powsum - *total;
}

BigInt phase_exact(unsigned alpha, std::span<const std::uint64_t> indices) {
  check_indices(indices);
  BigInt sum = 0, powsum = 0;
  for (auto n : indices) {
    sum += n;
    powsum += boost::multiprecision::pow(BigInt(n), alpha);
  }
  return powsum - boost::multiprecision::pow(sum, alpha);
}

double phase(double alpha, std::span<const std::uint64_t> indices) {
  check_indices(indices);
  unsigned ia;
  if (integer_alpha(alpha, &ia)) {
    if (auto v = phase_i128(ia, indices)) return to_double(*v);
    return phase_exact(ia, indices).convert_to<double>();
  }
  double sum = 0.0, powsum = 0.0;
  for (auto n : indices) {
    sum += static_cast<double>(n);
    powsum += std::pow(static_cast<double>(n), alpha);
  }
  return powsum - std::pow(sum, alpha);
}

double phase_lower_bound(double alpha, std::span<const std::uint64_t> indices) {
  check_indices(indices);
  require(alpha >= 1.0, "phase bound requires alpha >= 1");
  const auto [mx, second] = top_two(indices);
  if (alpha == 1.0) return 0.0;
  return (alpha - 1.0) * std::pow(static_cast<double>(mx), alpha - 1.0) * static_cast<double>(second);
}

PhaseCertificate certify_phase_bound(double alpha, int k, std::uint64_t cap, unsigned threads) {
  require(alpha >= 1.0, "certification requires alpha >= 1");
  require(k >= 1, "certification requires k >= 1");
  require(cap >= 1, "index cap must be >= 1");

  PhaseCertificate cert;
  cert.alpha = alpha;
  cert.k = k;
  cert.cap = cap;
  cert.ordered_tuples = std::pow(static_cast<double>(cap), k + 1);

  unsigned ia = 0;
  const bool exact = integer_alpha(alpha, &ia);
  const std::size_t len = static_cast<std::size_t>(k) + 1;

  std::atomic<std::uint64_t> next{1};
  std::atomic<std::uint64_t> evaluated{0};
  std::mutex mu;
  std::optional<std::vector<std::uint64_t>> first_bad;

  auto worker = [&] {
    std::vector<std::uint64_t> t(len);
    std::uint64_t local_count = 0;
    std::optional<std::vector<std::uint64_t>> local_bad;
    for (std::uint64_t lead = next++; lead <= cap; lead = next++) {
      // Lexicographic enumeration of non-increasing tails t[1..k] <= lead.
      t[0] = lead;
      std::fill(t.begin() + 1, t.end(), 1);
      while (true) {
        ++local_count;
        const bool ok = exact ? bound_holds_exact(ia, t) : bound_holds_float(alpha, t);
        if (!ok) {
          if (!local_bad || t < *local_bad) local_bad = t;
          break;
        }
        std::size_t pos = len - 1;
        while (pos >= 1 && t[pos] == t[pos - 1]) --pos;
        if (pos == 0) break;
        ++t[pos];
        for (std::size_t q = pos + 1; q < len; ++q) t[q] = 1;
      }
    }
    evaluated += local_count;
    if (local_bad) {
      std::lock_guard lock(mu);
      if (!first_bad || *local_bad < *first_bad) first_bad = local_bad;
    }
  };

  const unsigned nthreads =
      static_cast<unsigned>(std::min<std::uint64_t>(threads ? threads : default_thread_count(), cap));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < nthreads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  cert.sorted_tuples = evaluated.load();
  if (first_bad) {
    cert.pass = false;
    cert.counterexample = *first_bad;
  }
  return cert;
}

nlohmann::json to_json(const PhaseCertificate& cert) {
  nlohmann::json j = {{"pass", cert.pass},
                      {"alpha", cert.alpha},
                      {"k", cert.k},
                      {"cap", cert.cap},
                      {"sorted_tuples_checked", cert.sorted_tuples},
                      {"ordered_tuples_covered", cert.ordered_tuples}};
  if (!cert.pass) j["counterexample"] = cert.counterexample;
  return j;
}

std::vector<std::size_t> support_semigroup(std::span<const std::size_t> generators, std::size_t cap) {
  std::vector<char> reach(cap + 1, 0);
  std::vector<std::size_t> positive;
  for (auto g : generators) {
    if (g <= cap) reach[g] = 1;
    if (g >= 1 && g <= cap) positive.push_back(g);
  }
  std::sort(positive.begin(), positive.end());
  positive.erase(std::unique(positive.begin(), positive.end()), positive.end());
  for (std::size_t x = 1; x <= cap; ++x) {
    if (reach[x]) continue;
    for (auto g : positive) {
      if (g > x) break;
      if (reach[x - g]) {
        reach[x] = 1;
        break;
      }
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t x = 0; x <= cap; ++x)
    if (reach[x]) out.push_back(x);
  return out;
}

}  // namespace halfline
