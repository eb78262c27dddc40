#pragma once

// One-sided Fourier coefficient arithmetic.
//
// A function on the circle with f^(n) = 0 for n < 0 is stored as the vector
// f^(0..M). Products of such functions only couple lower indices into higher
// ones, so every entry n <= M of a truncated product is exact.

#include <complex>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace halfline {

using cplx = std::complex<double>;
using Coeffs = std::vector<cplx>;

enum class DispersionKind { Schrodinger, AiryType };

std::string to_string(DispersionKind kind);
DispersionKind dispersion_from_string(const std::string& name);

/// Which variant of the equation is being solved:
///   d_t u - i D u = (sum_l lambda_l u^l) d_x u
/// with D the dispersion multiplier. The l = 0 entry is permitted and gives
/// the linear transport term lambda_0 d_x u.
struct EquationSpec {
  double alpha = 2.0;
  DispersionKind dispersion = DispersionKind::Schrodinger;
  std::map<int, cplx> nonlin;

  static EquationSpec pure_power(double alpha, int k,
                                 DispersionKind kind = DispersionKind::Schrodinger);

  void validate() const;

  cplx coeff(int l) const;
  /// Largest l with a nonzero coefficient.
  int max_degree() const;
  /// Returns k if the nonlinearity is exactly u^k d_x u, otherwise -1.
  int pure_power_degree() const;

  /// Dispersion symbol mu(n). Both kinds coincide for n >= 0.
  double symbol(long long n) const;

  /// sum_l lambda_l m0^l: the transport speed a constant mean m0 induces.
  cplx transport_rate(cplx m0) const;
};

/// Truncated one-sided coefficient vector at a time stamp.
class SpectralState {
 public:
  SpectralState() = default;
  explicit SpectralState(Coeffs coeffs, double time = 0.0);
  static SpectralState zeros(std::size_t truncation, double time = 0.0);

  std::size_t truncation() const noexcept { return coeffs_.size() - 1; }
  double time() const noexcept { return time_; }
  const Coeffs& coeffs() const noexcept { return coeffs_; }
  cplx operator[](std::size_t n) const { return coeffs_[n]; }

 private:
  Coeffs coeffs_{0.0, 0.0};
  double time_ = 0.0;
};

Coeffs convolve(std::span<const cplx> a, std::span<const cplx> b);
Coeffs power(std::span<const cplx> a, unsigned j);

double bracket(double n);  // <n> = sqrt(1 + n^2)
double sobolev_norm(std::span<const cplx> c, double s);
double sobolev_norm(const SpectralState& u, double s);

Coeffs derivative_coeffs(std::span<const cplx> c);
SpectralState dispersion_apply(const SpectralState& u, const EquationSpec& spec, double t);

/// Value at x = 0, the plain coefficient sum.
cplx point_value(std::span<const cplx> c);

/// First index with a nonzero entry, or size() if none.
std::size_t min_support(std::span<const cplx> c);

nlohmann::json to_json(const SpectralState& u);
SpectralState state_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EquationSpec& spec);
EquationSpec spec_from_json(const nlohmann::json& j);

}  // namespace halfline
