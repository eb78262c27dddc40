#include "halfline/spectral.hpp"

#include <cmath>
#include <limits>

#include "halfline/errors.hpp"

namespace halfline {

std::string to_string(DispersionKind kind) {
  return kind == DispersionKind::Schrodinger ? "schrodinger" : "airy";
}

DispersionKind dispersion_from_string(const std::string& name) {
  if (name == "schrodinger" || name == "SCHRODINGER") return DispersionKind::Schrodinger;
  if (name == "airy" || name == "AIRY_TYPE" || name == "airy_type") return DispersionKind::AiryType;
  fail(ErrorCode::InvalidArgument, "unknown dispersion kind '" + name + "'");
}

EquationSpec EquationSpec::pure_power(double alpha, int k, DispersionKind kind) {
  EquationSpec spec;
  spec.alpha = alpha;
  spec.dispersion = kind;
  spec.nonlin[k] = 1.0;
  spec.validate();
  return spec;
}

void EquationSpec::validate() const {
  require(std::isfinite(alpha) && alpha >= 1.0, "alpha must be finite and >= 1");
  bool any = false;
  for (const auto& [l, lam] : nonlin) {
    require(l >= 0, "nonlinearity degrees must be nonnegative");
    require(std::isfinite(lam.real()) && std::isfinite(lam.imag()),
            "nonlinearity coefficients must be finite");
    any = any || lam != cplx{};
  }
  require(any, "at least one nonlinearity coefficient must be nonzero");
}

cplx EquationSpec::coeff(int l) const {
  auto it = nonlin.find(l);
  return it == nonlin.end() ? cplx{} : it->second;
}

int EquationSpec::max_degree() const {
  int d = -1;
  for (const auto& [l, lam] : nonlin)
    if (lam != cplx{}) d = std::max(d, l);
  return d;
}

int EquationSpec::pure_power_degree() const {
  int found = -1;
  for (const auto& [l, lam] : nonlin) {
    if (lam == cplx{}) continue;
    if (found >= 0 || lam != cplx{1.0, 0.0}) return -1;
    found = l;
  }
  return found;
}

namespace {

// n^alpha, exact when alpha is a small integer and the result fits in 53 bits.
double nonneg_power(long long n, double alpha) {
  double ia;
  if (std::modf(alpha, &ia) == 0.0 && ia <= 64.0) {
    double r = 1.0;
    for (int i = 0; i < static_cast<int>(ia); ++i) r *= static_cast<double>(n);
    return r;
  }
  return std::pow(static_cast<double>(n), alpha);
}

}  // namespace

double EquationSpec::symbol(long long n) const {
  // |n|^alpha and n|n|^(alpha-1) are the same number on n >= 0; one-sided
  // states never see the branch where they differ.
  const double mag = nonneg_power(n < 0 ? -n : n, alpha);
  if (n >= 0) return mag;
  return dispersion == DispersionKind::Schrodinger ? mag : -mag;
}

cplx EquationSpec::transport_rate(cplx m0) const {
  cplx rate{};
  for (const auto& [l, lam] : nonlin) {
    cplx term = lam;
    for (int i = 0; i < l; ++i) term *= m0;
    rate += term;
  }
  return rate;
}

SpectralState::SpectralState(Coeffs coeffs, double time) : coeffs_(std::move(coeffs)), time_(time) {
  require(coeffs_.size() >= 2, "a spectral state needs truncation M >= 1");
  require(std::isfinite(time_), "state time must be finite");
  for (const auto& c : coeffs_)
    require(std::isfinite(c.real()) && std::isfinite(c.imag()), "state amplitudes must be finite");
}

SpectralState SpectralState::zeros(std::size_t truncation, double time) {
  return SpectralState(Coeffs(truncation + 1), time);
}

Coeffs convolve(std::span<const cplx> a, std::span<const cplx> b) {
  if (a.size() != b.size())
    fail(ErrorCode::TruncationMismatch, "convolve: truncation mismatch (" +
                                            std::to_string(a.size()) + " vs " +
                                            std::to_string(b.size()) + " coefficients)");
  const std::size_t len = a.size();
  Coeffs out(len);
  for (std::size_t m = 0; m < len; ++m) {
    if (a[m] == cplx{}) continue;
    for (std::size_t j = 0; m + j < len; ++j) out[m + j] += a[m] * b[j];
  }
  return out;
}

Coeffs power(std::span<const cplx> a, unsigned j) {
  Coeffs result(a.size());
  if (result.empty()) return result;
  result[0] = 1.0;
  if (j == 0) return result;
  Coeffs base(a.begin(), a.end());
  // Square-and-multiply keeps the number of convolutions logarithmic in j.
  bool first = true;
  while (j > 0) {
    if (j & 1u) {
      result = first ? base : convolve(result, base);
      first = false;
    }
    j >>= 1u;
    if (j > 0) base = convolve(base, base);
  }
  return result;
}

double bracket(double n) { return std::sqrt(1.0 + n * n); }

double sobolev_norm(std::span<const cplx> c, double s) {
  double acc = 0.0;
  for (std::size_t n = 0; n < c.size(); ++n) {
    const double w = std::pow(1.0 + static_cast<double>(n) * static_cast<double>(n), s);
    acc += w * std::norm(c[n]);
  }
  return std::sqrt(acc);
}

double sobolev_norm(const SpectralState& u, double s) { return sobolev_norm(u.coeffs(), s); }

Coeffs derivative_coeffs(std::span<const cplx> c) {
  Coeffs out(c.size());
  for (std::size_t n = 0; n < c.size(); ++n) out[n] = cplx{0.0, static_cast<double>(n)} * c[n];
  return out;
}

SpectralState dispersion_apply(const SpectralState& u, const EquationSpec& spec, double t) {
  Coeffs out = u.coeffs();
  for (std::size_t n = 0; n < out.size(); ++n)
    out[n] *= std::polar(1.0, t * spec.symbol(static_cast<long long>(n)));
  return SpectralState(std::move(out), u.time() + t);
}

cplx point_value(std::span<const cplx> c) {
  cplx s{};
  for (const auto& v : c) s += v;
  return s;
}

std::size_t min_support(std::span<const cplx> c) {
  for (std::size_t n = 0; n < c.size(); ++n)
    if (c[n] != cplx{}) return n;
  return c.size();
}

nlohmann::json to_json(const SpectralState& u) {
  nlohmann::json coeffs = nlohmann::json::array();
  for (const auto& c : u.coeffs()) coeffs.push_back({c.real(), c.imag()});
  return {{"time", u.time()}, {"coeffs", std::move(coeffs)}};
}

SpectralState state_from_json(const nlohmann::json& j) {
  require(j.is_object() && j.contains("coeffs"), "state JSON needs a \"coeffs\" array");
  const auto& arr = j.at("coeffs");
  require(arr.is_array(), "\"coeffs\" must be an array of [re, im] pairs");
  Coeffs c;
  c.reserve(arr.size());
  for (const auto& e : arr) {
    if (e.is_number()) {
      c.emplace_back(e.get<double>(), 0.0);
    } else {
      require(e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number(),
              "each coefficient must be [re, im]");
      c.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
  }
  const double t = j.contains("time") ? j.at("time").get<double>() : 0.0;
  return SpectralState(std::move(c), t);
}

nlohmann::json to_json(const EquationSpec& spec) {
  nlohmann::json lam = nlohmann::json::object();
  for (const auto& [l, v] : spec.nonlin) lam[std::to_string(l)] = {v.real(), v.imag()};
  return {{"alpha", spec.alpha}, {"dispersion", to_string(spec.dispersion)}, {"nonlin_coeffs", lam}};
}

EquationSpec spec_from_json(const nlohmann::json& j) {
  EquationSpec spec;
  spec.alpha = j.at("alpha").get<double>();
  if (j.contains("dispersion")) spec.dispersion = dispersion_from_string(j.at("dispersion").get<std::string>());
  if (j.contains("k")) spec.nonlin[j.at("k").get<int>()] = 1.0;
  if (j.contains("nonlin_coeffs")) {
    spec.nonlin.clear();
    for (const auto& [key, v] : j.at("nonlin_coeffs").items()) {
      const int l = std::stoi(key);
      spec.nonlin[l] = v.is_number() ? cplx{v.get<double>(), 0.0}
                                     : cplx{v.at(0).get<double>(), v.at(1).get<double>()};
    }
  }
  spec.validate();
  return spec;
}

}  // namespace halfline
