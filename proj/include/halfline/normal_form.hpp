#pragma once

// Normal-form reduced integral equation for mean-zero data (alpha >= 3).
//
// With v(t) = exp(-i t D) u(t) the mode equations read
//   d_t v^(n) = i n sum_l lambda_l/(l+1) sum_{n_1+..+n_{l+1}=n} e^{i t Phi} prod v^(n_j).
// Integrating by parts against e^{i t Phi} gives
//   v(t) = phi + N(v)(t) - N(phi)(0) + int_0^t B(v),
// which is solved here by Picard iteration on a panel grid in time.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "halfline/spectral.hpp"
#include "halfline/trajectory.hpp"

namespace halfline {

class NormalFormOperators {
 public:
  /// support: optional mask over 0..M; tuples using an index outside it are
  /// dropped (their products vanish for data supported there).
  NormalFormOperators(EquationSpec spec, std::size_t truncation, std::vector<char> support = {});

  const EquationSpec& spec() const noexcept { return spec_; }
  std::size_t truncation() const noexcept { return M_; }
  std::size_t table_size() const noexcept;

  Coeffs calN(std::span<const cplx> v, double t) const;
  Coeffs calB(std::span<const cplx> v, double t) const;
  /// Right-hand side of the v-equation, d_t v^(n).
  Coeffs rhs(std::span<const cplx> v, double t) const;
  /// calN and calB together, sharing the phase factors.
  void evaluate(std::span<const cplx> v, double t, Coeffs& n_out, Coeffs& b_out) const;

  /// Smallest |Phi| over the table (0 if empty).
  double min_abs_phase() const noexcept { return min_phase_; }

 private:
  struct Table {
    int l = 0;
    cplx lambda;
    // For each n: flat index tuples (stride l+1) and their phases.
    std::vector<std::vector<std::uint32_t>> idx;
    std::vector<std::vector<double>> phase;
  };

  EquationSpec spec_;
  std::size_t M_;
  std::vector<Table> tables_;
  double min_phase_ = 0.0;
};

struct SmallnessCheck {
  bool holds = false;
  double phi_norm_H1 = 0.0;
  double lhs = 0.0;  // a-priori bound on sup ||Gamma(v)|| over the ball
  double radius = 0.0;
  double c_N = 0.0;
  double c_B = 0.0;
};

/// Ball-invariance test  ||phi|| + C_N((2r)^{k+1} + r^{k+1}) + C_B (2r)^{2k+1} < 2r
/// at r = ||phi||_{H^1}, with Young-inequality constants at truncation M.
SmallnessCheck smallness_check(const EquationSpec& spec, const SpectralState& phi);

struct PicardOptions {
  double tol = 1e-12;
  int max_iter = 200;
  double kappa = 6.0;
  double quad_tol = 1e-12;
  int max_refinements = 8;
  bool allow_unsafe_alpha = false;
  std::optional<quad::PanelGrid> grid;
};

struct PicardLogRow {
  int iteration = 0;
  double diff = 0.0;
  double ratio = 0.0;  // diff / previous diff; 0 for the first row
};

struct PicardResult {
  Trajectory v;  // stored as u-frames: omega_n = mu(n), zeta = v
  std::vector<PicardLogRow> log;
  SmallnessCheck smallness;
  double fixed_point_residual = 0.0;
  int refinements = 0;
  bool converged = false;
};

/// Gamma applied to node values of v on grid (node-major: vals[node][n]).
std::vector<Coeffs> gamma_map(const NormalFormOperators& ops, const quad::PanelGrid& grid,
                              const std::vector<Coeffs>& v, const SpectralState& phi);

PicardResult picard_solve(const SpectralState& phi, const EquationSpec& spec, double T,
                          const PicardOptions& options = {});

std::string picard_log_csv(const std::vector<PicardLogRow>& log);
nlohmann::json to_json(const SmallnessCheck& check);

}  // namespace halfline
