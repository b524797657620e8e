#pragma once

// Ground truth by unitary evolution of system and bath together.

#include <vector>

#include "tclgen/linalg.hpp"
#include "tclgen/propagator.hpp"
#include "tclgen/superop.hpp"

namespace tclgen {

inline constexpr int kMaxOracleDimension = 4096;

/// H = H_S (x) 1 + 1 (x) H_E + g A (x) phi acting on the product state
/// rho_S (x) rho_E. Composite index is s * d_E + e.
class FullModel {
 public:
  /// Requires an exact bath; throws DomainError beyond kMaxOracleDimension.
  FullModel(const ModelSpec& model, const CMatrix& rho_S);

  int system_dim() const { return d_S_; }
  int bath_dim() const { return d_E_; }
  int dim() const { return d_S_ * d_E_; }
  const CMatrix& hamiltonian() const { return total_; }
  const CMatrix& initial_state() const { return initial_; }
  const CMatrix& system_state() const { return rho_S_; }

  /// Reduced state at time t, rotated back to the interaction picture.
  CMatrix reduced_state(double t) const;

 private:
  int d_S_;
  int d_E_;
  CMatrix rho_S_;
  CMatrix total_;
  CMatrix initial_;
  HermitianRotor full_;
  HermitianRotor system_;
};

Trajectory exact_reduced_trajectory(const FullModel& full, const std::vector<double>& grid);

/// Largest trace distance between matching payloads.
double max_trace_distance(const Trajectory& a, const Trajectory& b);

struct ScalingRow {
  double g = 0.0;
  double err = 0.0;
  /// log(err_prev / err) / log(g_prev / g); NaN on the first row. Equals
  /// log2(err(g)/err(g/2)) for halved couplings.
  double ratio = 0.0;
};

/// err(g) = max_t ||rho_TCL^(N)(t) - rho_exact(t)||_tr for each coupling.
std::vector<ScalingRow> scaling_probe(const ModelSpec& model, const CMatrix& rho0, const QuadratureConfig& quad, int N,
                                      const std::vector<double>& couplings);

/// For n = 1..max_order, max over grid times of
/// |Tr[O (-i)^n mu_n rho] - Tr[(i^n mu~_n O) rho]|. Requires a stationary bath.
std::vector<double> duality_check(const ModelSpec& model, const CMatrix& O0, const CMatrix& rho_S,
                                  const QuadratureConfig& quad);

}  // namespace tclgen
