#pragma once

// Fixed-step integration of the truncated master equation for states and of
// its adjoint for observables, everything in the interaction picture.

#include <iosfwd>
#include <vector>

#include "tclgen/superop.hpp"
#include "tclgen/types.hpp"

namespace tclgen {

struct Monitors {
  /// |Tr X - 1| for states, |Tr X - Tr X_0| for observables.
  double trace_dev = 0.0;
  /// ||X - X^dagger||_F.
  double herm_residual = 0.0;
  /// Smallest eigenvalue of the Hermitian part; NaN for observables.
  double min_eig = 0.0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<CMatrix> payload;
  std::vector<Monitors> monitors;
  bool observable = false;

  std::size_t size() const { return times.size(); }
};

Monitors measure(const CMatrix& x, bool observable, Complex initial_trace = 1.0);

/// Classical RK4 over a precomputed generator table, midpoint generator taken
/// as the mean of the two bracketing nodes.
Trajectory integrate(const std::vector<SuperOpRep>& generator, const std::vector<double>& times, const CMatrix& x0,
                     bool observable);

/// d rho / dt = L^(N)_t rho. Throws ValidationError for an invalid rho0.
Trajectory propagate_state(const ModelSpec& model, const CMatrix& rho0, const QuadratureConfig& quad, int N,
                           GeneratorPath path = GeneratorPath::MatrixRecursion);
/// d O / dt = L*^(N)_t O. Throws DomainError for a non-stationary bath.
Trajectory propagate_observable(const ModelSpec& model, const CMatrix& O0, const QuadratureConfig& quad, int N,
                                GeneratorPath path = GeneratorPath::MatrixRecursion);

/// Columns t, re/im of X_ij for i <= j, trace_dev, herm_residual, min_eig.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

/// Throws ValidationError unless rho is Hermitian, unit-trace and positive
/// within tol.
void validate_density(const CMatrix& rho, double tol = 1e-10);

}  // namespace tclgen
