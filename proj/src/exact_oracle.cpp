#include "tclgen/exact_oracle.hpp"

#include <cmath>
#include <limits>

namespace tclgen {

FullModel::FullModel(const ModelSpec& model, const CMatrix& rho_S) : d_S_(model.d_S), rho_S_(rho_S) {
  model.validate();
  validate_density(rho_S);
  if (rho_S.rows() != d_S_) throw ValidationError("initial state has wrong dimension");
  const auto* bath = std::get_if<ExactBath>(&model.bath);
  if (!bath) throw DomainError("the exact oracle needs a finite-dimensional bath");
  d_E_ = bath->dim();
  if (static_cast<long>(d_S_) * d_E_ > kMaxOracleDimension) throw DomainError("composite dimension exceeds 4096");

  const CMatrix id_S = CMatrix::Identity(d_S_, d_S_);
  const CMatrix id_E = CMatrix::Identity(d_E_, d_E_);
  total_ = Eigen::kroneckerProduct(model.H_S, id_E).eval() + Eigen::kroneckerProduct(id_S, bath->hamiltonian()).eval() +
           model.g * Eigen::kroneckerProduct(model.A, bath->phi()).eval();
  initial_ = Eigen::kroneckerProduct(rho_S, bath->state()).eval();
  full_ = HermitianRotor(total_);
  system_ = HermitianRotor(model.H_S);
}

CMatrix FullModel::reduced_state(double t) const {
  const CMatrix evolved = full_.evolve(initial_, t);
  return system_.rotate(partial_trace_second(evolved, d_S_, d_E_), t);
}

Trajectory exact_reduced_trajectory(const FullModel& full, const std::vector<double>& grid) {
  Trajectory traj;
  traj.times = grid;
  traj.payload.resize(grid.size());
  traj.monitors.resize(grid.size());
  parallel_for(static_cast<int>(grid.size()), [&](int k) {
    traj.payload[k] = full.reduced_state(grid[k]);
    traj.monitors[k] = measure(traj.payload[k], false);
  });
  return traj;
}

double max_trace_distance(const Trajectory& a, const Trajectory& b) {
  if (a.size() != b.size()) throw DomainError("trajectories have different lengths");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, trace_distance(a.payload[k], b.payload[k]));
  return worst;
}

std::vector<ScalingRow> scaling_probe(const ModelSpec& model, const CMatrix& rho0, const QuadratureConfig& quad, int N,
                                      const std::vector<double>& couplings) {
  if (couplings.size() < 2) throw DomainError("scaling probe needs at least two couplings");
  std::vector<ScalingRow> rows;
  for (double g : couplings) {
    ModelSpec m = model;
    m.g = g;
    const Trajectory tcl = propagate_state(m, rho0, quad, N);
    const Trajectory exact = exact_reduced_trajectory(FullModel(m, rho0), quad.times());
    ScalingRow row;
    row.g = g;
    row.err = max_trace_distance(tcl, exact);
    row.ratio = rows.empty() ? std::numeric_limits<double>::quiet_NaN()
                             : std::log(rows.back().err / row.err) / std::log(rows.back().g / g);
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> duality_check(const ModelSpec& model, const CMatrix& O0, const CMatrix& rho_S,
                                  const QuadratureConfig& quad) {
  if (!is_stationary(model.bath)) throw DomainError("duality check requires a stationary bath");
  ModelSpec forward = model;
  forward.adjoint = false;
  ModelSpec backward = model;
  backward.adjoint = true;
  const GridContext s(forward, quad);
  const GridContext a(backward, quad);
  std::vector<double> residual(quad.max_order, 0.0);
  for (int n = 1; n <= quad.max_order; ++n) {
    const auto mu = evaluate_mu_series(n, s);
    const auto mu_adj = evaluate_mu_series(n, a);
    for (int i = 0; i < s.points(); ++i) {
      const CMatrix lhs = order_weight(Kind::Schrodinger, n) * apply_superop(mu[i], rho_S);
      const CMatrix rhs = order_weight(Kind::Adjoint, n) * apply_superop(mu_adj[i], O0);
      residual[n - 1] = std::max(residual[n - 1], std::abs((O0 * lhs).trace() - (rhs * rho_S).trace()));
    }
  }
  return residual;
}

}  // namespace tclgen
