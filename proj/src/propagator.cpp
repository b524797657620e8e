#include "tclgen/propagator.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace tclgen {

Monitors measure(const CMatrix& x, bool observable, Complex initial_trace) {
  Monitors m;
  m.herm_residual = hermiticity_residual(x);
  if (observable) {
    m.trace_dev = std::abs(x.trace() - initial_trace);
    m.min_eig = std::numeric_limits<double>::quiet_NaN();
  } else {
    m.trace_dev = std::abs(x.trace() - 1.0);
    m.min_eig = min_hermitian_eigenvalue(x);
  }
  return m;
}

void validate_density(const CMatrix& rho, double tol) {
  if (rho.rows() != rho.cols()) throw ValidationError("density matrix must be square");
  if (hermiticity_residual(rho) > tol) throw ValidationError("density matrix is not Hermitian");
  if (std::abs(rho.trace() - 1.0) > tol) throw ValidationError("density matrix must have unit trace");
  if (min_hermitian_eigenvalue(rho) < -tol) throw ValidationError("density matrix is not positive");
}

Trajectory integrate(const std::vector<SuperOpRep>& generator, const std::vector<double>& times, const CMatrix& x0,
                     bool observable) {
  if (generator.size() != times.size() || times.empty()) throw DomainError("generator table does not match the grid");
  const auto d = x0.rows();
  if (generator.front().matrix.rows() != d * d) throw DomainError("generator dimension does not match the payload");

  Trajectory traj;
  traj.observable = observable;
  traj.times = times;
  traj.payload.reserve(times.size());
  traj.monitors.reserve(times.size());
  const Complex tr0 = x0.trace();

  CVector x = vec(x0);
  traj.payload.push_back(x0);
  traj.monitors.push_back(measure(x0, observable, tr0));
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double h = times[i + 1] - times[i];
    const CMatrix& a = generator[i].matrix;
    const CMatrix& b = generator[i + 1].matrix;
    const CMatrix mid = 0.5 * (a + b);
    const CVector k1 = a * x;
    const CVector k2 = mid * (x + 0.5 * h * k1);
    const CVector k3 = mid * (x + 0.5 * h * k2);
    const CVector k4 = b * (x + h * k3);
    x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    CMatrix xm = unvec(x, d);
    traj.monitors.push_back(measure(xm, observable, tr0));
    traj.payload.push_back(std::move(xm));
  }
  return traj;
}

Trajectory propagate_state(const ModelSpec& model, const CMatrix& rho0, const QuadratureConfig& quad, int N,
                           GeneratorPath path) {
  validate_density(rho0);
  if (rho0.rows() != model.d_S) throw ValidationError("initial state has wrong dimension");
  ModelSpec m = model;
  m.adjoint = false;
  const GridContext ctx(m, quad);
  return integrate(generator_table(N, ctx, path), ctx.times(), rho0, false);
}

Trajectory propagate_observable(const ModelSpec& model, const CMatrix& O0, const QuadratureConfig& quad, int N,
                                GeneratorPath path) {
  if (O0.rows() != model.d_S || O0.cols() != model.d_S) throw ValidationError("observable has wrong dimension");
  if (hermiticity_residual(O0) > 1e-10 * std::max(1.0, O0.norm())) throw ValidationError("observable is not Hermitian");
  ModelSpec m = model;
  m.adjoint = true;
  const GridContext ctx(m, quad);
  return integrate(generator_table(N, ctx, path), ctx.times(), O0, true);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  if (traj.payload.empty()) return;
  const auto d = traj.payload.front().rows();
  out << "t";
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = i; j < d; ++j) out << ",re_" << i << "_" << j << ",im_" << i << "_" << j;
  out << ",trace_dev,herm_residual,min_eig\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.12e", v);
    out << buf;
  };
  for (std::size_t k = 0; k < traj.size(); ++k) {
    put(traj.times[k]);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = i; j < d; ++j) {
        out << ',';
        put(traj.payload[k](i, j).real());
        out << ',';
        put(traj.payload[k](i, j).imag());
      }
    const auto& m = traj.monitors[k];
    out << ',';
    put(m.trace_dev);
    out << ',';
    put(m.herm_residual);
    out << ',';
    if (std::isnan(m.min_eig))
      out << "nan";
    else
      put(m.min_eig);
    out << '\n';
  }
}

}  // namespace tclgen
