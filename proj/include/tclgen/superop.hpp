#pragma once

// Numerical evaluation of symbolic terms on a uniform time grid.
//
// Every integrated time runs over the nodes t_0 = 0, ..., t_i = t with
// trapezoid weights (h/2 at both ends). Within one cluster the free variables
// are ordered; a run of r equal consecutive indices carries an extra 1/r!
// (the simplex share of the coincident cell, 1/2 for a single tie). The
// pinned slot is fixed at t_i with weight 1 and never counts as a tie.

#include <functional>
#include <memory>
#include <vector>

#include "tclgen/bath.hpp"
#include "tclgen/linalg.hpp"
#include "tclgen/term_algebra.hpp"
#include "tclgen/types.hpp"

namespace tclgen {

/// System Hamiltonian, coupling operator, coupling strength and bath for
/// V = g A (x) phi. `adjoint` selects the observable expansion.
struct ModelSpec {
  int d_S = 2;
  CMatrix H_S;
  CMatrix A;
  double g = 0.0;
  BathSpec bath;
  bool adjoint = false;

  Kind kind() const { return adjoint ? Kind::Adjoint : Kind::Schrodinger; }
  /// Throws ValidationError on shape or hermiticity failures, DomainError for
  /// an adjoint model over a non-stationary bath.
  void validate() const;
};

/// A d_S^2 x d_S^2 matrix acting on column-major vectorized operators.
struct SuperOpRep {
  CMatrix matrix;

  int system_dim() const;
  CMatrix apply(const CMatrix& x) const { return apply_superop(matrix, x); }
  static SuperOpRep zero(int d_S);
  static SuperOpRep identity(int d_S);
};

/// Uniform grid of M+1 points on [0, T] with truncation order max_order.
struct QuadratureConfig {
  double T = 1.0;
  int M = 100;
  int max_order = 3;

  double step() const { return T / M; }
  std::vector<double> times() const;
  /// Throws DomainError unless T > 0, 1 <= max_order <= 4 and M >= 2 max_order.
  void validate() const;
};

/// A^+(t_j) and A^-(t_j) on every grid point.
struct SystemSuperops {
  std::vector<CMatrix> plus;
  std::vector<CMatrix> minus;

  const CMatrix& get(Sign s, int j) const { return s == Sign::Plus ? plus[j] : minus[j]; }
};

SystemSuperops build_system_superops(const ModelSpec& model, const std::vector<double>& grid);

/// Trapezoid weights for integrals over [0, t_i] on a grid of spacing h;
/// entries beyond i are zero, all zero when i = 0.
std::vector<double> trapezoid_weights(int i, int size, double h);

/// Immutable per-run evaluation state: the model, grid, system superoperator
/// tables and the grid-bound correlator. Safe to share across threads.
class GridContext {
 public:
  GridContext(ModelSpec model, QuadratureConfig quad);

  const ModelSpec& model() const { return model_; }
  const QuadratureConfig& quad() const { return quad_; }
  Kind kind() const { return model_.kind(); }
  int system_dim() const { return model_.d_S; }
  int points() const { return quad_.M + 1; }
  const std::vector<double>& times() const { return times_; }
  const SystemSuperops& superops() const { return superops_; }
  const GridCorrelator& correlator() const { return correlator_; }

  /// One cluster of the given slot pattern at grid time t_i, pinned or free.
  CMatrix cluster_value(const SignPattern& pattern, bool pinned, int t_index) const;
  /// Free cluster values at every grid time, accumulated in a single sweep.
  std::vector<CMatrix> free_cluster_series(const SignPattern& pattern) const;

  /// Forces the generic correlator path even for exact baths.
  void set_generic_correlators(bool on) { generic_ = on; }

 private:
  struct Plan;
  Plan make_plan(const SignPattern& pattern) const;
  CMatrix subtree(const Plan& plan, int level, int j, int run, const CMatrix& bath_op, std::vector<int>& idx,
                  const std::vector<double>& w) const;
  CMatrix root_value(const Plan& plan, int j, bool ties, const std::vector<double>& w) const;

  ModelSpec model_;
  QuadratureConfig quad_;
  std::vector<double> times_;
  SystemSuperops superops_;
  GridCorrelator correlator_;
  bool generic_ = false;
};

SuperOpRep evaluate_term(const ClusteredTerm& term, int t_index, const GridContext& ctx);
SuperOpRep evaluate_term(const ClusteredTerm& term, int t_index, const ModelSpec& model, const QuadratureConfig& quad);

SuperOpRep evaluate_mu(int n, int t_index, const GridContext& ctx);
SuperOpRep evaluate_mu_dot(int n, int t_index, const GridContext& ctx);
SuperOpRep evaluate_mu(int n, int t_index, const ModelSpec& model, const QuadratureConfig& quad);
SuperOpRep evaluate_mu_dot(int n, int t_index, const ModelSpec& model, const QuadratureConfig& quad);
/// evaluate_mu(n, i) for every grid index in one cumulative sweep.
std::vector<CMatrix> evaluate_mu_series(int n, const GridContext& ctx);

enum class GeneratorPath { TermExpansion, MatrixRecursion };

/// L_1(t_i) .. L_N(t_i) without the order weights.
std::vector<SuperOpRep> generator_orders(int N, int t_index, const GridContext& ctx, GeneratorPath path);

/// Order weight (-i)^n for states, i^n for observables.
Complex order_weight(Kind kind, int n);

/// Sum over n <= N of order_weight(n) L_n(t_i).
SuperOpRep assemble_generator(int N, int t_index, const GridContext& ctx,
                              GeneratorPath path = GeneratorPath::MatrixRecursion);
SuperOpRep assemble_generator(int N, int t_index, const ModelSpec& model, const QuadratureConfig& quad,
                              GeneratorPath path = GeneratorPath::MatrixRecursion);

/// Weighted generator at every grid point.
std::vector<SuperOpRep> generator_table(int N, const GridContext& ctx,
                                        GeneratorPath path = GeneratorPath::MatrixRecursion);
/// Unweighted L_n(t_i) for n = 1..N at every grid point: result[i][n-1].
std::vector<std::vector<SuperOpRep>> generator_order_table(int N, const GridContext& ctx);

/// One ordered-cumulant summand of L_n at t_i, integrated over the global
/// simplex t > tau_1 > ... > tau_{n-1} and summed over all sign patterns.
SuperOpRep evaluate_vankampen_term(const VKTerm& term, int n, int t_index, const GridContext& ctx);
/// Sum of the tabulated ordered-cumulant terms of L_n (n <= 4).
SuperOpRep evaluate_vankampen(int n, int t_index, const GridContext& ctx);

/// Runs body(k) for k in [0, count) on up to `threads` workers (TCLGEN_THREADS
/// or hardware concurrency when threads <= 0).
void parallel_for(int count, const std::function<void(int)>& body, int threads = 0);
int default_thread_count();

}  // namespace tclgen
