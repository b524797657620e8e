#include "tclgen/superop.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

namespace tclgen {

// ---------------------------------------------------------------------------
// Model and grid

void ModelSpec::validate() const {
  if (d_S < 2) throw ValidationError("system dimension must be at least 2");
  if (H_S.rows() != d_S || H_S.cols() != d_S) throw ValidationError("H_S has wrong shape");
  if (A.rows() != d_S || A.cols() != d_S) throw ValidationError("A has wrong shape");
  if (hermiticity_residual(H_S) > 1e-12 * std::max(1.0, H_S.norm())) throw ValidationError("H_S is not Hermitian");
  if (hermiticity_residual(A) > 1e-12 * std::max(1.0, A.norm())) throw ValidationError("A is not Hermitian");
  if (!std::isfinite(g)) throw ValidationError("coupling must be finite");
  if (const auto* gb = std::get_if<GaussianBath>(&bath)) validate_gaussian(*gb);
  if (adjoint && !is_stationary(bath)) throw DomainError("the observable expansion requires a stationary bath");
}

int SuperOpRep::system_dim() const {
  return static_cast<int>(std::lround(std::sqrt(static_cast<double>(matrix.rows()))));
}

SuperOpRep SuperOpRep::zero(int d_S) { return {CMatrix::Zero(d_S * d_S, d_S * d_S)}; }
SuperOpRep SuperOpRep::identity(int d_S) { return {CMatrix::Identity(d_S * d_S, d_S * d_S)}; }

std::vector<double> QuadratureConfig::times() const {
  std::vector<double> t(M + 1);
  for (int i = 0; i <= M; ++i) t[i] = T * i / M;
  return t;
}

void QuadratureConfig::validate() const {
  if (!(T > 0.0) || !std::isfinite(T)) throw DomainError("grid length T must be positive");
  if (max_order < 1 || max_order > 4) throw DomainError("max_order must lie in 1..4");
  if (M < 2 * max_order) throw DomainError("grid needs M >= 2 * max_order");
}

SystemSuperops build_system_superops(const ModelSpec& model, const std::vector<double>& grid) {
  const HermitianRotor rotor(model.H_S);
  SystemSuperops out;
  out.plus.reserve(grid.size());
  out.minus.reserve(grid.size());
  for (double t : grid) {
    const CMatrix a = rotor.rotate(model.A, t);
    out.plus.push_back(anticommutator_superop(a));
    out.minus.push_back(commutator_superop(a));
  }
  return out;
}

std::vector<double> trapezoid_weights(int i, int size, double h) {
  std::vector<double> w(size, 0.0);
  if (i <= 0) return w;
  for (int j = 0; j <= i; ++j) w[j] = h;
  w[0] = w[i] = 0.5 * h;
  return w;
}

// ---------------------------------------------------------------------------
// Threads

int default_thread_count() {
  int n = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TCLGEN_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = n > 0 ? std::min(n, cap) : cap;
  }
  return std::max(1, n);
}

void parallel_for(int count, const std::function<void(int)>& body, int threads) {
  if (threads <= 0) threads = default_thread_count();
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int k = 0; k < count; ++k) body(k);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (int k = next++; k < count; k = next++) {
        try {
          body(k);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// Cluster quadrature

struct GridContext::Plan {
  int k = 0;
  bool adjoint = false;
  CorrelationKind ckind = CorrelationKind::Standard;
  // Per level, latest time first.
  std::vector<Sign> system;
  std::vector<Sign> bath;
};

namespace {

std::vector<double> validated_grid(const ModelSpec& model, const QuadratureConfig& quad) {
  model.validate();
  quad.validate();
  return quad.times();
}

}  // namespace

GridContext::GridContext(ModelSpec model, QuadratureConfig quad)
    : model_(std::move(model)),
      quad_(quad),
      times_(validated_grid(model_, quad_)),
      superops_(build_system_superops(model_, times_)),
      correlator_(scaled(model_.bath, model_.g), times_) {}

GridContext::Plan GridContext::make_plan(const SignPattern& pattern) const {
  Plan p;
  p.k = static_cast<int>(pattern.size());
  p.adjoint = kind() == Kind::Adjoint;
  p.ckind = p.adjoint ? CorrelationKind::Adjoint : CorrelationKind::Standard;
  for (int m = 0; m < p.k; ++m) {
    const Sign s = pattern[p.adjoint ? p.k - 1 - m : m];
    p.system.push_back(s);
    p.bath.push_back(opposite(s));
  }
  return p;
}

CMatrix GridContext::subtree(const Plan& plan, int level, int j, int run, const CMatrix& bath_op,
                             std::vector<int>& idx, const std::vector<double>& w) const {
  const CMatrix& a = superops_.get(plan.system[level], j);
  const bool exact = correlator_.is_exact() && !generic_;

  if (level == plan.k - 1) {
    Complex d;
    if (exact) {
      const double scale = std::ldexp(1.0, -plan.k);
      const bool plus = plan.bath[level] == Sign::Plus;
      if (!plan.adjoint) {
        const CMatrix& y = plus ? correlator_.anti_with_state(j) : correlator_.comm_with_state(j);
        d = scale * bath_op.conjugate().cwiseProduct(y).sum();
      } else if (plus) {
        d = scale * correlator_.anti_with_state(j).transpose().cwiseProduct(bath_op).sum();
      } else {
        d = -scale * correlator_.comm_with_state(j).transpose().cwiseProduct(bath_op).sum();
      }
    } else {
      idx.push_back(j);
      d = correlator_.value(plan.ckind, plan.bath, idx);
      idx.pop_back();
    }
    return d * a;
  }

  CMatrix next_op;
  if (exact) {
    const CMatrix& phi = correlator_.phi_at(j);
    next_op = plan.bath[level] == Sign::Plus ? CMatrix(phi * bath_op + bath_op * phi)
                                             : CMatrix(phi * bath_op - bath_op * phi);
  } else {
    idx.push_back(j);
  }

  const int dim = static_cast<int>(a.rows());
  CMatrix inner = CMatrix::Zero(dim, dim);
  for (int j2 = 0; j2 <= j; ++j2) {
    if (w[j2] == 0.0) continue;
    int run2 = 1;
    double tie = 1.0;
    if (j2 == j && run > 0) {
      run2 = run + 1;
      tie = 1.0 / run2;
    }
    inner += (w[j2] * tie) * subtree(plan, level + 1, j2, run2, next_op, idx, w);
  }
  if (!exact) idx.pop_back();
  return plan.adjoint ? CMatrix(inner * a) : CMatrix(a * inner);
}

CMatrix GridContext::root_value(const Plan& plan, int j, bool ties, const std::vector<double>& w) const {
  const int dim = system_dim() * system_dim();
  if (plan.bath.front() == Sign::Minus) return CMatrix::Zero(dim, dim);
  std::vector<int> idx;
  idx.reserve(plan.k);
  const int d_E = correlator_.bath_dim();
  const CMatrix start = correlator_.is_exact() ? CMatrix(CMatrix::Identity(d_E, d_E)) : CMatrix();
  return subtree(plan, 0, j, ties ? 1 : 0, start, idx, w);
}

CMatrix GridContext::cluster_value(const SignPattern& pattern, bool pinned, int t_index) const {
  if (t_index < 0 || t_index >= points()) throw DomainError("time index outside the grid");
  if (pattern.size() == 0) throw DomainError("empty cluster");
  const Plan plan = make_plan(pattern);
  const auto w = trapezoid_weights(t_index, points(), quad_.step());
  if (pinned) return root_value(plan, t_index, false, w);
  const int dim = system_dim() * system_dim();
  CMatrix acc = CMatrix::Zero(dim, dim);
  if (plan.bath.front() == Sign::Minus) return acc;
  for (int j = 0; j <= t_index; ++j)
    if (w[j] != 0.0) acc += w[j] * root_value(plan, j, true, w);
  return acc;
}

std::vector<CMatrix> GridContext::free_cluster_series(const SignPattern& pattern) const {
  const Plan plan = make_plan(pattern);
  const int n = points();
  const double h = quad_.step();
  const int dim = system_dim() * system_dim();
  std::vector<CMatrix> out(n, CMatrix::Zero(dim, dim));
  if (plan.bath.front() == Sign::Minus) return out;

  // Below the current time every inner weight is the open-ended trapezoid
  // weight, so roots j < i can be shared by all later times.
  std::vector<double> open(n, h);
  open[0] = 0.5 * h;
  std::vector<CMatrix> shared(n), closing(n);
  parallel_for(n, [&](int j) {
    shared[j] = root_value(plan, j, true, open);
    if (j > 0) closing[j] = root_value(plan, j, true, trapezoid_weights(j, n, h));
  });
  CMatrix running = CMatrix::Zero(dim, dim);
  for (int i = 1; i < n; ++i) {
    running += open[i - 1] * shared[i - 1];
    out[i] = running + (0.5 * h) * closing[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Terms and momenta

namespace {

void check_order(int n, const GridContext& ctx) {
  if (n < 1 || n > ctx.quad().max_order) throw DomainError("order outside 1..max_order");
}

SignPattern slice(const SignPattern& p, int from, int len) {
  SignPattern out;
  out.signs.assign(p.signs.begin() + from, p.signs.begin() + from + len);
  return out;
}

template <typename ClusterFn>
CMatrix term_value(const TermShape& shape, std::int64_t coefficient, int dim, ClusterFn&& cluster) {
  CMatrix acc = CMatrix::Identity(dim, dim);
  const auto starts = shape.cluster_starts();
  for (std::size_t c = 0; c < shape.clustering.size(); ++c) {
    const SignPattern part = slice(shape.pattern, starts[c], shape.clustering[c]);
    acc = acc * cluster(part, shape.pinned && c == 0);
  }
  return static_cast<double>(coefficient) * acc;
}

SuperOpRep sum_single_cluster(int n, int t_index, const GridContext& ctx, bool pinned) {
  check_order(n, ctx);
  const int d = ctx.system_dim();
  SuperOpRep out = SuperOpRep::zero(d);
  for (const auto& term : momentum_terms(n, ctx.kind()).list())
    out.matrix += ctx.cluster_value(term.shape.pattern, pinned, t_index);
  return out;
}

}  // namespace

SuperOpRep evaluate_term(const ClusteredTerm& term, int t_index, const GridContext& ctx) {
  if (term.shape.kind != ctx.kind()) throw DomainError("term kind does not match the model");
  check_structure(term.shape);
  const int d2 = ctx.system_dim() * ctx.system_dim();
  if (term.shape.is_identity()) return {static_cast<double>(term.coefficient) * CMatrix::Identity(d2, d2)};
  check_order(term.order(), ctx);
  if (t_index < 0 || t_index >= ctx.points()) throw DomainError("time index outside the grid");
  return {term_value(term.shape, term.coefficient, d2, [&](const SignPattern& p, bool pinned) {
    return ctx.cluster_value(p, pinned, t_index);
  })};
}

SuperOpRep evaluate_term(const ClusteredTerm& term, int t_index, const ModelSpec& model, const QuadratureConfig& quad) {
  return evaluate_term(term, t_index, GridContext(model, quad));
}

SuperOpRep evaluate_mu(int n, int t_index, const GridContext& ctx) { return sum_single_cluster(n, t_index, ctx, false); }
SuperOpRep evaluate_mu_dot(int n, int t_index, const GridContext& ctx) {
  return sum_single_cluster(n, t_index, ctx, true);
}
SuperOpRep evaluate_mu(int n, int t_index, const ModelSpec& model, const QuadratureConfig& quad) {
  return evaluate_mu(n, t_index, GridContext(model, quad));
}
SuperOpRep evaluate_mu_dot(int n, int t_index, const ModelSpec& model, const QuadratureConfig& quad) {
  return evaluate_mu_dot(n, t_index, GridContext(model, quad));
}

// ---------------------------------------------------------------------------
// Generator

Complex order_weight(Kind kind, int n) {
  const Complex unit = kind == Kind::Schrodinger ? -kI : kI;
  Complex w = 1.0;
  for (int k = 0; k < n; ++k) w *= unit;
  return w;
}

namespace {

std::vector<SuperOpRep> combine_recursion(const std::vector<CMatrix>& mu_dot, const std::vector<CMatrix>& mu) {
  // mu_dot[k-1] = mu_dot_k, mu[k-1] = mu_k.
  const int N = static_cast<int>(mu_dot.size());
  std::vector<SuperOpRep> L(N);
  for (int n = 1; n <= N; ++n) {
    CMatrix acc = mu_dot[n - 1];
    for (int k = 1; k < n; ++k) acc -= L[n - k - 1].matrix * mu[k - 1];
    L[n - 1].matrix = std::move(acc);
  }
  return L;
}

SuperOpRep weighted_sum(const std::vector<SuperOpRep>& orders, Kind kind) {
  SuperOpRep out{CMatrix::Zero(orders.front().matrix.rows(), orders.front().matrix.cols())};
  for (std::size_t n = 1; n <= orders.size(); ++n) out.matrix += order_weight(kind, static_cast<int>(n)) * orders[n - 1].matrix;
  return out;
}

}  // namespace

std::vector<SuperOpRep> generator_orders(int N, int t_index, const GridContext& ctx, GeneratorPath path) {
  check_order(N, ctx);
  if (t_index < 0 || t_index >= ctx.points()) throw DomainError("time index outside the grid");
  if (path == GeneratorPath::MatrixRecursion) {
    std::vector<CMatrix> mu_dot, mu;
    for (int k = 1; k <= N; ++k) {
      mu_dot.push_back(evaluate_mu_dot(k, t_index, ctx).matrix);
      if (k < N) mu.push_back(evaluate_mu(k, t_index, ctx).matrix);
    }
    return combine_recursion(mu_dot, mu);
  }

  const int d2 = ctx.system_dim() * ctx.system_dim();
  std::map<std::pair<SignPattern, bool>, CMatrix> memo;
  auto cluster = [&](const SignPattern& p, bool pinned) -> const CMatrix& {
    auto key = std::make_pair(p, pinned);
    auto it = memo.find(key);
    if (it == memo.end()) it = memo.emplace(key, ctx.cluster_value(p, pinned, t_index)).first;
    return it->second;
  };
  std::vector<SuperOpRep> L;
  for (int n = 1; n <= N; ++n) {
    SuperOpRep acc = SuperOpRep::zero(ctx.system_dim());
    for (const auto& term : generator_terms(n, ctx.kind()).list())
      acc.matrix += term_value(term.shape, term.coefficient, d2, cluster);
    L.push_back(std::move(acc));
  }
  return L;
}

SuperOpRep assemble_generator(int N, int t_index, const GridContext& ctx, GeneratorPath path) {
  return weighted_sum(generator_orders(N, t_index, ctx, path), ctx.kind());
}

SuperOpRep assemble_generator(int N, int t_index, const ModelSpec& model, const QuadratureConfig& quad,
                              GeneratorPath path) {
  return assemble_generator(N, t_index, GridContext(model, quad), path);
}

std::vector<CMatrix> evaluate_mu_series(int n, const GridContext& ctx) {
  check_order(n, ctx);
  const int d2 = ctx.system_dim() * ctx.system_dim();
  std::vector<CMatrix> out(ctx.points(), CMatrix::Zero(d2, d2));
  for (const auto& term : momentum_terms(n, ctx.kind()).list()) {
    const auto series = ctx.free_cluster_series(term.shape.pattern);
    for (int i = 0; i < ctx.points(); ++i) out[i] += series[i];
  }
  return out;
}

std::vector<std::vector<SuperOpRep>> generator_order_table(int N, const GridContext& ctx) {
  check_order(N, ctx);
  const int n = ctx.points();

  std::vector<std::vector<CMatrix>> mu;
  for (int k = 1; k < N; ++k) mu.push_back(evaluate_mu_series(k, ctx));

  std::vector<std::vector<SuperOpRep>> out(n);
  parallel_for(n, [&](int i) {
    std::vector<CMatrix> mu_dot, mu_i;
    for (int k = 1; k <= N; ++k) {
      mu_dot.push_back(evaluate_mu_dot(k, i, ctx).matrix);
      if (k < N) mu_i.push_back(mu[k - 1][i]);
    }
    out[i] = combine_recursion(mu_dot, mu_i);
  });
  return out;
}

std::vector<SuperOpRep> generator_table(int N, const GridContext& ctx, GeneratorPath path) {
  check_order(N, ctx);
  std::vector<SuperOpRep> out(ctx.points());
  if (path == GeneratorPath::MatrixRecursion) {
    const auto orders = generator_order_table(N, ctx);
    for (int i = 0; i < ctx.points(); ++i) out[i] = weighted_sum(orders[i], ctx.kind());
  } else {
    parallel_for(ctx.points(), [&](int i) { out[i] = assemble_generator(N, i, ctx, path); });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ordered cumulants

namespace {

// Sum over all sign patterns of one block at fixed grid indices.
CMatrix block_value(const std::vector<int>& indices, const GridContext& ctx) {
  const int len = static_cast<int>(indices.size());
  const int d2 = ctx.system_dim() * ctx.system_dim();
  CMatrix acc = CMatrix::Zero(d2, d2);
  std::vector<Sign> bath(len);
  for (std::uint32_t mask = 0; mask < (1U << len); ++mask) {
    for (int m = 0; m < len; ++m) bath[m] = ((mask >> m) & 1U) ? Sign::Minus : Sign::Plus;
    if (bath[0] == Sign::Minus) continue;
    const Complex d = ctx.correlator().value(CorrelationKind::Standard, bath, indices);
    if (d == 0.0) continue;
    CMatrix prod = ctx.superops().get(opposite(bath[0]), indices[0]);
    for (int m = 1; m < len; ++m) prod = prod * ctx.superops().get(opposite(bath[m]), indices[m]);
    acc += d * prod;
  }
  return acc;
}

}  // namespace

SuperOpRep evaluate_vankampen_term(const VKTerm& term, int n, int t_index, const GridContext& ctx) {
  if (ctx.kind() != Kind::Schrodinger) throw DomainError("ordered cumulants are defined for the state expansion only");
  if (t_index < 0 || t_index >= ctx.points()) throw DomainError("time index outside the grid");
  const int d2 = ctx.system_dim() * ctx.system_dim();
  const auto w = trapezoid_weights(t_index, ctx.points(), ctx.quad().step());

  std::vector<int> label_index(n);
  label_index[0] = t_index;
  CMatrix acc = CMatrix::Zero(d2, d2);

  // Free labels 1..n-1 descend on the grid; ties share the simplex cell.
  std::function<void(int, int, double)> descend = [&](int label, int run, double weight) {
    if (label == n) {
      CMatrix prod = CMatrix::Identity(d2, d2);
      for (const auto& block : term.blocks) {
        std::vector<int> idx;
        for (int l : block) idx.push_back(label_index[l]);
        prod = prod * block_value(idx, ctx);
      }
      acc += weight * prod;
      return;
    }
    const int prev = label_index[label - 1];
    for (int j = 0; j <= prev; ++j) {
      if (w[j] == 0.0) continue;
      int run2 = 1;
      double tie = 1.0;
      if (j == prev && run > 0) {
        run2 = run + 1;
        tie = 1.0 / run2;
      }
      label_index[label] = j;
      descend(label + 1, run2, weight * w[j] * tie);
    }
  };
  descend(1, 0, 1.0);
  return {static_cast<double>(term.coefficient) * acc};
}

SuperOpRep evaluate_vankampen(int n, int t_index, const GridContext& ctx) {
  check_order(n, ctx);
  SuperOpRep out = SuperOpRep::zero(ctx.system_dim());
  for (const auto& term : vankampen_terms(n)) out.matrix += evaluate_vankampen_term(term, n, t_index, ctx).matrix;
  return out;
}

}  // namespace tclgen
