#include "tclgen/bath.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

namespace tclgen {

namespace {

constexpr double kValidationTol = 1e-12;

void require_square(const CMatrix& m, Eigen::Index dim, const char* what) {
  if (m.rows() != dim || m.cols() != dim)
    throw ValidationError(std::string(what) + " has wrong shape");
}

void require_hermitian(const CMatrix& m, const char* what) {
  const double scale = std::max(1.0, m.norm());
  if (hermiticity_residual(m) > kValidationTol * scale * 10)
    throw ValidationError(std::string(what) + " is not Hermitian");
}

void check_query(const CorrelationQuery& q) {
  if (q.bath_signs.empty()) throw DomainError("correlation query is empty");
  if (q.bath_signs.size() != q.times.size())
    throw DomainError("correlation query: signs and times differ in length");
  for (std::size_t m = 1; m < q.times.size(); ++m)
    if (q.times[m] > q.times[m - 1])
      throw DomainError("correlation query: times must be non-increasing");
}

Complex exact_correlation(const ExactBath& bath, const CorrelationQuery& q) {
  const auto n = q.times.size();
  const double scale = std::ldexp(1.0, -static_cast<int>(n));
  auto layer = [&](std::size_t m, const CMatrix& x) -> CMatrix {
    const CMatrix phi = bath.heisenberg_phi(q.times[m]);
    if (q.bath_signs[m] == Sign::Plus) return phi * x + x * phi;
    return phi * x - x * phi;
  };
  if (q.kind == CorrelationKind::Standard) {
    CMatrix x = bath.state();
    for (std::size_t m = n; m-- > 0;) x = layer(m, x);
    return scale * x.trace();
  }
  CMatrix x = CMatrix::Identity(bath.dim(), bath.dim());
  for (std::size_t m = 0; m < n; ++m) x = layer(m, x);
  return scale * (bath.state() * x).trace();
}

Complex gaussian_correlation(const GaussianBath& bath, const CorrelationQuery& q) {
  const auto n = q.times.size();
  if (n % 2 == 1 && !bath.mean) return 0.0;
  const double scale = std::ldexp(1.0, -static_cast<int>(n));
  Complex total = 0.0;
  std::vector<double> ordered;
  ordered.reserve(n);
  for (std::uint64_t right = 0; right < (std::uint64_t{1} << n); ++right) {
    double sign = 1.0;
    for (std::size_t m = 0; m < n; ++m)
      if (((right >> m) & 1U) && q.bath_signs[m] == Sign::Minus) sign = -sign;
    ordered.clear();
    const bool standard = q.kind == CorrelationKind::Standard;
    // STANDARD: right-placed by decreasing level, then left-placed by increasing level.
    // ADJOINT:  left-placed by decreasing level, then right-placed by increasing level.
    const std::uint64_t first_set = standard ? right : ~right;
    for (std::size_t m = n; m-- > 0;)
      if ((first_set >> m) & 1U) ordered.push_back(q.times[m]);
    for (std::size_t m = 0; m < n; ++m)
      if (!((first_set >> m) & 1U)) ordered.push_back(q.times[m]);
    total += sign * isserlis_correlation(bath.two_point, ordered, bath.mean);
  }
  return scale * total;
}

Complex isserlis_rec(const TwoPointFunction& c, const MeanFunction& mean, std::span<const double> t,
                     std::vector<int>& rest) {
  if (rest.empty()) return 1.0;
  const int a = rest.front();
  Complex acc = 0.0;
  if (mean) {
    std::vector<int> tail(rest.begin() + 1, rest.end());
    acc += mean(t[a]) * isserlis_rec(c, mean, t, tail);
  }
  for (std::size_t k = 1; k < rest.size(); ++k) {
    const int b = rest[k];
    Complex pair = c(t[a], t[b]);
    if (mean) pair -= mean(t[a]) * mean(t[b]);
    std::vector<int> tail;
    tail.reserve(rest.size() - 2);
    for (std::size_t r = 1; r < rest.size(); ++r)
      if (r != k) tail.push_back(rest[r]);
    acc += pair * isserlis_rec(c, mean, t, tail);
  }
  return acc;
}

CMatrix thermal_diagonal(const Vector<double>& energies, double beta) {
  const auto d = energies.size();
  Vector<double> p(d);
  const double e0 = energies.minCoeff();
  if (std::isinf(beta)) {
    for (Eigen::Index k = 0; k < d; ++k) p(k) = energies(k) == e0 ? 1.0 : 0.0;
  } else {
    for (Eigen::Index k = 0; k < d; ++k) p(k) = std::exp(-beta * (energies(k) - e0));
  }
  p /= p.sum();
  return p.cast<Complex>().asDiagonal();
}

}  // namespace

// ExactBath ------------------------------------------------------------------

ExactBath::ExactBath(CMatrix hamiltonian, CMatrix phi, CMatrix state)
    : hamiltonian_(std::move(hamiltonian)), phi_(std::move(phi)), state_(std::move(state)) {
  const auto d = hamiltonian_.rows();
  if (d < 1) throw ValidationError("bath dimension must be positive");
  require_square(hamiltonian_, d, "bath Hamiltonian");
  require_square(phi_, d, "bath coupling operator");
  require_square(state_, d, "bath state");
  require_hermitian(hamiltonian_, "bath Hamiltonian");
  require_hermitian(phi_, "bath coupling operator");
  require_hermitian(state_, "bath state");
  if (std::abs(state_.trace() - 1.0) > 1e-10) throw ValidationError("bath state must have unit trace");
  if (min_hermitian_eigenvalue(state_) < -1e-10) throw ValidationError("bath state is not positive");
  rotor_ = HermitianRotor(hamiltonian_);
}

ExactBath::ExactBath() : ExactBath(CMatrix::Zero(1, 1), CMatrix::Zero(1, 1), CMatrix::Identity(1, 1)) {}

bool ExactBath::is_stationary(double tol) const {
  return (hamiltonian_ * state_ - state_ * hamiltonian_).norm() <= tol * std::max(1.0, hamiltonian_.norm());
}

ExactBath ExactBath::scaled(double g) const {
  ExactBath out = *this;
  out.phi_ *= g;
  return out;
}

ExactBath ExactBath::shifted(double shift) const {
  ExactBath out = *this;
  out.hamiltonian_ += shift * CMatrix::Identity(dim(), dim());
  out.rotor_ = HermitianRotor(out.hamiltonian_);
  return out;
}

// GaussianBath ---------------------------------------------------------------

GaussianBath GaussianBath::scaled(double g) const {
  GaussianBath out = *this;
  auto c = two_point;
  out.two_point = [c, g](double tau, double s) { return g * g * c(tau, s); };
  if (mean) {
    auto m = mean;
    out.mean = [m, g](double tau) { return g * m(tau); };
  }
  return out;
}

void validate_gaussian(const GaussianBath& bath) {
  if (!bath.two_point) throw ValidationError("Gaussian bath has no two-point function");
  constexpr int kSamples = 9;
  for (int a = 0; a < kSamples; ++a)
    for (int b = 0; b < kSamples; ++b) {
      const double tau = bath.sample_horizon * a / (kSamples - 1);
      const double s = bath.sample_horizon * b / (kSamples - 1);
      const Complex c1 = bath.two_point(tau, s);
      const Complex c2 = std::conj(bath.two_point(s, tau));
      if (std::abs(c1 - c2) > 1e-10 * (1.0 + std::abs(c1)))
        throw ValidationError("two-point function violates C(tau,s) = conj(C(s,tau))");
    }
}

BathSpec scaled(const BathSpec& bath, double g) {
  return std::visit([g](const auto& b) -> BathSpec { return b.scaled(g); }, bath);
}

bool is_stationary(const BathSpec& bath) {
  if (const auto* e = std::get_if<ExactBath>(&bath)) return e->is_stationary();
  return std::get<GaussianBath>(bath).stationary;
}

// Queries --------------------------------------------------------------------

Complex ordered_correlation(const BathSpec& bath, const CorrelationQuery& query) {
  check_query(query);
  if (query.kind == CorrelationKind::Adjoint && !is_stationary(bath))
    throw DomainError("adjoint correlation requires a stationary bath");
  if (query.bath_signs.front() == Sign::Minus) return 0.0;
  if (const auto* e = std::get_if<ExactBath>(&bath)) return exact_correlation(*e, query);
  return gaussian_correlation(std::get<GaussianBath>(bath), query);
}

Complex isserlis_correlation(const TwoPointFunction& two_point, std::span<const double> times,
                             const MeanFunction& mean) {
  if (times.size() % 2 == 1 && !mean) return 0.0;
  std::vector<int> rest(times.size());
  for (std::size_t k = 0; k < rest.size(); ++k) rest[k] = static_cast<int>(k);
  return isserlis_rec(two_point, mean, times, rest);
}

CMatrix heisenberg_phi(const BathSpec& bath, double tau) {
  if (const auto* e = std::get_if<ExactBath>(&bath)) return e->heisenberg_phi(tau);
  throw DomainError("heisenberg_phi is undefined for a Gaussian bath");
}

// Built-ins ------------------------------------------------------------------

namespace {

CMatrix annihilation(int n_max) {
  CMatrix a = CMatrix::Zero(n_max + 1, n_max + 1);
  for (int n = 1; n <= n_max; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
  return a;
}

}  // namespace

ExactBath boson_mode_bath(double omega, double beta, int n_max) {
  if (n_max < 1) throw DomainError("boson mode needs n_max >= 1");
  const CMatrix a = annihilation(n_max);
  Vector<double> energies(n_max + 1);
  for (int n = 0; n <= n_max; ++n) energies(n) = omega * n;
  CMatrix h = energies.cast<Complex>().asDiagonal();
  return ExactBath(h, a + a.adjoint(), thermal_diagonal(energies, beta));
}

CMatrix coherent_state(Complex alpha, int n_max) {
  CVector psi(n_max + 1);
  Complex amp = 1.0;
  for (int n = 0; n <= n_max; ++n) {
    if (n > 0) amp *= alpha / std::sqrt(static_cast<double>(n));
    psi(n) = amp;
  }
  psi.normalize();
  return psi * psi.adjoint();
}

ExactBath qubit_bath(double omega, double beta) {
  Vector<double> energies(2);
  energies << 0.5 * omega, -0.5 * omega;
  CMatrix h = energies.cast<Complex>().asDiagonal();
  CMatrix sx(2, 2);
  sx << 0, 1, 1, 0;
  return ExactBath(h, sx, thermal_diagonal(energies, beta));
}

GaussianBath single_mode_thermal(double omega, double beta, double g) {
  const double nbar = std::isinf(beta) ? 0.0 : 1.0 / std::expm1(beta * omega);
  GaussianBath bath;
  bath.two_point = [=](double tau, double s) {
    const Complex ph = std::exp(-kI * (kPictureSign * omega * (tau - s)));
    return g * g * ((nbar + 1.0) * ph + nbar * std::conj(ph));
  };
  bath.stationary = true;
  return bath;
}

GaussianBath sampled_two_point(std::istream& csv) {
  std::map<std::pair<double, double>, Complex> samples;
  std::string line;
  int line_no = 0;
  while (std::getline(csv, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double tau, s, re, im;
    if (!(fields >> tau >> s >> re >> im)) {
      if (line_no == 1) continue;  // header
      throw ValidationError("correlation CSV: malformed line " + std::to_string(line_no));
    }
    samples[{tau, s}] = Complex(re, im);
  }
  if (samples.empty()) throw ValidationError("correlation CSV has no samples");

  std::vector<double> taus, ss;
  for (const auto& [key, value] : samples) {
    taus.push_back(key.first);
    ss.push_back(key.second);
  }
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
  std::sort(ss.begin(), ss.end());
  ss.erase(std::unique(ss.begin(), ss.end()), ss.end());
  if (samples.size() != taus.size() * ss.size()) throw ValidationError("correlation CSV is not a full tensor grid");
  if (taus.size() < 2 || ss.size() < 2) throw ValidationError("correlation CSV needs at least 2x2 samples");
  if (taus.front() != 0.0 || ss.front() != 0.0) throw ValidationError("correlation CSV grid must start at 0");

  CMatrix table(taus.size(), ss.size());
  for (std::size_t a = 0; a < taus.size(); ++a)
    for (std::size_t b = 0; b < ss.size(); ++b) table(a, b) = samples.at({taus[a], ss[b]});

  auto locate = [](const std::vector<double>& grid, double x) {
    if (x < grid.front() - 1e-12 || x > grid.back() + 1e-12)
      throw DomainError("time outside the sampled correlation grid");
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    std::size_t hi = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - grid.begin(), 1), grid.size() - 1);
    const double w = std::clamp((x - grid[hi - 1]) / (grid[hi] - grid[hi - 1]), 0.0, 1.0);
    return std::pair{hi - 1, w};
  };

  GaussianBath bath;
  bath.two_point = [taus, ss, table, locate](double tau, double s) {
    const auto [a, wa] = locate(taus, tau);
    const auto [b, wb] = locate(ss, s);
    return (1 - wa) * (1 - wb) * table(a, b) + wa * (1 - wb) * table(a + 1, b) +
           (1 - wa) * wb * table(a, b + 1) + wa * wb * table(a + 1, b + 1);
  };
  bath.sample_horizon = std::min(taus.back(), ss.back());

  bool stationary = taus == ss;
  if (stationary) {
    const double h = taus[1] - taus[0];
    for (std::size_t k = 1; k < taus.size() && stationary; ++k)
      stationary = std::abs(taus[k] - taus[k - 1] - h) <= 1e-9 * h;
    for (Eigen::Index a = 1; a < table.rows() && stationary; ++a)
      for (Eigen::Index b = 1; b < table.cols() && stationary; ++b)
        stationary = std::abs(table(a, b) - table(a - 1, b - 1)) <= 1e-10 * (1.0 + std::abs(table(a, b)));
  }
  bath.stationary = stationary;
  return bath;
}

GaussianBath sampled_two_point_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open correlation file " + path);
  return sampled_two_point(in);
}

// GridCorrelator -------------------------------------------------------------

GridCorrelator::GridCorrelator(BathSpec bath, std::vector<double> times)
    : bath_(std::move(bath)), times_(std::move(times)) {
  if (const auto* e = std::get_if<ExactBath>(&bath_)) {
    phi_.reserve(times_.size());
    anti_.reserve(times_.size());
    comm_.reserve(times_.size());
    for (double t : times_) {
      CMatrix phi = e->heisenberg_phi(t);
      const CMatrix pr = phi * e->state();
      const CMatrix rp = e->state() * phi;
      anti_.push_back(pr + rp);
      comm_.push_back(pr - rp);
      phi_.push_back(std::move(phi));
    }
  }
}

int GridCorrelator::bath_dim() const {
  if (const auto* e = std::get_if<ExactBath>(&bath_)) return e->dim();
  return 0;
}

std::size_t GridCorrelator::KeyHash::operator()(const Key& k) const noexcept {
  std::size_t h = std::hash<std::uint64_t>{}(k.packed[0]);
  h ^= std::hash<std::uint64_t>{}(k.packed[1]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  h ^= std::hash<std::uint64_t>{}(k.packed[2]) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

Complex GridCorrelator::value(CorrelationKind kind, std::span<const Sign> bath_signs,
                              std::span<const int> indices) const {
  const std::size_t n = bath_signs.size();
  if (n == 0 || n != indices.size()) throw DomainError("grid correlation: bad query length");
  for (int j : indices)
    if (j < 0 || j >= static_cast<int>(times_.size())) throw DomainError("grid correlation: index out of range");
  if (bath_signs[0] == Sign::Minus) return 0.0;

  const bool cacheable = n <= 8 && times_.size() < 0xFFFF;
  Key key{{0, 0, 0}};
  if (cacheable) {
    key.packed[0] = (kind == CorrelationKind::Adjoint ? 1U : 0U) | (n << 1);
    for (std::size_t m = 0; m < n; ++m) {
      if (bath_signs[m] == Sign::Minus) key.packed[0] |= std::uint64_t{1} << (8 + m);
      key.packed[1 + m / 4] |= static_cast<std::uint64_t>(indices[m]) << (16 * (m % 4));
    }
    std::shared_lock lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }

  CorrelationQuery q;
  q.kind = kind;
  q.bath_signs.assign(bath_signs.begin(), bath_signs.end());
  for (int j : indices) q.times.push_back(times_[j]);
  const Complex v = ordered_correlation(bath_, q);

  if (cacheable) {
    std::unique_lock lock(mutex_);
    cache_.emplace(key, v);
  }
  return v;
}

std::size_t GridCorrelator::cache_size() const {
  std::shared_lock lock(mutex_);
  return cache_.size();
}

}  // namespace tclgen
