#pragma once

// Bath ordered correlation functions.
//
// A query carries bath signs b_1..b_n and times tau_1 >= ... >= tau_n.
//
//   STANDARD: D = 2^-n Tr[ phi^{b_1}(tau_1) o ... o phi^{b_n}(tau_n) (rho_E) ]
//             (first entry outermost).
//   ADJOINT:  D = 2^-n Tr[ rho_E . phi^{b_n}(tau_n) o ... o phi^{b_1}(tau_1) (1) ]
//             (first entry innermost, applied to the identity first).
//
// with phi^{+/-}(X) = phi X +/- X phi and phi(tau) in the interaction picture.
// Both vanish identically when b_1 = MINUS. For the same list of signs and
// times the two kinds are complex conjugates of each other.

#include <functional>
#include <iosfwd>
#include <memory>
#include <shared_mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "tclgen/linalg.hpp"
#include "tclgen/term_algebra.hpp"
#include "tclgen/types.hpp"

namespace tclgen {

/// Finite-dimensional bath: Hamiltonian, coupling operator and state.
class ExactBath {
 public:
  /// Validates hermiticity of all three matrices, unit trace and positivity of
  /// rho_E (tolerance 1e-12); throws ValidationError otherwise.
  ExactBath(CMatrix hamiltonian, CMatrix phi, CMatrix state);
  /// One-dimensional bath with phi = 0 (no coupling).
  ExactBath();

  int dim() const { return static_cast<int>(hamiltonian_.rows()); }
  const CMatrix& hamiltonian() const { return hamiltonian_; }
  const CMatrix& phi() const { return phi_; }
  const CMatrix& state() const { return state_; }

  CMatrix heisenberg_phi(double tau) const { return rotor_.rotate(phi_, tau); }
  /// ||[H_E, rho_E]|| <= tol.
  bool is_stationary(double tol = 1e-10) const;
  /// Copy with phi -> g phi.
  ExactBath scaled(double g) const;
  /// Copy with H_E -> H_E + shift * 1.
  ExactBath shifted(double shift) const;

 private:
  CMatrix hamiltonian_;
  CMatrix phi_;
  CMatrix state_;
  HermitianRotor rotor_;
};

/// Operator-ordered two-point function C(tau, s) = <phi(tau) phi(s)>.
using TwoPointFunction = std::function<Complex(double, double)>;
using MeanFunction = std::function<double(double)>;

/// Gaussian bath fully described by its two-point function and mean.
struct GaussianBath {
  TwoPointFunction two_point;
  /// Empty means zero mean.
  MeanFunction mean;
  /// Correlations depend on time differences only.
  bool stationary = false;
  /// Range used for sampled validation of the two-point function.
  double sample_horizon = 10.0;

  /// Copy with phi -> g phi.
  GaussianBath scaled(double g) const;
};

/// Samples C(tau, s) = conj(C(s, tau)) on [0, sample_horizon]; throws
/// ValidationError on failure.
void validate_gaussian(const GaussianBath& bath);

using BathSpec = std::variant<ExactBath, GaussianBath>;

BathSpec scaled(const BathSpec& bath, double g);
bool is_stationary(const BathSpec& bath);

enum class CorrelationKind { Standard, Adjoint };

struct CorrelationQuery {
  std::vector<Sign> bath_signs;
  std::vector<double> times;
  CorrelationKind kind = CorrelationKind::Standard;
};

/// Evaluates a query. Times must be non-increasing (equal neighbours are the
/// limit from the ordered side). ADJOINT requires a stationary bath.
Complex ordered_correlation(const BathSpec& bath, const CorrelationQuery& query);

/// Sum over perfect matchings of prod C(tau_a, tau_b), a before b in operator
/// order. With a mean, unmatched points contribute m(tau) and pairs use the
/// centred covariance. Odd length with zero mean is exactly 0.
Complex isserlis_correlation(const TwoPointFunction& two_point, std::span<const double> times,
                             const MeanFunction& mean = {});

/// phi(tau) for an exact bath; throws DomainError for a Gaussian bath.
CMatrix heisenberg_phi(const BathSpec& bath, double tau);

// Built-in baths -------------------------------------------------------------

/// Truncated harmonic mode: H_E = omega a^dag a, phi = a + a^dag on Fock
/// states 0..n_max, thermal state at inverse temperature beta
/// (beta = infinity gives the vacuum).
ExactBath boson_mode_bath(double omega, double beta, int n_max);
/// Truncated coherent state |alpha> on Fock states 0..n_max, renormalized.
CMatrix coherent_state(Complex alpha, int n_max);
/// Two-level bath: H_E = omega/2 sigma_z, phi = sigma_x, thermal state.
ExactBath qubit_bath(double omega, double beta);
/// Two-point function of g (a + a^dag) for a thermal mode of frequency omega.
GaussianBath single_mode_thermal(double omega, double beta, double g = 1.0);
/// Two-point function sampled on a tensor grid (CSV columns tau,s,re,im),
/// bilinearly interpolated.
GaussianBath sampled_two_point(std::istream& csv);
GaussianBath sampled_two_point_file(const std::string& path);

// Grid-bound evaluation ------------------------------------------------------

/// A bath bound to a time grid. Point queries by grid indices are memoized;
/// the exact-bath tables below feed the nested quadrature directly.
class GridCorrelator {
 public:
  GridCorrelator(BathSpec bath, std::vector<double> times);

  const BathSpec& bath() const { return bath_; }
  const std::vector<double>& times() const { return times_; }
  bool is_exact() const { return std::holds_alternative<ExactBath>(bath_); }

  /// Memoized ordered_correlation at grid indices (non-increasing).
  Complex value(CorrelationKind kind, std::span<const Sign> bath_signs, std::span<const int> indices) const;

  // Exact-bath tables, indexed by grid point.
  const CMatrix& phi_at(int j) const { return phi_[j]; }
  /// phi rho + rho phi.
  const CMatrix& anti_with_state(int j) const { return anti_[j]; }
  /// phi rho - rho phi.
  const CMatrix& comm_with_state(int j) const { return comm_[j]; }
  int bath_dim() const;

  std::size_t cache_size() const;

 private:
  struct Key {
    std::uint64_t packed[3];
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };

  BathSpec bath_;
  std::vector<double> times_;
  std::vector<CMatrix> phi_;
  std::vector<CMatrix> anti_;
  std::vector<CMatrix> comm_;
  mutable std::shared_mutex mutex_;
  mutable std::unordered_map<Key, Complex, KeyHash> cache_;
};

}  // namespace tclgen
