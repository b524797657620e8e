#pragma once

// Exact symbolic engine for the time-convolutionless expansion.
//
// A term is a product of n system superoperators A^{k_1} ... A^{k_n} (slots,
// left to right in composition order) times a product of bath ordered
// correlation functions, one per cluster of contiguous slots. The bath sign of
// a slot is always the opposite of its system sign, so only system signs are
// stored. Coefficients are exact integers.
//
// Time conventions per kind:
//   Schrodinger: within a cluster, slot times descend left to right; a pinned
//                term has its first slot frozen at t.
//   Adjoint:     within a cluster, slot times ascend left to right (the
//                rightmost slot is innermost and latest); a pinned term has
//                the last slot of its first cluster frozen at t.

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tclgen/types.hpp"

namespace tclgen {

enum class Sign : std::int8_t { Minus = -1, Plus = +1 };

constexpr Sign opposite(Sign s) { return s == Sign::Plus ? Sign::Minus : Sign::Plus; }
constexpr char sign_char(Sign s) { return s == Sign::Plus ? '+' : '-'; }

/// Sequence of system superoperator signs. The bath sign of slot i is always
/// opposite(signs[i]).
struct SignPattern {
  std::vector<Sign> signs;

  std::size_t size() const { return signs.size(); }
  Sign operator[](std::size_t i) const { return signs[i]; }
  std::vector<Sign> bath_signs() const;
  /// Bit i set when slot i is MINUS.
  std::uint64_t minus_mask() const;
  std::string str() const;

  auto operator<=>(const SignPattern&) const = default;
  bool operator==(const SignPattern&) const = default;
};

SignPattern make_pattern(std::string_view signs);

/// Canonical key of a term: everything except the coefficient.
struct TermShape {
  Kind kind = Kind::Schrodinger;
  bool pinned = false;
  SignPattern pattern;
  std::vector<int> clustering;

  int order() const { return static_cast<int>(pattern.size()); }
  bool is_identity() const { return pattern.size() == 0; }
  /// Slot offset of each cluster's first slot.
  std::vector<int> cluster_starts() const;
  /// Index of the slot frozen at t (only meaningful when pinned).
  int pinned_slot() const;

  auto operator<=>(const TermShape&) const = default;
  bool operator==(const TermShape&) const = default;
};

struct ClusteredTerm {
  TermShape shape;
  std::int64_t coefficient = 1;

  int order() const { return shape.order(); }
  std::size_t cluster_count() const { return shape.clustering.size(); }
  bool operator==(const ClusteredTerm&) const = default;
};

/// Throws DomainError unless the shape is a well-formed clustering of its
/// pattern. Does not check the null rule.
void check_structure(const TermShape& shape);

/// True when every cluster obeys the kind's null rule: the first slot of each
/// cluster is MINUS (Schrodinger) or the last slot is MINUS (adjoint).
bool satisfies_null_rule(const TermShape& shape);

/// Multiset of terms of one fixed order and kind with accumulated integer
/// coefficients. Zero coefficients and null-rule violators never survive
/// insertion.
class TermPolynomial {
 public:
  using Map = std::map<TermShape, std::int64_t>;

  TermPolynomial() = default;
  static TermPolynomial identity(Kind kind = Kind::Schrodinger);

  /// Accumulates a term. Returns false when the term was dropped by the null
  /// rule; throws DomainError on order or kind mismatch.
  bool add(const TermShape& shape, std::int64_t coefficient);
  bool add(const ClusteredTerm& term) { return add(term.shape, term.coefficient); }
  void add(const TermPolynomial& other, std::int64_t factor = 1);

  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  int order() const { return order_; }
  Kind kind() const { return kind_; }
  const Map& terms() const { return terms_; }
  std::vector<ClusteredTerm> list() const;
  std::int64_t coefficient(const TermShape& shape) const;

  bool operator==(const TermPolynomial& other) const { return terms_ == other.terms_; }

 private:
  Map terms_;
  int order_ = -1;
  Kind kind_ = Kind::Schrodinger;
  bool typed_ = false;
};

/// Concatenation product: the slots and clusters of lhs are placed to the left
/// of those of rhs, coefficients multiply. Only lhs terms may be pinned.
TermPolynomial operator*(const TermPolynomial& lhs, const TermPolynomial& rhs);

/// Single-cluster terms of the n-th integrated momentum.
TermPolynomial momentum_terms(int n, Kind kind);
/// Same terms with the latest time frozen at t (time derivative of the momentum).
TermPolynomial momentum_derivative_terms(int n, Kind kind);
/// Terms of the n-th order inverse-map coefficient, M_0 = 1,
/// M_n = -sum_k mu_k M_{n-k}.
TermPolynomial inverse_map_terms(int n, Kind kind = Kind::Schrodinger);
/// Terms of L_n = mu_dot_n - sum_k L_{n-k} mu_k. Memoized per kind.
TermPolynomial generator_terms(int n, Kind kind);
/// L_n built by the connection-removal / circle-colouring procedure, without
/// using the recursion.
TermPolynomial diagram_generator_terms(int n);

/// One ordered-cumulant summand: blocks of time labels (0 = t, k = tau_k).
struct VKTerm {
  std::vector<std::vector<int>> blocks;
  std::int64_t coefficient = 1;
  bool operator==(const VKTerm&) const = default;
};

/// Tabulated ordered-cumulant expansion of L_1 .. L_4.
std::vector<VKTerm> vankampen_terms(int n);

enum class CountMethod { RecursiveV, RecursivePM, VanKampen };
std::int64_t count_terms(int n, CountMethod method);

enum class RenderFormat { DiagramAscii, OperatorText, Latex };

/// Time label of each slot: "t" for the pinned slot, "tau1", "tau2", ... for
/// the others in slot order.
std::vector<std::string> slot_time_labels(const TermShape& shape);

std::string render_term(const ClusteredTerm& term, RenderFormat format);
/// Inverse of render_term(., OperatorText).
ClusteredTerm parse_term(std::string_view text, Kind kind);

/// Drops every memoized generator and inverse-map polynomial.
void clear_term_caches();

}  // namespace tclgen
