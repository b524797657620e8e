#include "tclgen/term_algebra.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <sstream>

namespace tclgen {

// ---------------------------------------------------------------------------
// SignPattern / TermShape

std::vector<Sign> SignPattern::bath_signs() const {
  std::vector<Sign> out(signs.size());
  std::transform(signs.begin(), signs.end(), out.begin(), opposite);
  return out;
}

std::uint64_t SignPattern::minus_mask() const {
  std::uint64_t mask = 0;
  for (std::size_t i = 0; i < signs.size(); ++i)
    if (signs[i] == Sign::Minus) mask |= std::uint64_t{1} << i;
  return mask;
}

std::string SignPattern::str() const {
  std::string s;
  for (Sign k : signs) s.push_back(sign_char(k));
  return s;
}

SignPattern make_pattern(std::string_view signs) {
  SignPattern p;
  for (char c : signs) {
    if (c == '+')
      p.signs.push_back(Sign::Plus);
    else if (c == '-')
      p.signs.push_back(Sign::Minus);
    else
      throw DomainError("sign pattern may only contain '+' and '-'");
  }
  return p;
}

std::vector<int> TermShape::cluster_starts() const {
  std::vector<int> starts;
  int offset = 0;
  for (int c : clustering) {
    starts.push_back(offset);
    offset += c;
  }
  return starts;
}

int TermShape::pinned_slot() const {
  if (!pinned || clustering.empty()) return -1;
  return kind == Kind::Schrodinger ? 0 : clustering.front() - 1;
}

void check_structure(const TermShape& shape) {
  int total = 0;
  for (int c : shape.clustering) {
    if (c <= 0) throw DomainError("cluster sizes must be positive");
    total += c;
  }
  if (total != shape.order()) throw DomainError("clustering does not sum to the term order");
  if (shape.is_identity() && shape.pinned) throw DomainError("the identity term cannot be pinned");
}

bool satisfies_null_rule(const TermShape& shape) {
  int offset = 0;
  for (int c : shape.clustering) {
    const int slot = shape.kind == Kind::Schrodinger ? offset : offset + c - 1;
    if (shape.pattern[slot] != Sign::Minus) return false;
    offset += c;
  }
  return true;
}

// ---------------------------------------------------------------------------
// TermPolynomial

TermPolynomial TermPolynomial::identity(Kind kind) {
  TermPolynomial p;
  TermShape s;
  s.kind = kind;
  p.add(s, 1);
  return p;
}

bool TermPolynomial::add(const TermShape& shape, std::int64_t coefficient) {
  check_structure(shape);
  if (typed_) {
    if (shape.order() != order_) throw DomainError("term order does not match polynomial order");
    if (shape.kind != kind_) throw DomainError("term kind does not match polynomial kind");
  } else {
    order_ = shape.order();
    kind_ = shape.kind;
    typed_ = true;
  }
  if (!satisfies_null_rule(shape)) return false;
  if (coefficient == 0) return true;
  auto [it, inserted] = terms_.try_emplace(shape, coefficient);
  if (!inserted) {
    it->second += coefficient;
    if (it->second == 0) terms_.erase(it);
  }
  return true;
}

void TermPolynomial::add(const TermPolynomial& other, std::int64_t factor) {
  for (const auto& [shape, c] : other.terms_) add(shape, c * factor);
  if (other.typed_ && !typed_) {
    order_ = other.order_;
    kind_ = other.kind_;
    typed_ = true;
  }
}

std::vector<ClusteredTerm> TermPolynomial::list() const {
  std::vector<ClusteredTerm> out;
  out.reserve(terms_.size());
  for (const auto& [shape, c] : terms_) out.push_back({shape, c});
  return out;
}

std::int64_t TermPolynomial::coefficient(const TermShape& shape) const {
  auto it = terms_.find(shape);
  return it == terms_.end() ? 0 : it->second;
}

namespace {

TermShape concat(const TermShape& lhs, const TermShape& rhs) {
  if (lhs.kind != rhs.kind) throw DomainError("cannot multiply terms of different kinds");
  if (rhs.pinned && !lhs.is_identity())
    throw DomainError("a pinned factor must be the leftmost factor of a product");
  TermShape out;
  out.kind = lhs.kind;
  out.pinned = lhs.pinned || rhs.pinned;
  out.pattern.signs = lhs.pattern.signs;
  out.pattern.signs.insert(out.pattern.signs.end(), rhs.pattern.signs.begin(), rhs.pattern.signs.end());
  out.clustering = lhs.clustering;
  out.clustering.insert(out.clustering.end(), rhs.clustering.begin(), rhs.clustering.end());
  return out;
}

// Accumulates factor * lhs * rhs into out. When strict, a product term that
// violates the null rule is an internal error: products of admissible
// clusters are admissible.
void accumulate_product(TermPolynomial& out, const TermPolynomial& lhs, const TermPolynomial& rhs,
                        std::int64_t factor, bool strict) {
  for (const auto& [ls, lc] : lhs.terms())
    for (const auto& [rs, rc] : rhs.terms()) {
      const bool kept = out.add(concat(ls, rs), factor * lc * rc);
      if (strict && !kept) throw std::logic_error("recursion produced a null-rule violating term");
    }
}

TermPolynomial single_cluster_terms(int n, Kind kind, bool pinned) {
  if (n < 1) throw DomainError("momentum order must be >= 1");
  if (n > 62) throw DomainError("momentum order too large");
  TermPolynomial p;
  const std::uint64_t free_slots = n - 1;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << free_slots); ++mask) {
    TermShape s;
    s.kind = kind;
    s.pinned = pinned;
    s.clustering = {n};
    s.pattern.signs.assign(n, Sign::Minus);
    // The slot that carries the forced MINUS is excluded from the free choices.
    const int forced = kind == Kind::Schrodinger ? 0 : n - 1;
    int bit = 0;
    for (int slot = 0; slot < n; ++slot) {
      if (slot == forced) continue;
      if (mask & (std::uint64_t{1} << bit)) s.pattern.signs[slot] = Sign::Plus;
      ++bit;
    }
    p.add(s, 1);
  }
  return p;
}

int kind_index(Kind kind) { return kind == Kind::Schrodinger ? 0 : 1; }

struct TermCache {
  std::shared_mutex mutex;
  std::vector<TermPolynomial> generator[2];
  std::vector<TermPolynomial> inverse[2];
};

TermCache& term_cache() {
  static TermCache cache;
  return cache;
}

}  // namespace

TermPolynomial operator*(const TermPolynomial& lhs, const TermPolynomial& rhs) {
  TermPolynomial out;
  accumulate_product(out, lhs, rhs, 1, false);
  return out;
}

TermPolynomial momentum_terms(int n, Kind kind) { return single_cluster_terms(n, kind, false); }

TermPolynomial momentum_derivative_terms(int n, Kind kind) {
  return single_cluster_terms(n, kind, true);
}

TermPolynomial inverse_map_terms(int n, Kind kind) {
  if (n < 0) throw DomainError("inverse-map order must be >= 0");
  auto& cache = term_cache();
  const int k = kind_index(kind);
  {
    std::shared_lock lock(cache.mutex);
    if (static_cast<int>(cache.inverse[k].size()) > n) return cache.inverse[k][n];
  }
  std::unique_lock lock(cache.mutex);
  auto& memo = cache.inverse[k];
  if (memo.empty()) memo.push_back(TermPolynomial::identity(kind));
  while (static_cast<int>(memo.size()) <= n) {
    const int m = static_cast<int>(memo.size());
    TermPolynomial next;
    for (int j = 1; j <= m; ++j) accumulate_product(next, momentum_terms(j, kind), memo[m - j], -1, true);
    memo.push_back(std::move(next));
  }
  return memo[n];
}

TermPolynomial generator_terms(int n, Kind kind) {
  if (n < 1) throw DomainError("generator order must be >= 1");
  auto& cache = term_cache();
  const int k = kind_index(kind);
  {
    std::shared_lock lock(cache.mutex);
    if (static_cast<int>(cache.generator[k].size()) >= n) return cache.generator[k][n - 1];
  }
  std::unique_lock lock(cache.mutex);
  auto& memo = cache.generator[k];
  while (static_cast<int>(memo.size()) < n) {
    const int m = static_cast<int>(memo.size()) + 1;
    TermPolynomial next = momentum_derivative_terms(m, kind);
    for (int j = 1; j <= m - 1; ++j) accumulate_product(next, memo[m - j - 1], momentum_terms(j, kind), -1, true);
    memo.push_back(std::move(next));
  }
  return memo[n - 1];
}

void clear_term_caches() {
  auto& cache = term_cache();
  std::unique_lock lock(cache.mutex);
  for (int k = 0; k < 2; ++k) {
    cache.generator[k].clear();
    cache.inverse[k].clear();
  }
}

TermPolynomial diagram_generator_terms(int n) {
  if (n < 1) throw DomainError("diagram order must be >= 1");
  if (n > 31) throw DomainError("diagram order too large");
  TermPolynomial out;
  const std::uint32_t links = n - 1;
  // Step 2: every subset of removed connections, weighted by (-1)^p.
  for (std::uint32_t removed = 0; removed < (1u << links); ++removed) {
    const int p = std::popcount(removed);
    std::vector<int> clustering;
    int run = 1;
    for (std::uint32_t link = 0; link < links; ++link) {
      if (removed & (1u << link)) {
        clustering.push_back(run);
        run = 1;
      } else {
        ++run;
      }
    }
    clustering.push_back(run);
    // Step 3: every colouring of circles 2..n; white-led clusters vanish on insertion.
    for (std::uint32_t white = 0; white < (1u << links); ++white) {
      TermShape s;
      s.kind = Kind::Schrodinger;
      s.pinned = true;
      s.clustering = clustering;
      s.pattern.signs.assign(n, Sign::Minus);
      for (std::uint32_t slot = 1; slot < static_cast<std::uint32_t>(n); ++slot)
        if (white & (1u << (slot - 1))) s.pattern.signs[slot] = Sign::Plus;
      out.add(s, (p % 2 == 0) ? 1 : -1);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ordered cumulants

std::vector<VKTerm> vankampen_terms(int n) {
  using B = std::vector<std::vector<int>>;
  switch (n) {
    case 1:
      return {{B{{0}}, +1}};
    case 2:
      return {{B{{0, 1}}, +1}, {B{{0}, {1}}, -1}};
    case 3:
      return {
          {B{{0, 1, 2}}, +1},      {B{{0, 1}, {2}}, -1},    {B{{0, 2}, {1}}, -1},
          {B{{0}, {1, 2}}, -1},    {B{{0}, {1}, {2}}, +1},  {B{{0}, {2}, {1}}, +1},
      };
    case 4:
      return {
          {B{{0, 1, 2, 3}}, +1},
          {B{{0, 1, 2}, {3}}, -1},
          {B{{0, 1, 3}, {2}}, -1},
          {B{{0, 2, 3}, {1}}, -1},
          {B{{0, 1}, {2, 3}}, -1},
          {B{{0, 2}, {1, 3}}, -1},
          {B{{0, 3}, {1, 2}}, -1},
          {B{{0}, {1, 2, 3}}, -1},
          {B{{0, 1}, {2}, {3}}, +1},
          {B{{0, 1}, {3}, {2}}, +1},
          {B{{0, 2}, {1}, {3}}, +1},
          {B{{0, 2}, {3}, {1}}, +1},
          {B{{0, 3}, {1}, {2}}, +1},
          {B{{0, 3}, {2}, {1}}, +1},
          {B{{0}, {1}, {2}, {3}}, -1},
          {B{{0}, {1}, {3}, {2}}, -1},
          {B{{0}, {2}, {1}, {3}}, -1},
          {B{{0}, {2}, {3}, {1}}, -1},
          {B{{0}, {3}, {1}, {2}}, -1},
          {B{{0}, {3}, {2}, {1}}, -1},
      };
    default:
      throw DomainError("ordered-cumulant terms are not tabulated beyond order 4");
  }
}

std::int64_t count_terms(int n, CountMethod method) {
  switch (method) {
    case CountMethod::RecursiveV: {
      std::set<std::vector<int>> clusterings;
      const auto terms = generator_terms(n, Kind::Schrodinger);
      for (const auto& [shape, c] : terms.terms()) clusterings.insert(shape.clustering);
      return static_cast<std::int64_t>(clusterings.size());
    }
    case CountMethod::RecursivePM:
      return static_cast<std::int64_t>(generator_terms(n, Kind::Schrodinger).size());
    case CountMethod::VanKampen:
      return static_cast<std::int64_t>(vankampen_terms(n).size());
  }
  throw DomainError("unknown count method");
}

// ---------------------------------------------------------------------------
// Rendering

std::vector<std::string> slot_time_labels(const TermShape& shape) {
  std::vector<std::string> labels(shape.order());
  const int pinned = shape.pinned_slot();
  int next = 1;
  for (int slot = 0; slot < shape.order(); ++slot)
    labels[slot] = slot == pinned ? "t" : "tau" + std::to_string(next++);
  return labels;
}

namespace {

void check_renderable(const TermShape& shape) {
  check_structure(shape);
  if (!shape.is_identity() && !satisfies_null_rule(shape))
    throw DomainError("term violates the null rule of its kind");
}

std::string signed_coefficient(std::int64_t c) { return (c < 0 ? "-" : "+") + std::to_string(c < 0 ? -c : c); }

std::string latex_time(const std::string& label) {
  if (label == "t") return "t";
  return "\\tau_{" + label.substr(3) + "}";
}

}  // namespace

std::string render_term(const ClusteredTerm& term, RenderFormat format) {
  const TermShape& s = term.shape;
  check_renderable(s);
  const auto labels = slot_time_labels(s);
  const auto starts = s.cluster_starts();
  const int pinned = s.pinned_slot();

  switch (format) {
    case RenderFormat::DiagramAscii: {
      if (s.is_identity()) return "1";
      std::string out;
      for (std::size_t c = 0; c < s.clustering.size(); ++c) {
        if (c > 0) out.push_back(' ');
        for (int k = 0; k < s.clustering[c]; ++k) {
          const int slot = starts[c] + k;
          if (k > 0) out.push_back('-');
          if (slot == pinned) out.push_back('.');
          out.push_back(s.pattern[slot] == Sign::Minus ? '*' : 'o');
        }
      }
      return out;
    }
    case RenderFormat::OperatorText: {
      std::string out = signed_coefficient(term.coefficient) + " *";
      if (s.is_identity()) return out + " 1";
      for (int slot = 0; slot < s.order(); ++slot)
        out += std::string(" A") + sign_char(s.pattern[slot]) + "_{" + labels[slot] + "}";
      for (std::size_t c = 0; c < s.clustering.size(); ++c) {
        out += " D";
        for (int k = 0; k < s.clustering[c]; ++k) out.push_back(sign_char(opposite(s.pattern[starts[c] + k])));
        out += "_{";
        for (int k = 0; k < s.clustering[c]; ++k) {
          if (k > 0) out.push_back(',');
          out += labels[starts[c] + k];
        }
        out += "}";
      }
      return out;
    }
    case RenderFormat::Latex: {
      std::string out = term.coefficient < 0 ? "-" : "+";
      const auto mag = term.coefficient < 0 ? -term.coefficient : term.coefficient;
      if (mag != 1) out += std::to_string(mag) + "\\,";
      if (s.is_identity()) return out + "\\mathbb{1}";
      for (int slot = 0; slot < s.order(); ++slot)
        out += std::string("A^{") + sign_char(s.pattern[slot]) + "}_{" + latex_time(labels[slot]) + "}";
      for (std::size_t c = 0; c < s.clustering.size(); ++c) {
        out += "D^{";
        for (int k = 0; k < s.clustering[c]; ++k) out.push_back(sign_char(opposite(s.pattern[starts[c] + k])));
        out += "}_{";
        for (int k = 0; k < s.clustering[c]; ++k) {
          if (k > 0) out += "\\,";
          out += latex_time(labels[starts[c] + k]);
        }
        out += "}";
      }
      return out;
    }
  }
  throw DomainError("unknown render format");
}

namespace {

[[noreturn]] void parse_fail(std::string_view text, const std::string& why) {
  throw DomainError("cannot parse term '" + std::string(text) + "': " + why);
}

Sign parse_sign(char c, std::string_view text) {
  if (c == '+') return Sign::Plus;
  if (c == '-') return Sign::Minus;
  parse_fail(text, "expected '+' or '-'");
}

}  // namespace

ClusteredTerm parse_term(std::string_view text, Kind kind) {
  std::istringstream in{std::string(text)};
  std::vector<std::string> tokens;
  for (std::string tok; in >> tok;) tokens.push_back(tok);
  if (tokens.size() < 3 || tokens[1] != "*") parse_fail(text, "expected '<coeff> * <factors>'");

  ClusteredTerm term;
  term.shape.kind = kind;
  try {
    std::size_t used = 0;
    term.coefficient = std::stoll(tokens[0], &used);
    if (used != tokens[0].size()) parse_fail(text, "bad coefficient");
  } catch (const std::logic_error&) {
    parse_fail(text, "bad coefficient");
  }
  if (tokens.size() == 3 && tokens[2] == "1") return term;

  std::vector<std::string> a_labels;
  std::vector<std::pair<std::string, std::vector<std::string>>> d_factors;
  for (std::size_t i = 2; i < tokens.size(); ++i) {
    const std::string& tok = tokens[i];
    const auto open = tok.find("_{");
    if (open == std::string::npos || tok.back() != '}') parse_fail(text, "malformed factor '" + tok + "'");
    const std::string head = tok.substr(0, open);
    const std::string body = tok.substr(open + 2, tok.size() - open - 3);
    if (head.size() == 2 && head[0] == 'A') {
      if (!d_factors.empty()) parse_fail(text, "A factors must precede D factors");
      term.shape.pattern.signs.push_back(parse_sign(head[1], text));
      a_labels.push_back(body);
    } else if (head.size() >= 2 && head[0] == 'D') {
      std::vector<std::string> times;
      std::stringstream ss(body);
      for (std::string t; std::getline(ss, t, ',');) times.push_back(t);
      d_factors.emplace_back(head.substr(1), times);
    } else {
      parse_fail(text, "unknown factor '" + tok + "'");
    }
  }

  std::size_t slot = 0;
  for (const auto& [bath, times] : d_factors) {
    if (bath.size() != times.size()) parse_fail(text, "D signs and times differ in length");
    for (std::size_t k = 0; k < times.size(); ++k, ++slot) {
      if (slot >= a_labels.size() || times[k] != a_labels[slot])
        parse_fail(text, "D times must cover the A slots contiguously and in order");
      if (parse_sign(bath[k], text) != opposite(term.shape.pattern[slot]))
        parse_fail(text, "bath sign must be opposite to the system sign");
    }
    term.shape.clustering.push_back(static_cast<int>(times.size()));
  }
  if (slot != a_labels.size()) parse_fail(text, "every A slot must belong to a D factor");
  term.shape.pinned = std::find(a_labels.begin(), a_labels.end(), "t") != a_labels.end();

  check_renderable(term.shape);
  if (slot_time_labels(term.shape) != a_labels) parse_fail(text, "time labels are not in canonical order");
  return term;
}

}  // namespace tclgen
