#include <doctest.h>

#include <set>

#include "tclgen/term_algebra.hpp"

using namespace tclgen;

namespace {

TermShape shape(std::string_view signs, std::vector<int> clusters, bool pinned = false, Kind kind = Kind::Schrodinger) {
  return TermShape{kind, pinned, make_pattern(signs), std::move(clusters)};
}

std::vector<std::vector<int>> compositions(int n) {
  if (n == 0) return {{}};
  std::vector<std::vector<int>> out;
  for (int first = 1; first <= n; ++first)
    for (auto rest : compositions(n - first)) {
      rest.insert(rest.begin(), first);
      out.push_back(rest);
    }
  return out;
}

// Every (composition, sign pattern) pair whose clusters each start with MINUS,
// with coefficient (-1)^q.
TermPolynomial brute_force_inverse_map(int n) {
  TermPolynomial out;
  for (const auto& comp : compositions(n)) {
    std::vector<int> free_slots;
    int offset = 0;
    for (int c : comp) {
      for (int k = 1; k < c; ++k) free_slots.push_back(offset + k);
      offset += c;
    }
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << free_slots.size()); ++mask) {
      std::string signs(n, '-');
      for (std::size_t b = 0; b < free_slots.size(); ++b)
        if ((mask >> b) & 1U) signs[free_slots[b]] = '+';
      const std::int64_t coeff = comp.size() % 2 == 0 ? 1 : -1;
      out.add(shape(signs, comp), coeff);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("momentum terms") {
  const auto mu1 = momentum_terms(1, Kind::Schrodinger);
  REQUIRE(mu1.size() == 1);
  CHECK(mu1.coefficient(shape("-", {1})) == 1);

  const auto mu2 = momentum_terms(2, Kind::Schrodinger);
  CHECK(mu2.size() == 2);
  CHECK(mu2.coefficient(shape("--", {2})) == 1);
  CHECK(mu2.coefficient(shape("-+", {2})) == 1);

  for (int n = 1; n <= 8; ++n) {
    CHECK(momentum_terms(n, Kind::Schrodinger).size() == (std::size_t{1} << (n - 1)));
    const auto adj = momentum_terms(n, Kind::Adjoint);
    CHECK(adj.size() == (std::size_t{1} << (n - 1)));
    for (const auto& t : adj.list()) CHECK(t.shape.pattern.signs.back() == Sign::Minus);
  }
  CHECK_THROWS_AS(momentum_terms(0, Kind::Schrodinger), DomainError);
}

TEST_CASE("momentum derivative terms are pinned copies") {
  const auto d1 = momentum_derivative_terms(1, Kind::Schrodinger);
  REQUIRE(d1.size() == 1);
  CHECK(d1.coefficient(shape("-", {1}, true)) == 1);

  const auto d3 = momentum_derivative_terms(3, Kind::Schrodinger);
  CHECK(d3.size() == 4);
  for (const auto& t : d3.list()) {
    CHECK(t.shape.pinned);
    CHECK(t.coefficient == 1);
    CHECK(t.shape.clustering == std::vector<int>{3});
  }
  CHECK_THROWS_AS(momentum_derivative_terms(0, Kind::Adjoint), DomainError);
}

TEST_CASE("inverse map terms") {
  const auto m0 = inverse_map_terms(0);
  REQUIRE(m0.size() == 1);
  CHECK(m0.list().front().shape.is_identity());
  CHECK(m0.list().front().coefficient == 1);

  const auto m2 = inverse_map_terms(2);
  CHECK(m2.coefficient(shape("--", {1, 1})) == 1);
  CHECK(m2.coefficient(shape("--", {2})) == -1);
  CHECK(m2.coefficient(shape("-+", {2})) == -1);
  CHECK(m2.size() == 3);

  for (int n = 1; n <= 6; ++n) {
    const auto m = inverse_map_terms(n);
    CHECK(m == brute_force_inverse_map(n));
    for (const auto& t : m.list()) {
      const auto q = static_cast<int>(t.cluster_count());
      CHECK(t.coefficient == (q % 2 == 0 ? 1 : -1));
    }
  }
}

TEST_CASE("generator terms at low order") {
  const auto l1 = generator_terms(1, Kind::Schrodinger);
  REQUIRE(l1.size() == 1);
  CHECK(l1.coefficient(shape("-", {1}, true)) == 1);

  const auto l2 = generator_terms(2, Kind::Schrodinger);
  CHECK(l2.size() == 3);
  CHECK(l2.coefficient(shape("-+", {2}, true)) == 1);
  CHECK(l2.coefficient(shape("--", {2}, true)) == 1);
  CHECK(l2.coefficient(shape("--", {1, 1}, true)) == -1);

  // The nine products of the third-order generator, line by line.
  TermPolynomial l3;
  l3.add(shape("---", {3}, true), +1);
  l3.add(shape("---", {1, 2}, true), -1);
  l3.add(shape("---", {2, 1}, true), -1);
  l3.add(shape("---", {1, 1, 1}, true), +1);
  l3.add(shape("--+", {3}, true), +1);
  l3.add(shape("--+", {1, 2}, true), -1);
  l3.add(shape("-+-", {3}, true), +1);
  l3.add(shape("-+-", {2, 1}, true), -1);
  l3.add(shape("-++", {3}, true), +1);
  CHECK(generator_terms(3, Kind::Schrodinger) == l3);

  CHECK_THROWS_AS(generator_terms(0, Kind::Schrodinger), DomainError);
}

TEST_CASE("adjoint generator terms at low order") {
  const auto l2 = generator_terms(2, Kind::Adjoint);
  CHECK(l2.size() == 3);
  CHECK(l2.coefficient(shape("+-", {2}, true, Kind::Adjoint)) == 1);
  CHECK(l2.coefficient(shape("--", {2}, true, Kind::Adjoint)) == 1);
  CHECK(l2.coefficient(shape("--", {1, 1}, true, Kind::Adjoint)) == -1);
  for (const auto& t : l2.list()) CHECK(t.shape.pinned_slot() == t.shape.clustering.front() - 1);
}

TEST_CASE("diagram procedure reproduces the recursion") {
  for (int n = 1; n <= 6; ++n) CHECK(diagram_generator_terms(n) == generator_terms(n, Kind::Schrodinger));
  CHECK(diagram_generator_terms(2).size() == 3);
  CHECK(diagram_generator_terms(3).size() == 9);
  CHECK_THROWS_AS(diagram_generator_terms(0), DomainError);
}

TEST_CASE("generator coefficients and census") {
  for (Kind kind : {Kind::Schrodinger, Kind::Adjoint})
    for (int n = 1; n <= 6; ++n) {
      const auto l = generator_terms(n, kind);
      for (const auto& t : l.list()) {
        const auto q = static_cast<int>(t.cluster_count());
        CHECK(t.coefficient == (q % 2 == 1 ? 1 : -1));
        CHECK(t.shape.pinned);
        CHECK(satisfies_null_rule(t.shape));
      }
      std::size_t census = 0;
      for (const auto& comp : compositions(n)) {
        std::size_t per = 1;
        for (int c : comp) per *= std::size_t{1} << (c - 1);
        census += per;
      }
      CHECK(l.size() == census);
    }
}

TEST_CASE("adjoint mirror has matching cardinality") {
  for (int n = 1; n <= 5; ++n) {
    std::set<std::pair<std::string, std::vector<int>>> mirrored;
    for (const auto& t : generator_terms(n, Kind::Schrodinger).list()) {
      std::string s = t.shape.pattern.str();
      std::reverse(s.begin(), s.end());
      auto c = t.shape.clustering;
      std::reverse(c.begin(), c.end());
      mirrored.emplace(s, c);
    }
    CHECK(mirrored.size() == generator_terms(n, Kind::Adjoint).size());
  }
}

TEST_CASE("term counts") {
  CHECK(count_terms(3, CountMethod::RecursiveV) == 4);
  CHECK(count_terms(3, CountMethod::VanKampen) == 6);
  CHECK(count_terms(4, CountMethod::RecursiveV) == 8);
  CHECK(count_terms(4, CountMethod::VanKampen) == 20);
  CHECK(count_terms(3, CountMethod::RecursivePM) == 9);
  for (int n = 1; n <= 6; ++n) {
    CHECK(count_terms(n, CountMethod::RecursiveV) == (std::int64_t{1} << (n - 1)));
    std::int64_t p = 1;
    for (int k = 1; k < n; ++k) p *= 3;
    CHECK(count_terms(n, CountMethod::RecursivePM) == p);
  }
  CHECK_THROWS_AS(count_terms(5, CountMethod::VanKampen), DomainError);
}

TEST_CASE("ordered cumulant tables") {
  const std::vector<std::size_t> sizes{1, 2, 6, 20};
  for (int n = 1; n <= 4; ++n) {
    const auto terms = vankampen_terms(n);
    CHECK(terms.size() == sizes[n - 1]);
    for (const auto& t : terms) {
      CHECK(t.blocks.front().front() == 0);
      const auto q = static_cast<int>(t.blocks.size());
      CHECK(t.coefficient == (q % 2 == 1 ? 1 : -1));
      std::vector<int> labels;
      for (const auto& b : t.blocks) {
        for (std::size_t k = 1; k < b.size(); ++k) CHECK(b[k] > b[k - 1]);
        labels.insert(labels.end(), b.begin(), b.end());
      }
      std::sort(labels.begin(), labels.end());
      for (int k = 0; k < n; ++k) CHECK(labels[k] == k);
    }
  }
  CHECK(vankampen_terms(1).front().blocks == std::vector<std::vector<int>>{{0}});
  CHECK_THROWS_AS(vankampen_terms(0), DomainError);
  CHECK_THROWS_AS(vankampen_terms(5), DomainError);
}

TEST_CASE("rendering") {
  const ClusteredTerm a{shape("--", {2}, true), 1};
  CHECK(render_term(a, RenderFormat::DiagramAscii) == ".*-*");
  CHECK(render_term(a, RenderFormat::OperatorText) == "+1 * A-_{t} A-_{tau1} D++_{t,tau1}");
  CHECK(render_term(a, RenderFormat::Latex) == "+A^{-}_{t}A^{-}_{\\tau_{1}}D^{++}_{t\\,\\tau_{1}}");

  const ClusteredTerm b{shape("-+", {2}, true), 1};
  CHECK(render_term(b, RenderFormat::DiagramAscii) == ".*-o");

  const ClusteredTerm c{shape("-", {1}), 1};
  CHECK(render_term(c, RenderFormat::DiagramAscii) == "*");
  CHECK(render_term(c, RenderFormat::OperatorText) == "+1 * A-_{tau1} D+_{tau1}");

  const ClusteredTerm d{shape("---", {1, 2}, true), -1};
  CHECK(render_term(d, RenderFormat::DiagramAscii) == ".* *-*");
  CHECK(render_term(d, RenderFormat::OperatorText) == "-1 * A-_{t} A-_{tau1} A-_{tau2} D+_{t} D++_{tau1,tau2}");

  const ClusteredTerm adj{shape("+-", {2}, true, Kind::Adjoint), 1};
  CHECK(render_term(adj, RenderFormat::DiagramAscii) == "o-.*");
  CHECK(render_term(adj, RenderFormat::OperatorText) == "+1 * A+_{tau1} A-_{t} D-+_{tau1,t}");

  const ClusteredTerm bad{shape("+-", {2}, true), 1};
  CHECK_THROWS_AS(render_term(bad, RenderFormat::OperatorText), DomainError);
}

TEST_CASE("rendering is injective and round-trips") {
  for (Kind kind : {Kind::Schrodinger, Kind::Adjoint}) {
    std::set<std::string> seen_text, seen_diagram;
    std::size_t total = 0;
    for (int n = 1; n <= 5; ++n) {
      std::vector<ClusteredTerm> all = generator_terms(n, kind).list();
      for (const auto& t : momentum_terms(n, kind).list()) all.push_back(t);
      for (const auto& t : all) {
        const std::string text = render_term(t, RenderFormat::OperatorText);
        CHECK(parse_term(text, kind) == t);
        seen_text.insert(text);
        seen_diagram.insert(render_term(t, RenderFormat::DiagramAscii));
        ++total;
      }
    }
    CHECK(seen_text.size() == total);
    CHECK(seen_diagram.size() == total);
  }
  for (const auto& t : inverse_map_terms(4).list())
    CHECK(parse_term(render_term(t, RenderFormat::OperatorText), Kind::Schrodinger) == t);
  CHECK(parse_term("+1 * 1", Kind::Schrodinger).shape.is_identity());
  CHECK_THROWS_AS(parse_term("+1 * A-_{t} D-_{t}", Kind::Schrodinger), DomainError);
  CHECK_THROWS_AS(parse_term("garbage", Kind::Schrodinger), DomainError);
}

TEST_CASE("polynomial bookkeeping") {
  TermPolynomial p;
  CHECK(p.add(shape("--", {2}), 2));
  CHECK(p.add(shape("--", {2}), -2));
  CHECK(p.empty());
  CHECK_FALSE(p.add(shape("+-", {2}), 1));
  CHECK(p.empty());
  CHECK_THROWS_AS(p.add(shape("-", {1}), 1), DomainError);
  CHECK_THROWS_AS(p.add(shape("--", {2}, false, Kind::Adjoint), 1), DomainError);
  CHECK_THROWS_AS(check_structure(shape("--", {1})), DomainError);

  const auto prod = momentum_terms(1, Kind::Schrodinger) * momentum_terms(2, Kind::Schrodinger);
  CHECK(prod.size() == 2);
  CHECK(prod.coefficient(shape("---", {1, 2})) == 1);
  CHECK(prod.coefficient(shape("--+", {1, 2})) == 1);

  clear_term_caches();
  CHECK(generator_terms(4, Kind::Schrodinger).size() == 27);
}
