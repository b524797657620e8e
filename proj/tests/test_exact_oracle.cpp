#include <doctest.h>

#include "test_support.hpp"
#include "tclgen/exact_oracle.hpp"

using namespace tclgen;
using namespace tclgen::testing;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("zero coupling keeps the interaction-picture state") {
  std::mt19937 rng(1);
  const ModelSpec m = random_qubit_model(rng, false, 0.0);
  const CMatrix rho = random_density(rng, 2);
  const FullModel full(m, rho);
  CHECK(full.dim() == 6);
  const Trajectory t = exact_reduced_trajectory(full, {0.0, 0.7, 2.5});
  for (const auto& x : t.payload) CHECK((x - rho).norm() < 1e-12);
}

TEST_CASE("pure dephasing follows the analytic decoherence factor") {
  ModelSpec m;
  m.d_S = 2;
  m.H_S = 0.35 * pauli_z();
  m.A = pauli_z();
  m.g = 0.2;
  m.bath = boson_mode_bath(1.0, kInf, 12);
  CMatrix rho(2, 2);
  rho << 0.3, 0.4, 0.4, 0.7;
  const FullModel full(m, rho);
  for (double t : {0.5, 1.7, 3.1, 5.0}) {
    const CMatrix r = full.reduced_state(t);
    CHECK(std::abs(r(0, 0) - 0.3) < 1e-12);
    CHECK(std::abs(r(1, 1) - 0.7) < 1e-12);
    const double factor = std::exp(-4.0 * m.g * m.g * (1.0 - std::cos(t)));
    CHECK(std::abs(std::abs(r(0, 1)) - 0.4 * factor) < 1e-10);
  }
}

TEST_CASE("exact trajectories are physical and gauge invariant") {
  std::mt19937 rng(2);
  const ModelSpec m = random_qubit_model(rng, false, 0.8, 4);
  const CMatrix rho = random_density(rng, 2);
  const FullModel full(m, rho);
  const std::vector<double> grid{0.0, 0.3, 1.1, 4.0};
  const Trajectory t = exact_reduced_trajectory(full, grid);
  for (const auto& mon : t.monitors) {
    CHECK(mon.trace_dev < 1e-12);
    CHECK(mon.herm_residual < 1e-12);
    CHECK(mon.min_eig > -1e-12);
  }

  ModelSpec shifted = m;
  shifted.bath = std::get<ExactBath>(m.bath).shifted(3.7);
  const Trajectory s = exact_reduced_trajectory(FullModel(shifted, rho), grid);
  CHECK(max_trace_distance(t, s) < 1e-10);

  const CMatrix x = random_matrix(rng, 8);
  CHECK(std::abs(partial_trace_second(x, 2, 4).trace() - x.trace()) < 1e-12);
}

TEST_CASE("oracle input validation") {
  std::mt19937 rng(3);
  ModelSpec gauss = random_qubit_model(rng, true);
  gauss.bath = single_mode_thermal(1.0, 1.0);
  CHECK_THROWS_AS(FullModel(gauss, random_density(rng, 2)), DomainError);

  ModelSpec big;
  big.d_S = 65;
  big.H_S = random_hermitian(rng, 65);
  big.A = random_hermitian(rng, 65);
  big.g = 0.1;
  big.bath = random_exact_bath(rng, 64, false);
  CHECK_THROWS_AS(FullModel(big, random_density(rng, 65)), DomainError);

  const ModelSpec m = random_qubit_model(rng, true);
  CHECK_THROWS_AS(FullModel(m, CMatrix::Identity(2, 2)), ValidationError);
}

TEST_CASE("scaling probe") {
  ModelSpec m;
  m.d_S = 2;
  m.H_S = 0.5 * pauli_z();
  m.A = pauli_x();
  m.bath = boson_mode_bath(1.0, kInf, 6);
  CMatrix rho(2, 2);
  rho << 0.5, 0.5, 0.5, 0.5;
  // First order over a zero-mean bath is free evolution: error ~ g^2.
  const auto rows = scaling_probe(m, rho, QuadratureConfig{4.0, 80, 1}, 1, {0.1, 0.05, 0.025});
  REQUIRE(rows.size() == 3);
  CHECK(std::isnan(rows[0].ratio));
  CHECK(rows[1].ratio == doctest::Approx(2.0).epsilon(0.2));
  CHECK(rows[2].ratio == doctest::Approx(2.0).epsilon(0.2));
  CHECK(rows[0].err > rows[1].err);
  CHECK(rows[1].err > rows[2].err);
  CHECK_THROWS_AS(scaling_probe(m, rho, QuadratureConfig{4.0, 80, 1}, 1, {0.1}), DomainError);
}

TEST_CASE("duality check") {
  std::mt19937 rng(4);
  const ModelSpec m = random_qubit_model(rng, true, 0.4);
  const CMatrix rho = random_density(rng, 2);
  const QuadratureConfig quad{2.0, 40, 3};
  const auto res = duality_check(m, random_hermitian(rng, 2), rho, quad);
  REQUIRE(res.size() == 3);
  for (double r : res) CHECK(r < 1e-12);
  const auto unit = duality_check(m, CMatrix::Identity(2, 2), rho, quad);
  for (double r : unit) CHECK(r < 1e-13);
  CHECK_THROWS_AS(duality_check(random_qubit_model(rng, false), pauli_x(), rho, quad), DomainError);
}
