#include <doctest.h>

#include <sstream>

#include "test_support.hpp"
#include "tclgen/bath.hpp"

using namespace tclgen;
using namespace tclgen::testing;

namespace {

// Expands every phi^{+/-} into its left and right products and sums the
// 2^n resulting operator strings directly.
Complex placement_oracle(const ExactBath& bath, const std::vector<Sign>& signs, const std::vector<double>& times,
                         CorrelationKind kind) {
  const std::size_t n = signs.size();
  const int d = bath.dim();
  Complex total = 0.0;
  for (std::uint64_t right = 0; right < (std::uint64_t{1} << n); ++right) {
    CMatrix left_op = CMatrix::Identity(d, d);
    CMatrix right_op = CMatrix::Identity(d, d);
    double sign = 1.0;
    // Layers are wrapped in application order: innermost first.
    for (std::size_t step = 0; step < n; ++step) {
      const std::size_t m = kind == CorrelationKind::Standard ? n - 1 - step : step;
      const CMatrix phi = bath.heisenberg_phi(times[m]);
      if ((right >> m) & 1U) {
        right_op = right_op * phi;
        if (signs[m] == Sign::Minus) sign = -sign;
      } else {
        left_op = phi * left_op;
      }
    }
    if (kind == CorrelationKind::Standard)
      total += sign * (left_op * bath.state() * right_op).trace();
    else
      total += sign * (bath.state() * left_op * right_op).trace();
  }
  return total / std::pow(2.0, static_cast<double>(n));
}

std::vector<Sign> random_signs(std::mt19937& rng, std::size_t n) {
  std::bernoulli_distribution coin(0.5);
  std::vector<Sign> s(n);
  for (auto& x : s) x = coin(rng) ? Sign::Plus : Sign::Minus;
  return s;
}

std::vector<double> random_descending(std::mt19937& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::vector<double> t(n);
  for (auto& x : t) x = u(rng);
  std::sort(t.rbegin(), t.rend());
  return t;
}

}  // namespace

TEST_CASE("first-order correlations") {
  const BathSpec vacuum = boson_mode_bath(1.0, std::numeric_limits<double>::infinity(), 8);
  CHECK(std::abs(ordered_correlation(vacuum, {{Sign::Plus}, {0.7}, CorrelationKind::Standard})) < 1e-15);

  std::mt19937 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const BathSpec b = random_exact_bath(rng, 3, true);
    for (auto kind : {CorrelationKind::Standard, CorrelationKind::Adjoint})
      CHECK(ordered_correlation(b, {{Sign::Minus}, {1.3}, kind}) == Complex(0.0));
    const ExactBath& e = std::get<ExactBath>(b);
    const Complex mean = ordered_correlation(b, {{Sign::Plus}, {0.4}, CorrelationKind::Standard});
    CHECK(std::abs(mean - (e.state() * e.heisenberg_phi(0.4)).trace()) < 1e-12);
  }
}

TEST_CASE("qubit bath two-point value matches the placement expansion") {
  const ExactBath bath = qubit_bath(1.3, 0.8);
  const std::vector<Sign> signs{Sign::Plus, Sign::Minus};
  const std::vector<double> times{1.1, 0.3};
  const Complex v = ordered_correlation(bath, {signs, times, CorrelationKind::Standard});
  CHECK(std::abs(v - placement_oracle(bath, signs, times, CorrelationKind::Standard)) < 1e-13);
  // <[phi(t1), phi(t2)]>/4 is purely imaginary here.
  CHECK(std::abs(v.real()) < 1e-13);
  CHECK(std::abs(v.imag()) > 1e-3);
}

TEST_CASE("exact backend matches the placement expansion for random baths") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const ExactBath bath = random_exact_bath(rng, 3, trial % 2 == 0);
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto signs = random_signs(rng, n);
      const auto times = random_descending(rng, n);
      const Complex s = ordered_correlation(bath, {signs, times, CorrelationKind::Standard});
      CHECK(std::abs(s - placement_oracle(bath, signs, times, CorrelationKind::Standard)) < 1e-12);
      if (bath.is_stationary()) {
        const Complex a = ordered_correlation(bath, {signs, times, CorrelationKind::Adjoint});
        CHECK(std::abs(a - placement_oracle(bath, signs, times, CorrelationKind::Adjoint)) < 1e-12);
      }
    }
  }
}

TEST_CASE("null rule holds without the shortcut") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const ExactBath bath = random_exact_bath(rng, 3, true);
    for (std::size_t n = 1; n <= 4; ++n) {
      auto signs = random_signs(rng, n);
      signs.front() = Sign::Minus;
      const auto times = random_descending(rng, n);
      for (auto kind : {CorrelationKind::Standard, CorrelationKind::Adjoint})
        CHECK(std::abs(placement_oracle(bath, signs, times, kind)) < 1e-12);
    }
  }
}

TEST_CASE("standard and adjoint correlations are conjugate") {
  std::mt19937 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const BathSpec bath = random_exact_bath(rng, 4, true);
    for (std::size_t n = 1; n <= 3; ++n) {
      auto signs = random_signs(rng, n);
      signs.front() = Sign::Plus;
      const auto times = random_descending(rng, n);
      const Complex s = ordered_correlation(bath, {signs, times, CorrelationKind::Standard});
      const Complex a = ordered_correlation(bath, {signs, times, CorrelationKind::Adjoint});
      CHECK(std::abs(s - std::conj(a)) < 1e-12);
      const int minus = static_cast<int>(std::count(signs.begin(), signs.end(), Sign::Minus));
      CHECK(std::abs(s - (minus % 2 == 0 ? 1.0 : -1.0) * a) < 1e-12);
    }
  }
}

TEST_CASE("scaling, stationarity and query validation") {
  std::mt19937 rng(17);
  const ExactBath bath = random_exact_bath(rng, 3, true);
  std::uniform_real_distribution<double> shift(-2.0, 2.0);
  for (std::size_t n = 1; n <= 4; ++n) {
    auto signs = random_signs(rng, n);
    signs.front() = Sign::Plus;
    const auto times = random_descending(rng, n);
    const Complex base = ordered_correlation(bath, {signs, times, CorrelationKind::Standard});
    const Complex scaled_v = ordered_correlation(bath.scaled(0.3), {signs, times, CorrelationKind::Standard});
    CHECK(std::abs(scaled_v - std::pow(0.3, static_cast<double>(n)) * base) < 1e-13);

    const double s = shift(rng);
    auto moved = times;
    for (auto& t : moved) t += s;
    CHECK(std::abs(ordered_correlation(bath, {signs, moved, CorrelationKind::Standard}) - base) < 1e-10);
  }

  CHECK_THROWS_AS(ordered_correlation(bath, {{Sign::Plus, Sign::Plus}, {0.1, 0.5}, CorrelationKind::Standard}),
                  DomainError);
  CHECK_THROWS_AS(ordered_correlation(bath, {{Sign::Plus}, {0.1, 0.05}, CorrelationKind::Standard}), DomainError);
  CHECK_THROWS_AS(ordered_correlation(bath, {{}, {}, CorrelationKind::Standard}), DomainError);
  // Equal times are accepted.
  CHECK_NOTHROW(ordered_correlation(bath, {{Sign::Plus, Sign::Plus}, {0.5, 0.5}, CorrelationKind::Standard}));

  const BathSpec moving = random_exact_bath(rng, 3, false);
  CHECK_FALSE(is_stationary(moving));
  CHECK_THROWS_AS(ordered_correlation(moving, {{Sign::Plus}, {0.2}, CorrelationKind::Adjoint}), DomainError);
}

TEST_CASE("bath validation") {
  CMatrix h = CMatrix::Identity(2, 2);
  CMatrix rho = 0.5 * CMatrix::Identity(2, 2);
  CHECK_THROWS_AS(ExactBath(h, CMatrix::Identity(3, 3), rho), ValidationError);
  CHECK_THROWS_AS(ExactBath(h, pauli_y() * Complex(0, 1), rho), ValidationError);
  CHECK_THROWS_AS(ExactBath(h, pauli_x(), CMatrix::Identity(2, 2)), ValidationError);
  CMatrix negative(2, 2);
  negative << 1.5, 0, 0, -0.5;
  CHECK_THROWS_AS(ExactBath(h, pauli_x(), negative), ValidationError);

  GaussianBath bad;
  bad.two_point = [](double tau, double s) { return Complex(tau, s); };
  CHECK_THROWS_AS(validate_gaussian(bad), ValidationError);
  CHECK_NOTHROW(validate_gaussian(single_mode_thermal(1.0, 2.0)));
}

TEST_CASE("isserlis pairings") {
  const TwoPointFunction c = [](double a, double b) { return Complex(a + 2.0 * b, a * b); };
  const std::vector<double> t2{0.3, 0.9};
  CHECK(std::abs(isserlis_correlation(c, t2) - c(0.3, 0.9)) < 1e-15);

  const std::vector<double> t{1.0, 2.0, 3.0, 4.0};
  const Complex expected = c(1, 2) * c(3, 4) + c(1, 3) * c(2, 4) + c(1, 4) * c(2, 3);
  CHECK(std::abs(isserlis_correlation(c, t) - expected) < 1e-12);

  const TwoPointFunction one = [](double, double) { return Complex(1.0); };
  CHECK(isserlis_correlation(one, std::vector<double>(6, 0.0)) == Complex(15.0));
  CHECK(isserlis_correlation(one, std::vector<double>(8, 0.0)) == Complex(105.0));
  CHECK(isserlis_correlation(one, std::vector<double>(3, 0.0)) == Complex(0.0));

  // With a constant mean m and C = m^2 + 1: sum over partial matchings.
  const MeanFunction mean = [](double) { return 2.0; };
  const TwoPointFunction cm = [](double, double) { return Complex(5.0); };
  // Centred covariance is 1; n=3: m^3 + 3 m = 14.
  CHECK(std::abs(isserlis_correlation(cm, std::vector<double>(3, 0.0), mean) - 14.0) < 1e-12);
}

TEST_CASE("gaussian backend equals the exact thermal mode") {
  const double omega = 1.0, beta = 1.0;
  const ExactBath exact = boson_mode_bath(omega, beta, 40);
  const GaussianBath gauss = single_mode_thermal(omega, beta);
  std::mt19937 rng(3);
  for (std::size_t n : {2U, 4U, 6U}) {
    const auto times = random_descending(rng, n);
    // Plain operator products.
    CMatrix prod = exact.state();
    for (double tau : times) prod = prod * exact.heisenberg_phi(tau);
    CHECK(std::abs(isserlis_correlation(gauss.two_point, times) - prod.trace()) < 1e-10);

    auto signs = random_signs(rng, n);
    signs.front() = Sign::Plus;
    for (auto kind : {CorrelationKind::Standard, CorrelationKind::Adjoint}) {
      const Complex e = ordered_correlation(exact, {signs, times, kind});
      const Complex g = ordered_correlation(gauss, {signs, times, kind});
      CHECK(std::abs(e - g) < 1e-10);
    }
  }
  CHECK(ordered_correlation(gauss, {{Sign::Plus, Sign::Plus, Sign::Minus}, {3, 2, 1}, CorrelationKind::Standard}) ==
        Complex(0.0));
}

TEST_CASE("gaussian backend with a mean equals a coherent mode") {
  const double omega = 1.0;
  const Complex alpha(0.6, 0.2);
  const ExactBath bath(boson_mode_bath(omega, 1.0, 30).hamiltonian(), boson_mode_bath(omega, 1.0, 30).phi(),
                       coherent_state(alpha, 30));
  GaussianBath gauss = single_mode_thermal(omega, std::numeric_limits<double>::infinity());
  const auto vac = gauss.two_point;
  gauss.mean = [alpha, omega](double t) { return 2.0 * (alpha * std::exp(-kI * omega * t)).real(); };
  gauss.two_point = [vac, m = gauss.mean](double a, double b) { return vac(a, b) + m(a) * m(b); };
  std::mt19937 rng(21);
  for (std::size_t n = 1; n <= 4; ++n) {
    auto signs = random_signs(rng, n);
    signs.front() = Sign::Plus;
    const auto times = random_descending(rng, n);
    const Complex e = ordered_correlation(bath, {signs, times, CorrelationKind::Standard});
    const Complex g = ordered_correlation(gauss, {signs, times, CorrelationKind::Standard});
    CHECK(std::abs(e - g) < 1e-9);
  }
}

TEST_CASE("heisenberg picture coupling") {
  std::mt19937 rng(23);
  const ExactBath bath = random_exact_bath(rng, 4, false);
  CHECK((bath.heisenberg_phi(0.0) - bath.phi()).norm() < 1e-13);

  const ExactBath commuting(pauli_z(), pauli_z() * 0.5, 0.5 * CMatrix::Identity(2, 2));
  CHECK((commuting.heisenberg_phi(2.7) - commuting.phi()).norm() < 1e-14);

  Eigen::SelfAdjointEigenSolver<CMatrix> e0(bath.phi()), e1(bath.heisenberg_phi(1.9));
  CHECK((e0.eigenvalues() - e1.eigenvalues()).norm() < 1e-12);

  CHECK_THROWS_AS(heisenberg_phi(BathSpec(single_mode_thermal(1.0, 1.0)), 0.0), DomainError);
  CHECK((heisenberg_phi(BathSpec(bath), 0.3) - bath.heisenberg_phi(0.3)).norm() == 0.0);
}

TEST_CASE("sampled two-point function") {
  const GaussianBath ref = single_mode_thermal(1.0, 2.0, 0.5);
  std::ostringstream csv;
  csv.precision(17);
  csv << "tau,s,re,im\n";
  const int n = 41;
  const double h = 0.05;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const Complex v = ref.two_point(a * h, b * h);
      csv << a * h << "," << b * h << "," << v.real() << "," << v.imag() << "\n";
    }
  std::istringstream in(csv.str());
  const GaussianBath sampled = sampled_two_point(in);
  CHECK(sampled.stationary);
  CHECK(std::abs(sampled.two_point(0.5, 0.25) - ref.two_point(0.5, 0.25)) < 1e-10);
  CHECK(std::abs(sampled.two_point(0.52, 0.31) - ref.two_point(0.52, 0.31)) < 5e-4);
  CHECK_NOTHROW(validate_gaussian(sampled));
  CHECK_THROWS_AS(sampled.two_point(3.0, 0.0), DomainError);

  std::istringstream ragged("0,0,1,0\n0,1,1,0\n1,0,1,0\n");
  CHECK_THROWS_AS(sampled_two_point(ragged), ValidationError);
}

TEST_CASE("grid correlator memoizes index queries") {
  std::mt19937 rng(29);
  const BathSpec bath = random_exact_bath(rng, 3, true);
  const std::vector<double> grid{0.0, 0.5, 1.0, 1.5};
  const GridCorrelator gc(bath, grid);
  const std::vector<Sign> signs{Sign::Plus, Sign::Minus, Sign::Plus};
  const std::vector<int> idx{3, 1, 1};
  const Complex v = gc.value(CorrelationKind::Standard, signs, idx);
  CHECK(gc.cache_size() == 1);
  CHECK(gc.value(CorrelationKind::Standard, signs, idx) == v);
  CHECK(gc.cache_size() == 1);
  CHECK(v == ordered_correlation(bath, {signs, {1.5, 0.5, 0.5}, CorrelationKind::Standard}));
  CHECK(gc.value(CorrelationKind::Adjoint, signs, idx) != v);
  CHECK(gc.cache_size() == 2);
  CHECK_THROWS_AS(gc.value(CorrelationKind::Standard, signs, std::vector<int>{4, 1, 0}), DomainError);
}
