#include <catch2/catch_amalgamated.hpp>

#include "ising/observables.hpp"

using namespace ising;
using Catch::Approx;

TEST_CASE("partition function small cases") {
  IsingCoupling k(0.7);
  SECTION("single face: only the empty configuration") {
    Domain d = build_from_faces({{1, 1}});
    CHECK(partition_function_contour(d, k) == 1.0);
  }
  SECTION("2x2 faces: empty + one 4-loop") {
    Domain d = build_rectangle(3, 3);
    CHECK(partition_function_contour(d, k) ==
          Approx(1.0 + std::pow(k.alpha, 4)).epsilon(1e-14));
  }
}

TEST_CASE("contour Z matches spin enumeration") {
  for (double beta : {0.4, beta_critical(), 0.9}) {
    IsingCoupling k(beta);
    for (auto [w, h] : std::vector<std::pair<int, int>>{{3, 3}, {4, 4}, {5, 3}}) {
      Domain d = build_rectangle(w, h);
      double zc = partition_function_contour(d, k);
      double zp = spin_enum_oracle(d, k).z_plus;
      CHECK(zc == Approx(zp * std::exp(-beta * double(d.edges.size()))).epsilon(1e-12));
    }
  }
}

TEST_CASE("spin oracle basics") {
  IsingCoupling k(0.6);
  // 3x3 box: one free spin with 4 bonds to the plus boundary.
  Domain d = build_rectangle(3, 3);
  double expect = std::exp(8 * k.beta) * (std::exp(4 * k.beta) + std::exp(-4 * k.beta));
  CHECK(spin_enum_oracle(d, k).z_plus == Approx(expect).epsilon(1e-13));

  auto r = spin_enum_oracle(d, k, {{2, 2}});
  CHECK(r.correlation == Approx(std::tanh(4 * k.beta)).epsilon(1e-13));
}

TEST_CASE("center magnetization increases with beta") {
  Domain d = build_rectangle(4, 4);
  double prev = 0;
  for (double beta : {0.2, 0.4, 0.6, 0.8, 1.0}) {
    double m = spin_enum_oracle(d, IsingCoupling(beta), {{2, 2}}).correlation;
    CHECK(m > 0);
    CHECK(m <= 1.0);
    CHECK(m > prev);
    prev = m;
  }
}

TEST_CASE("f_a_down vanishes for a on the bottom boundary") {
  Domain d = build_rectangle(4, 3);
  IsingCoupling k(beta_critical());
  auto f = two_point_observable(d, {{1, 0}, -1}, k);
  for (auto& [z, v] : f) CHECK(std::abs(v) == 0.0);
}

TEST_CASE("straight path has zero winding") {
  // Domain: 1x3 column of faces; source at bottom edge, target at top edge.
  Domain d = build_from_faces({{1, 1}, {1, 3}, {1, 5}});
  ContourEngine eng(d, {{{1, 0}, {0, 1}}, {{1, 6}, {0, -1}}});
  // Parity forces both interior dual edges in; the path runs straight up.
  PathData pd = eng.extract_paths(0b11, TurnRule::left);
  REQUIRE(pd.qturns.size() == 1);
  CHECK(pd.qturns[0] == 0);
  CHECK(pd.pairing[0] == std::pair<int, int>{0, 1});
  CHECK(pd.crossing_sign == 1);
}

TEST_CASE("turn-rule independence of total weight") {
  // Exhaustive over a 3x3-face domain with a source/target pair: the summed
  // observable must not depend on the degree-4 resolution rule.
  Domain d = build_rectangle(4, 4);
  IsingCoupling k(0.5);
  auto fl = two_point_observable(d, {{3, 0}, +1}, k, TurnRule::left);
  auto fr = two_point_observable(d, {{3, 0}, +1}, k, TurnRule::right);
  for (auto& [z, v] : fl) CHECK(std::abs(v - fr[z]) < 1e-13);
}

TEST_CASE("threaded enumeration is bit-identical") {
  Domain d = build_rectangle(5, 4);
  IsingCoupling k(0.55);
  double z1 = partition_function_contour(d, k);
  setenv("ISING_THREADS", "3", 1);
  double z3 = partition_function_contour(d, k);
  unsetenv("ISING_THREADS");
  CHECK(z1 == z3);
}
