#include <catch2/catch_amalgamated.hpp>

#include "ising/lattice.hpp"

using namespace ising;

TEST_CASE("coordinate parity classification") {
  CHECK(Coord2{0, 0}.is_vertex());
  CHECK(Coord2{3, 2}.is_hedge());
  CHECK(Coord2{2, 3}.is_vedge());
  CHECK(Coord2{1, 1}.is_face());
  CHECK(Coord2{-1, 3}.is_face());
  CHECK_FALSE(Coord2{1, 2}.is_face());
}

TEST_CASE("rectangle counts") {
  SECTION("width=3 height=2: 2-face strip") {
    Domain d = build_rectangle(3, 2);
    CHECK(d.faces.size() == 2);
    CHECK(d.edges.size() == 7);
    CHECK(d.boundary.size() == 6);
  }
  SECTION("width=4 height=4") {
    Domain d = build_rectangle(4, 4);
    CHECK(d.faces.size() == 9);
    CHECK(d.edges.size() == 24);
    CHECK(d.boundary.size() == 12);  // 24 edges, 12 interior (= dual edges)
  }
  SECTION("too small") {
    CHECK_THROWS_AS(build_rectangle(2, 4), std::invalid_argument);
    CHECK_THROWS_AS(build_rectangle(4, 1), std::invalid_argument);
  }
}

TEST_CASE("build_from_faces validation") {
  SECTION("L-shape is fine") {
    Domain d = build_from_faces({{1, 1}, {3, 1}, {1, 3}});
    CHECK(d.faces.size() == 3);
    CHECK(d.edges.size() == 10);
  }
  SECTION("non-face coordinates rejected") {
    CHECK_THROWS_AS(build_from_faces({{1, 2}}), std::invalid_argument);
  }
  SECTION("disconnected rejected") {
    CHECK_THROWS_AS(build_from_faces({{1, 1}, {5, 5}}), std::invalid_argument);
  }
  SECTION("diagonal touching is not edge-connected") {
    CHECK_THROWS_AS(build_from_faces({{1, 1}, {3, 3}}), std::invalid_argument);
  }
  SECTION("annulus rejected by Euler check") {
    std::vector<Coord2> ring;
    for (int i = 0; i < 3; ++i) {
      ring.push_back({2 * i + 1, 1});
      ring.push_back({2 * i + 1, 5});
    }
    ring.push_back({1, 3});
    ring.push_back({5, 3});
    CHECK_THROWS_AS(build_from_faces(ring), std::invalid_argument);
  }
}

TEST_CASE("boundary side tags") {
  Domain d = build_rectangle(4, 3);
  for (const auto& b : d.boundary) {
    if (b.edge.y == 0) CHECK(b.side == Side::bottom);
    if (b.edge.y == 4) CHECK(b.side == Side::top);
    if (b.edge.x == 0) CHECK(b.side == Side::left);
    if (b.edge.x == 6) CHECK(b.side == Side::right);
  }
}

TEST_CASE("split rectangle on a vertex line") {
  Domain d = build_rectangle(5, 5);
  auto [lo, hi] = split_domain(d, 1);
  auto b = cut_row(d, 1);
  CHECK(b.size() == 4);
  CHECK(lo.faces.size() == 4);
  CHECK(hi.faces.size() == 12);
  // The cut row belongs to both halves.
  for (Coord2 e : b) {
    CHECK(lo.has_edge(e));
    CHECK(hi.has_edge(e));
  }
  CHECK_THROWS_AS(split_domain(d, 0), std::invalid_argument);
}
