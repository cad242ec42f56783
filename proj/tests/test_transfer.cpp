#include <catch2/catch_amalgamated.hpp>

#include "ising/observables.hpp"
#include "ising/propagator.hpp"
#include "ising/transfer.hpp"

using namespace ising;
using Catch::Approx;

namespace {

ComplexMatrix cid(int dim) { return ComplexMatrix::Identity(dim, dim); }

double md(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("spin basis encoding") {
  SpinBasis basis(0, 3);
  CHECK(basis.n == 3);
  CHECK(basis.dim == 8);
  CHECK(basis.spin(0, 0) == 1);
  CHECK(basis.spin(0, 3) == 1);  // sigma_b fixed +1
  CHECK(basis.spin(0b101, 0) == -1);
  CHECK(basis.spin(0b101, 1) == 1);
  CHECK(basis.spin(0b101, 2) == -1);
  CHECK_THROWS_AS(SpinBasis(0, 11), std::invalid_argument);
}

TEST_CASE("half horizontal transfer matrix entries") {
  IsingCoupling k(0.5);
  SpinBasis basis(0, 2);  // |I| = 3
  auto h = build_vh_half(basis, k);
  CHECK(h.m(0, 0) == Approx(std::exp(k.beta)));       // (+,+,+)
  CHECK(h.m(0b10, 0b10) == Approx(std::exp(-k.beta)));  // (+,-,+)
}

TEST_CASE("half horizontal transfer matrix equals Clifford exponential") {
  IsingCoupling k(0.5);
  SpinBasis basis(0, 3);  // |I| = 4
  ComplexMatrix prod = cid(basis.dim);
  for (int j = 0; j < basis.n; ++j) {
    ComplexMatrix qp = cd(0, 1) * clifford_q(basis, j).m * clifford_p(basis, j).m;
    prod = prod * (std::cosh(k.beta / 2) * cid(basis.dim) + std::sinh(k.beta / 2) * qp);
  }
  CHECK(md(prod, build_vh_half(basis, k).m.cast<cd>()) < 1e-10);
}

TEST_CASE("vertical transfer matrix entries and product form") {
  IsingCoupling k(0.6);
  SpinBasis b3(0, 2);
  auto v3 = build_vv(b3, k);
  CHECK(v3.m(0, 0) == Approx(std::exp(3 * k.beta)));
  CHECK(v3.m(0, 1) == 0.0);  // endpoint spin flipped at site a

  // Exponential form with the stated prefactor, checked for even and odd |I|.
  for (int b : {3, 2}) {
    SpinBasis basis(0, b);
    double bstar = std::atanh(std::exp(-2 * k.beta));
    ComplexMatrix prod = cid(basis.dim);
    for (int site = 1; site < b; ++site) {
      ComplexMatrix pq =
          cd(0, 1) * clifford_p(basis, site - 1).m * clifford_q(basis, site).m;
      prod = prod * (std::cosh(bstar) * cid(basis.dim) + std::sinh(bstar) * pq);
    }
    double pref = std::exp(2 * k.beta) * std::pow(2 * k.S, (b + 1) / 2.0 - 1);
    auto vv = build_vv(basis, k);
    CHECK(md(pref * prod, vv.m.cast<cd>()) < 1e-9 * vv.m.maxCoeff());
  }
}

TEST_CASE("Clifford relations") {
  IsingCoupling k(0.5);
  for (int b : {2, 3, 5}) {  // |I| up to 6
    SpinBasis basis(0, b);
    std::vector<ComplexMatrix> p, q, psi, psib;
    for (int j = 0; j < basis.n; ++j) {
      p.push_back(clifford_p(basis, j).m);
      q.push_back(clifford_q(basis, j).m);
      psi.push_back(clifford_psi(basis, j).m);
      psib.push_back(clifford_psibar(basis, j).m);
    }
    for (int i = 0; i < basis.n; ++i)
      for (int j = 0; j < basis.n; ++j) {
        double d = i == j ? 1 : 0;
        CHECK(md(p[i] * p[j] + p[j] * p[i], 2 * d * cid(basis.dim)) < 1e-12);
        CHECK(md(q[i] * q[j] + q[j] * q[i], 2 * d * cid(basis.dim)) < 1e-12);
        CHECK(md(p[i] * q[j] + q[j] * p[i], ComplexMatrix::Zero(basis.dim, basis.dim)) <
              1e-12);
        CHECK(md(psi[i] * psi[j] + psi[j] * psi[i], -2 * d * cid(basis.dim)) < 1e-12);
        CHECK(md(psib[i] * psib[j] + psib[j] * psib[i], 2 * d * cid(basis.dim)) < 1e-12);
        CHECK(md(psi[i] * psib[j] + psib[j] * psi[i],
                 ComplexMatrix::Zero(basis.dim, basis.dim)) < 1e-12);
      }
  }
}

TEST_CASE("all-plus state is annihilated by p_k + i q_k") {
  SpinBasis basis(0, 4);
  ComplexVector eplus = ComplexVector::Zero(basis.dim);
  eplus(0) = 1;
  for (int j = 0; j < basis.n; ++j) {
    ComplexMatrix a = clifford_p(basis, j).m + cd(0, 1) * clifford_q(basis, j).m;
    ComplexMatrix b = clifford_p(basis, j).m - cd(0, 1) * clifford_q(basis, j).m;
    CHECK((a * eplus).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((eplus.transpose() * b).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("induced rotation: identity and bulk coefficients") {
  SpinBasis basis(0, 3);
  TransferOp id{RealMatrix::Identity(basis.dim, basis.dim), "custom"};
  CHECK(md(induced_rotation_bruteforce(id, basis), cid(2 * basis.n)) < 1e-12);

  IsingCoupling k(0.5);
  auto M = induced_rotation_bruteforce(build_transfer(basis, k), basis);
  int n = basis.n;
  // T_V^{-1}(psi_1) bulk coefficients.
  CHECK(std::abs(M(1, 1) - cd(k.C * k.C / k.S, 0)) < 1e-10);
  CHECK(std::abs(M(1, 0) - cd(-0.5, -1 / (2 * k.S))) < 1e-10);
  CHECK(std::abs(M(1, 2) - cd(-0.5, 1 / (2 * k.S))) < 1e-10);
  CHECK(std::abs(M(1, n + 1) - cd(-k.C, 0)) < 1e-10);
  CHECK(std::abs(M(1, n) - cd(k.C / (2 * k.S), 0)) < 1e-10);
  CHECK(std::abs(M(1, n + 2) - cd(k.C / (2 * k.S), 0)) < 1e-10);
}

TEST_CASE("induced rotation equals the complexified propagator") {
  for (double beta : {beta_critical(), 0.4}) {
    IsingCoupling k(beta);
    for (int b : {2, 3, 4}) {  // |I| in {3,4,5}
      SpinBasis basis(0, b);
      auto brute = induced_rotation_bruteforce(build_transfer(basis, k), basis);
      auto closed = induced_rotation_closed_form(basis.n, k);
      auto cp = complexified_propagator(basis.n, k);
      CHECK(md(brute, closed) < 1e-10);
      CHECK((brute - cp.m).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("induced rotation commutes with R and J") {
  IsingCoupling k(0.7);
  int n = 4;
  auto M = induced_rotation_closed_form(n, k);
  ComplexMatrix R = ComplexMatrix::Zero(2 * n, 2 * n);
  ComplexMatrix Sw = ComplexMatrix::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    R(j, n + (n - 1 - j)) = 1;  // R: psi_j <-> psibar_{a+b-k}
    R(n + j, n - 1 - j) = 1;
    Sw(j, n + j) = 1;  // J: psi_j <-> psibar_j (plus conjugation)
    Sw(n + j, j) = 1;
  }
  CHECK(md(R * M, M * R) < 1e-12);
  CHECK(md(Sw * M, M.conjugate() * Sw) < 1e-12);
}

TEST_CASE("partition function: transfer matrix vs oracles") {
  IsingCoupling k(0.5);
  RectangleSpec box{4, 4};
  Domain dom = build_rectangle(4, 4);
  double z_tm = partition_function_tm(box, k);
  auto oracle = spin_enum_oracle(dom, k);
  CHECK(z_tm == Approx(oracle.z_plus).epsilon(1e-12));
  double z_contour = partition_function_contour(dom, k);
  CHECK(z_tm * std::exp(-k.beta * double(dom.edges.size())) ==
        Approx(z_contour).epsilon(1e-10));
}

TEST_CASE("spin correlations against enumeration") {
  RectangleSpec box{4, 4};
  Domain dom = build_rectangle(4, 4);
  for (double beta : {0.5, 2.0}) {
    IsingCoupling k(beta);
    double c = spin_correlation(box, {{2, 2}}, k);
    auto oracle = spin_enum_oracle(dom, k, {{2, 2}});
    CHECK(c == Approx(oracle.correlation).epsilon(1e-10));
    CHECK(c > 0);
    CHECK(c < 1);
    cd op = fermion_correlation(box, {{FermionInsertion::Kind::sigma, {2, 2}}}, k);
    CHECK(std::abs(op - cd(oracle.correlation, 0)) < 1e-12);
  }
  IsingCoupling cold(3.0);
  CHECK(spin_correlation(box, {{2, 2}}, cold) == Approx(1.0).margin(1e-3));
}

TEST_CASE("empty insertion list normalizes to one") {
  IsingCoupling k(0.8);
  CHECK(std::abs(fermion_correlation({4, 3}, {}, k) - cd(1, 0)) < 1e-14);
}

TEST_CASE("two-point correspondence with contour observables") {
  RectangleSpec box{4, 4};
  Domain dom = build_rectangle(4, 4);
  for (double beta : {beta_critical(), 0.55}) {
    IsingCoupling k(beta);
    // One boundary and one interior source; the interior one exercises the
    // f^down parts of the relations.  Insertions are applied as written, so
    // z is kept at or above the source row (the proof anticommutes otherwise).
    for (Coord2 a : {Coord2{3, 0}, Coord2{3, 2}}) {
      auto up = two_point_observable(dom, {a, +1}, k);
      auto down = two_point_observable(dom, {a, -1}, k);
      TransferSystem sys(box, k);
      auto [psi_a, psibar_a] = sys.fermion_pair(a);
      for (Coord2 z : dom.edges) {
        if (z == a || z.y < a.y) continue;
        auto [psi_z, psibar_z] = sys.fermion_pair(z);
        cd fu = up.at(z), fd = down.at(z);
        CHECK(std::abs(sys.vacuum_ratio(psi_z * psi_a) - (-fu + cd(0, 1) * fd)) < 1e-10);
        CHECK(std::abs(sys.vacuum_ratio(psi_z * psibar_a) - (fu + cd(0, 1) * fd)) < 1e-10);
        // Sign fixed by J-conjugation: psibar = i conj(psi) entrywise, so
        // <psibar psibar> = -conj(<psi psi>) = +conj(f_up) + i conj(f_down).
        CHECK(std::abs(sys.vacuum_ratio(psibar_z * psibar_a) -
                       (std::conj(fu) + cd(0, 1) * std::conj(fd))) < 1e-10);
      }
    }
  }
}

TEST_CASE("vertical extension satisfies face and boundary relations") {
  IsingCoupling k(0.6);
  RectangleSpec box{5, 4};
  TransferSystem sys(box, k);
  auto eqs = detail::face_equations(k);

  // Operator-valued face relations on every face of the box.
  Domain dom = build_rectangle(5, 4);
  double worst = 0;
  for (Coord2 f : dom.faces) {
    auto slots = Domain::face_edges(f);
    std::vector<std::pair<ComplexMatrix, ComplexMatrix>> ops;
    for (Coord2 e : slots) ops.push_back(sys.fermion_pair(e));
    for (const auto& eq : eqs) {
      ComplexMatrix r = ComplexMatrix::Zero(sys.basis.dim, sys.basis.dim);
      for (const auto& t : eq.terms)
        r += t.a * ops[size_t(t.slot)].first + t.b * ops[size_t(t.slot)].second;
      worst = std::max(worst, r.cwiseAbs().maxCoeff());
    }
  }
  CHECK(worst < 1e-9);

  // Riemann relations on the left and right sides.
  for (int y = 0; y < sys.N; ++y) {
    auto [pl, pbl] = sys.fermion_pair({0, 2 * y + 1});
    auto [pr, pbr] = sys.fermion_pair({2 * (box.width - 1), 2 * y + 1});
    CHECK(md(pl + cd(0, 1) * pbl, ComplexMatrix::Zero(sys.basis.dim, sys.basis.dim)) <
          1e-10);
    CHECK(md(pr - cd(0, 1) * pbr, ComplexMatrix::Zero(sys.basis.dim, sys.basis.dim)) <
          1e-10);
  }

  // Bottom-row state relation (psi(z) + psibar(z)) e_+ = 0.
  ComplexVector eplus = ComplexVector::Zero(sys.basis.dim);
  eplus(0) = 1;
  for (int j = 0; j < sys.basis.n; ++j) {
    auto [pz, pbz] = sys.fermion_pair({2 * j + 1, 0});
    CHECK(((pz + pbz) * eplus).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("fermion two-point function is massive s-holomorphic in z") {
  IsingCoupling k(0.7);
  RectangleSpec box{5, 4};
  Domain dom = build_rectangle(5, 4);
  TransferSystem sys(box, k);
  // a sits on the bottom row so every z has z.y >= a.y; the operator product
  // psi(z) psibar(a) is then uniformly ordered across the whole field.
  Coord2 a{3, 0};
  auto [psi_a, psibar_a] = sys.fermion_pair(a);
  ComplexField f;
  for (Coord2 z : dom.edges) {
    auto [psi_z, psibar_z] = sys.fermion_pair(z);
    f[z] = sys.vacuum_ratio(psi_z * psibar_a);
  }
  CHECK(check_sholomorphic(f, dom, k, {a}) < 1e-9);
}

TEST_CASE("correlation antisymmetry under adjacent swaps") {
  IsingCoupling k(0.6);
  RectangleSpec box{4, 4};
  using K = FermionInsertion::Kind;
  // Equal-time generators at distinct sites anticommute exactly, so swapping
  // two same-row insertions flips the sign of the correlation.  (Insertions in
  // different rows have a nonvanishing anticommutator and do not obey this.)
  std::vector<std::vector<FermionInsertion>> orders{
      {{K::psi, {3, 2}}, {K::psibar, {5, 2}}},
      {{K::psi, {1, 4}}, {K::psi, {5, 4}}},
      {{K::psibar, {3, 0}}, {K::psi, {5, 0}}}};
  for (auto& order : orders) {
    std::vector<FermionInsertion> swapped{order[1], order[0]};
    cd v1 = fermion_correlation(box, order, k);
    cd v2 = fermion_correlation(box, swapped, k);
    CHECK(std::abs(v1 + v2) < 1e-12 * std::max(1.0, std::abs(v1)));
  }
}

TEST_CASE("R covariance: reflect positions and exchange psi with psibar") {
  IsingCoupling k(0.75);
  RectangleSpec box{5, 4};
  using K = FermionInsertion::Kind;
  int ab2 = 2 * (box.width - 1);  // doubled a + b
  auto reflect = [&](const FermionInsertion& ins) {
    K kk = ins.kind == K::psi ? K::psibar : K::psi;
    return FermionInsertion{kk, {ab2 - ins.z.x, ins.z.y}};
  };
  // R maps psi_k to psibar at the mirrored site and vice versa, but it negates
  // the Clifford bilinear form: (R psi, R psi) = (psibar, psibar) = +2 Id while
  // (psi, psi) = -2 Id.  Every two-point correlation therefore changes sign
  // under reflection, and a 2m-point correlation picks up (-1)^m.
  std::vector<FermionInsertion> ins2{{K::psi, {3, 2}}, {K::psibar, {5, 4}}};
  std::vector<FermionInsertion> refl2{reflect(ins2[0]), reflect(ins2[1])};
  CHECK(std::abs(fermion_correlation(box, ins2, k) + fermion_correlation(box, refl2, k)) <
        1e-10);

  std::vector<FermionInsertion> ins4{
      {K::psi, {1, 2}}, {K::psibar, {3, 2}}, {K::psi, {5, 4}}, {K::psibar, {7, 4}}};
  std::vector<FermionInsertion> refl4;
  for (auto& e : ins4) refl4.push_back(reflect(e));
  CHECK(std::abs(fermion_correlation(box, ins4, k) - fermion_correlation(box, refl4, k)) <
        1e-10);
}

TEST_CASE("transfer spectrum matches the propagator spectrum") {
  for (double beta : {beta_critical(), 0.5}) {
    IsingCoupling k(beta);
    SpinBasis basis(0, 3);  // |I| = 4, n = 3
    auto V = build_transfer(basis, k);
    auto spec = tm_spectrum(V);
    REQUIRE(int(spec.size()) == basis.dim);
    for (double v : spec) CHECK(v > 0);
    auto split = spectral_split(propagator_matrix(basis.n, k));
    auto gamma = gamma_spectrum(split, spec[0]);
    REQUIRE(gamma.size() == spec.size());
    for (size_t i = 0; i < spec.size(); ++i)
      CHECK(spec[i] == Approx(gamma[i]).epsilon(1e-8));
  }
}

TEST_CASE("ladder relation between transfer eigenvectors and eigenoperators") {
  IsingCoupling k(0.5);
  SpinBasis basis(0, 3);
  auto V = build_transfer(basis, k);
  auto M = induced_rotation_bruteforce(V, basis);  // matrix of T_V^{-1}
  Eigen::ComplexEigenSolver<ComplexMatrix> es(M.transpose());
  std::vector<ComplexMatrix> gens;
  for (int j = 0; j < basis.n; ++j) gens.push_back(clifford_psi(basis, j).m);
  for (int j = 0; j < basis.n; ++j) gens.push_back(clifford_psibar(basis, j).m);
  RealVector vac = physical_vacuum(V);
  double lam0 = tm_spectrum(V)[0];
  for (int i = 0; i < 2 * basis.n; ++i) {
    cd mu = es.eigenvalues()(i);  // T_V^{-1}(a) = mu a  =>  T_V(a) = a / mu
    ComplexMatrix a = ComplexMatrix::Zero(basis.dim, basis.dim);
    for (int l = 0; l < 2 * basis.n; ++l) a += es.eigenvectors()(l, i) * gens[size_t(l)];
    ComplexVector av = a * vac.cast<cd>();
    if (av.norm() < 1e-8) continue;
    ComplexVector lhs = V.m.cast<cd>() * av;
    ComplexVector rhs = (lam0 / mu) * av;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-8 * av.norm());
  }
}

TEST_CASE("degenerate top eigenvalue is rejected") {
  TransferOp flat{RealMatrix::Identity(4, 4), "custom"};
  CHECK_THROWS_AS(physical_vacuum(flat), std::runtime_error);
}

TEST_CASE("multipoint observables equal fermion correlations") {
  Domain dom = build_rectangle(5, 4);
  RectangleSpec box{5, 4};
  using K = FermionInsertion::Kind;
  const cd lam = lambda_pow(1), lam3 = lambda_pow(3);
  // up insertion <-> up stub with eps = lambda; down insertion <-> down stub
  // with eps = lambda^3 (note (lambda^3)^2 = -i, the complex unit for a down
  // step).
  auto src = [&](Coord2 z, bool up) {
    return up ? MultiSource{z, {0, 1}, lam} : MultiSource{z, {0, -1}, lam3};
  };
  auto ins = [&](Coord2 z, bool up) {
    return FermionInsertion{up ? K::psi_up : K::psi_down, z};
  };
  for (double beta : {beta_critical(), 0.6}) {
    IsingCoupling k(beta);
    SECTION("two points, beta=" + std::to_string(beta)) {
      for (bool u1 : {true, false})
        for (bool u2 : {true, false}) {
          MultiSourceSpec spec{{src({1, 2}, u1), src({5, 2}, u2)}};
          cd f = multipoint_observable(dom, spec, k);
          cd c = fermion_correlation(box, {ins({5, 2}, u2), ins({1, 2}, u1)}, k);
          CHECK(std::abs(f - c) < 1e-10);
        }
    }
    SECTION("four points, beta=" + std::to_string(beta)) {
      std::vector<std::pair<Coord2, bool>> pts{
          {{1, 2}, true}, {{5, 2}, false}, {{3, 4}, false}, {{7, 4}, true}};
      MultiSourceSpec spec;
      std::vector<FermionInsertion> fi;
      for (auto& [z, u] : pts) spec.sources.push_back(src(z, u));
      for (auto it = pts.rbegin(); it != pts.rend(); ++it)
        fi.push_back(ins(it->first, it->second));
      cd f = multipoint_observable(dom, spec, k);
      cd c = fermion_correlation(box, fi, k);
      CHECK(std::abs(f - c) < 1e-10);
    }
  }
}

TEST_CASE("Pfaffian formulas for fermions and multipoint observables") {
  IsingCoupling k(0.65);
  RectangleSpec box{5, 3};
  Domain dom = build_rectangle(5, 3);
  using K = FermionInsertion::Kind;
  std::vector<FermionInsertion> fi{
      {K::psi, {1, 0}}, {K::psibar, {3, 0}}, {K::psi, {5, 2}}, {K::psibar, {7, 4}}};
  cd four = fermion_correlation(box, fi, k);
  ComplexMatrix M = ComplexMatrix::Zero(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      M(i, j) = fermion_correlation(box, {fi[size_t(i)], fi[size_t(j)]}, k);
      M(j, i) = -M(i, j);
    }
  CHECK(std::abs(four - pfaffian_complex(M)) < 1e-9);

  // Multipoint observable Pfaffian: pairwise observables with inherited signs.
  const cd lam = lambda_pow(1), lam3 = lambda_pow(3);
  std::vector<MultiSource> srcs{{{1, 0}, {0, 1}, lam},
                                {{5, 2}, {0, -1}, lam3},
                                {{3, 2}, {0, 1}, lam},
                                {{7, 2}, {0, 1}, lam}};
  cd f4 = multipoint_observable(dom, MultiSourceSpec{srcs}, k);
  ComplexMatrix P = ComplexMatrix::Zero(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) {
      P(i, j) =
          multipoint_observable(dom, MultiSourceSpec{{srcs[size_t(i)], srcs[size_t(j)]}}, k);
      P(j, i) = -P(i, j);
    }
  CHECK(std::abs(f4 - pfaffian_complex(P)) < 1e-9);
}
