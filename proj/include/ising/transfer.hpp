#pragma once

// Row-to-row transfer matrix of the Ising model on a rectangle, Clifford
// generators p_k / q_k and the fermions psi_k / psibar_k built from them,
// the induced rotation (conjugation of generators by the transfer matrix),
// fermion and spin correlation functions, and the transfer-matrix spectrum.
//
// Conventions.  The rectangle has vertex columns I = {a, .., b} and vertex
// rows J = {0, .., N}; spins live on vertices and the state space is
// S_+ = span{ e_sigma : sigma_b = +1 }, of dimension 2^{b-a}.  Half-integer
// column positions k in I* = {a+1/2, .., b-1/2} index the generators; we
// address them by j = 0 .. n-1 with k = a + j + 1/2.  Positions of operator
// insertions use the doubled integer coordinates of lattice.hpp.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ising/coupling.hpp"
#include "ising/lattice.hpp"
#include "ising/numerics.hpp"
#include "ising/shol.hpp"

namespace ising {

struct RectangleSpec {
  int width;   // number of vertex columns |I|  (>= 3)
  int height;  // number of vertex rows  N + 1  (>= 2)
};

struct SpinBasis {
  int a, b;  // interval endpoints; sigma_b fixed to +1
  int n;     // |I*| = b - a free spins, bit j <-> site a + j
  int dim;   // 2^n

  SpinBasis(int a_, int b_) : a(a_), b(b_), n(b_ - a_), dim(1 << (b_ - a_)) {
    if (n < 1) throw std::invalid_argument("SpinBasis: need b > a");
    if (n > 10) throw std::invalid_argument("SpinBasis: |I*| > 10 unsupported");
  }

  // Spin value (+1/-1) at integer site in [a, b] for basis state m.
  int spin(int m, int site) const {
    if (site < a || site > b) throw std::out_of_range("SpinBasis::spin: site");
    if (site == b) return +1;
    return (m >> (site - a)) & 1 ? -1 : +1;
  }
};

struct TransferOp {
  RealMatrix m;
  std::string label;
};

struct CliffordGen {
  ComplexMatrix m;
  std::string label;
};

// (V^h)^{1/2}: diagonal, entry exp(beta/2 * sum of horizontal bond energies).
inline TransferOp build_vh_half(const SpinBasis& basis, const IsingCoupling& k) {
  RealMatrix m = RealMatrix::Zero(basis.dim, basis.dim);
  for (int s = 0; s < basis.dim; ++s) {
    double bonds = 0;
    for (int i = basis.a; i < basis.b; ++i) bonds += basis.spin(s, i) * basis.spin(s, i + 1);
    m(s, s) = std::exp(k.beta / 2 * bonds);
  }
  return {std::move(m), "Vh_half"};
}

// V^v: matrix element exp(beta * sum_i sigma_i rho_i) when the endpoint
// spins agree, zero otherwise (sigma_b = rho_b = +1 holds on S_+).
inline TransferOp build_vv(const SpinBasis& basis, const IsingCoupling& k) {
  RealMatrix m = RealMatrix::Zero(basis.dim, basis.dim);
  for (int s = 0; s < basis.dim; ++s)
    for (int r = 0; r < basis.dim; ++r) {
      if (basis.spin(s, basis.a) != basis.spin(r, basis.a)) continue;
      double dot = 0;
      for (int i = basis.a; i <= basis.b; ++i) dot += basis.spin(s, i) * basis.spin(r, i);
      m(s, r) = std::exp(k.beta * dot);
    }
  return {std::move(m), "Vv"};
}

inline TransferOp build_transfer(const SpinBasis& basis, const IsingCoupling& k) {
  RealMatrix h = build_vh_half(basis, k).m;
  return {h * build_vv(basis, k).m * h, "V"};
}

// p_k e_sigma = sigma_{k+1/2} e_tau, q_k e_sigma = i sigma_{k-1/2} e_tau,
// where tau flips every spin strictly left of k = a + j + 1/2.
inline CliffordGen clifford_p(const SpinBasis& basis, int j) {
  if (j < 0 || j >= basis.n) throw std::out_of_range("clifford_p: index");
  ComplexMatrix m = ComplexMatrix::Zero(basis.dim, basis.dim);
  int flip = (1 << (j + 1)) - 1;  // bits 0..j  <->  sites a..a+j  (< k)
  for (int s = 0; s < basis.dim; ++s)
    m(s ^ flip, s) = basis.spin(s, basis.a + j + 1);
  return {std::move(m), "p_" + std::to_string(j)};
}

inline CliffordGen clifford_q(const SpinBasis& basis, int j) {
  if (j < 0 || j >= basis.n) throw std::out_of_range("clifford_q: index");
  ComplexMatrix m = ComplexMatrix::Zero(basis.dim, basis.dim);
  int flip = (1 << (j + 1)) - 1;
  for (int s = 0; s < basis.dim; ++s)
    m(s ^ flip, s) = cd(0, 1) * double(basis.spin(s, basis.a + j));
  return {std::move(m), "q_" + std::to_string(j)};
}

inline CliffordGen clifford_psi(const SpinBasis& basis, int j) {
  cd c = cd(0, 1) / std::sqrt(2.0);
  return {c * (clifford_p(basis, j).m + clifford_q(basis, j).m), "psi_" + std::to_string(j)};
}

inline CliffordGen clifford_psibar(const SpinBasis& basis, int j) {
  double c = 1.0 / std::sqrt(2.0);
  return {c * (clifford_p(basis, j).m - clifford_q(basis, j).m), "psibar_" + std::to_string(j)};
}

namespace detail {

// Scalar s with u v + v u = s Id; throws if the anticommutator is not scalar.
inline cd anticommutator_scalar(const ComplexMatrix& u, const ComplexMatrix& v) {
  ComplexMatrix ac = u * v + v * u;
  cd s = ac.trace() / double(ac.rows());
  double scale = std::max(1.0, u.cwiseAbs().maxCoeff() * v.cwiseAbs().maxCoeff());
  if ((ac - s * ComplexMatrix::Identity(ac.rows(), ac.cols())).cwiseAbs().maxCoeff() >
      1e-9 * scale)
    throw std::runtime_error("anticommutator_scalar: not proportional to identity");
  return s;
}

}  // namespace detail

// Coefficients (c_0..c_{n-1}, d_0..d_{n-1}) of op = sum c_l psi_l + d_l psibar_l
// in a given generator basis, extracted through the bilinear form
// (psi_k,psi_l) = -2 delta, (psibar_k,psibar_l) = +2 delta, (psi,psibar) = 0.
inline ComplexVector clifford_coefficients(const ComplexMatrix& op,
                                           const std::vector<ComplexMatrix>& psis,
                                           const std::vector<ComplexMatrix>& psibars) {
  int n = int(psis.size());
  ComplexVector out(2 * n);
  for (int l = 0; l < n; ++l) {
    out(l) = -detail::anticommutator_scalar(op, psis[size_t(l)]) / 2.0;
    out(l + n) = detail::anticommutator_scalar(op, psibars[size_t(l)]) / 2.0;
  }
  return out;
}

// Matrix of T_V^{-1} = (w -> V^{-1} w V) in the (psi, psibar) basis, row
// convention: row r holds the coefficients of the image of the r-th
// generator, so the top-left block matches the coefficient table of P_beta.
inline ComplexMatrix induced_rotation_bruteforce(const TransferOp& V, const SpinBasis& basis) {
  int n = basis.n;
  Eigen::PartialPivLU<RealMatrix> lu(V.m);
  RealMatrix Vinv = lu.inverse();
  std::vector<ComplexMatrix> psis, psibars;
  for (int j = 0; j < n; ++j) {
    psis.push_back(clifford_psi(basis, j).m);
    psibars.push_back(clifford_psibar(basis, j).m);
  }
  ComplexMatrix out(2 * n, 2 * n);
  for (int r = 0; r < 2 * n; ++r) {
    const ComplexMatrix& w = r < n ? psis[size_t(r)] : psibars[size_t(r - n)];
    ComplexMatrix img = Vinv * w * V.m;
    out.row(r) = clifford_coefficients(img, psis, psibars).transpose();
  }
  return out;
}

// Same matrix from the closed-form conjugation rules for (V^h)^{1/2} and V^v,
// composed as V^{-1} w V = H^{-1} (V^v)^{-1} (H^{-1} w H) V^v H.
inline ComplexMatrix induced_rotation_closed_form(int n, const IsingCoupling& k) {
  if (n < 2) throw std::invalid_argument("induced_rotation_closed_form: n < 2");
  // Row convention in the (p, q) basis: index j = p_j, n + j = q_j.
  ComplexMatrix H = ComplexMatrix::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    H(j, j) = k.c;
    H(j, n + j) = cd(0, -k.s);
    H(n + j, j) = cd(0, k.s);
    H(n + j, n + j) = k.c;
  }
  ComplexMatrix Vv = ComplexMatrix::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    if (j < n - 1) {  // p_{k_R} is fixed
      Vv(j, j) = k.C / k.S;
      Vv(j, n + j + 1) = cd(0, 1) / k.S;
    } else {
      Vv(j, j) = 1;
    }
    if (j > 0) {  // q_{k_L} is fixed
      Vv(n + j, j - 1) = cd(0, -1) / k.S;
      Vv(n + j, n + j) = k.C / k.S;
    } else {
      Vv(n + j, n + j) = 1;
    }
  }
  ComplexMatrix pq = H * Vv * H;
  // Change of basis to (psi, psibar): rows combine generator images, columns
  // re-express p_l, q_l in terms of psi_l, psibar_l.
  ComplexMatrix Psi = ComplexMatrix::Zero(2 * n, 2 * n);
  ComplexMatrix Xi = ComplexMatrix::Zero(2 * n, 2 * n);
  const double r2 = std::sqrt(2.0);
  for (int l = 0; l < n; ++l) {
    Psi(l, l) = cd(0, 1) / r2;
    Psi(l, n + l) = cd(0, 1) / r2;
    Psi(n + l, l) = 1 / r2;
    Psi(n + l, n + l) = -1 / r2;
    Xi(l, l) = cd(0, -1) / r2;
    Xi(l, n + l) = 1 / r2;
    Xi(n + l, l) = cd(0, -1) / r2;
    Xi(n + l, n + l) = -1 / r2;
  }
  return Psi * pq * Xi;
}

// Shared state for correlation evaluations on one rectangle: the transfer
// matrix, its eigendecomposition (for V^{+-y}), and the fermion generators.
struct TransferSystem {
  SpinBasis basis;
  IsingCoupling coupling;
  int N;  // number of transfer steps = height - 1
  TransferOp V;
  SymEig eig;
  std::vector<ComplexMatrix> psis, psibars;

  TransferSystem(RectangleSpec box, const IsingCoupling& k)
      : basis(0, box.width - 1), coupling(k), N(box.height - 1), V{RealMatrix(), "V"} {
    if (box.width < 3 || box.height < 2)
      throw std::invalid_argument("TransferSystem: box too small");
    V = build_transfer(basis, k);
    eig = sym_eig(V.m);
    if (eig.values.minCoeff() <= 0)
      throw std::runtime_error("TransferSystem: non-positive transfer spectrum");
    for (int j = 0; j < basis.n; ++j) {
      psis.push_back(clifford_psi(basis, j).m);
      psibars.push_back(clifford_psibar(basis, j).m);
    }
  }

  RealMatrix power(double y) const {
    RealVector d = eig.values.array().pow(y);
    return eig.vectors * d.asDiagonal() * eig.vectors.transpose();
  }

  ComplexMatrix time_dep(const ComplexMatrix& op, int y) const {
    if (y == 0) return op;
    return power(-y) * op * power(y);
  }

  // <e_+| V^N op |e_+> / <e_+| V^N |e_+>; e_+ is basis state 0.
  cd vacuum_ratio(const ComplexMatrix& op) const {
    RealMatrix vn = power(N);
    cd num = (vn.row(0).cast<cd>() * op.col(0)).value();
    return num / vn(0, 0);
  }

  // (psi(z), psibar(z)) for any edge z in doubled coordinates.  Horizontal
  // edges are the defining positions; vertical edges get the unique extension
  // solving the face relations from the row below (plus the Riemann boundary
  // relation psi -+ i psibar = 0 on the left/right sides).
  std::pair<ComplexMatrix, ComplexMatrix> fermion_pair(Coord2 z) const {
    if (z.is_hedge()) {
      int j = (z.x - 1) / 2, y = z.y / 2;
      if (j < 0 || j >= basis.n || y < 0 || y > N)
        throw std::out_of_range("fermion_pair: horizontal edge outside box");
      return {time_dep(psis[size_t(j)], y), time_dep(psibars[size_t(j)], y)};
    }
    if (!z.is_vedge()) throw std::invalid_argument("fermion_pair: not an edge");
    int x = z.x / 2, y = (z.y - 1) / 2;  // between vertex rows y and y+1
    if (x < basis.a || x > basis.b || y < 0 || y >= N)
      throw std::out_of_range("fermion_pair: vertical edge outside box");
    auto eqs = detail::face_equations(coupling);
    // Row 0: eq3 of the left face (z is its E edge, S edge known); row 1: eq4
    // of the right face (z is its W edge).  Boundary edges replace the missing
    // face equation with the Riemann relation.
    ComplexMatrix zero = ComplexMatrix::Zero(basis.dim, basis.dim);
    cd m[2][2];
    ComplexMatrix rhs[2] = {zero, zero};
    auto face_row = [&](int row, int eq_idx, Coord2 s_edge) {
      const auto& eq = eqs[size_t(eq_idx)];
      // terms[0] is the S-edge (known), terms[1] the unknown E/W slot.
      auto [ps, pbs] = fermion_pair(s_edge);
      rhs[row] = eq.terms[0].a * ps + eq.terms[0].b * pbs;
      m[row][0] = -eq.terms[1].a;
      m[row][1] = -eq.terms[1].b;
    };
    if (x > basis.a)
      face_row(0, 2, {z.x - 1, z.y - 1});
    else {
      m[0][0] = 1;
      m[0][1] = cd(0, 1);  // psi(a + iy) + i psibar(a + iy) = 0
      rhs[0] = zero;
    }
    if (x < basis.b)
      face_row(1, 3, {z.x + 1, z.y - 1});
    else {
      m[1][0] = 1;
      m[1][1] = cd(0, -1);  // psi(b + iy) - i psibar(b + iy) = 0
      rhs[1] = zero;
    }
    cd det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if (std::abs(det) < 1e-12)
      throw std::runtime_error("fermion_pair: singular extension system");
    ComplexMatrix psi_z = (m[1][1] * rhs[0] - m[0][1] * rhs[1]) / det;
    ComplexMatrix psibar_z = (m[0][0] * rhs[1] - m[1][0] * rhs[0]) / det;
    return {std::move(psi_z), std::move(psibar_z)};
  }

  // Time-dependent spin operator at a vertex (doubled coordinates).
  ComplexMatrix spin_op(Coord2 v) const {
    if (!v.is_vertex()) throw std::invalid_argument("spin_op: not a vertex");
    int x = v.x / 2, y = v.y / 2;
    if (x < basis.a || x > basis.b || y < 0 || y > N)
      throw std::out_of_range("spin_op: vertex outside box");
    ComplexMatrix d = ComplexMatrix::Zero(basis.dim, basis.dim);
    for (int s = 0; s < basis.dim; ++s) d(s, s) = basis.spin(s, x);
    return time_dep(d, y);
  }
};

struct FermionInsertion {
  enum class Kind { psi, psibar, psi_up, psi_down, sigma };
  Kind kind;
  Coord2 z;
};

inline std::pair<ComplexMatrix, ComplexMatrix> extend_fermion_to_vertical(
    RectangleSpec box, Coord2 z, const IsingCoupling& k) {
  if (!z.is_vedge())
    throw std::invalid_argument("extend_fermion_to_vertical: not a vertical edge");
  return TransferSystem(box, k).fermion_pair(z);
}

inline cd fermion_correlation(RectangleSpec box,
                              const std::vector<FermionInsertion>& insertions,
                              const IsingCoupling& k) {
  TransferSystem sys(box, k);
  ComplexMatrix prod = ComplexMatrix::Identity(sys.basis.dim, sys.basis.dim);
  for (const auto& ins : insertions) {
    ComplexMatrix op;
    if (ins.kind == FermionInsertion::Kind::sigma) {
      op = sys.spin_op(ins.z);
    } else {
      auto [psi_z, psibar_z] = sys.fermion_pair(ins.z);
      switch (ins.kind) {
        case FermionInsertion::Kind::psi: op = std::move(psi_z); break;
        case FermionInsertion::Kind::psibar: op = std::move(psibar_z); break;
        case FermionInsertion::Kind::psi_up: op = 0.5 * (psibar_z - psi_z); break;
        default: op = cd(0, 0.5) * (psi_z + psibar_z); break;  // psi_down
      }
    }
    prod = prod * op;
  }
  return sys.vacuum_ratio(prod);
}

// Full spectrum of V on S_+, sorted descending.
inline std::vector<double> tm_spectrum(const TransferOp& V) {
  SymEig e = sym_eig(V.m);
  std::vector<double> out(e.values.data(), e.values.data() + e.values.size());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

// Eigenvector of the largest eigenvalue, unit norm; the top eigenvalue must
// be simple on S_+.
inline RealVector physical_vacuum(const TransferOp& V) {
  SymEig e = sym_eig(V.m);
  int n = int(e.values.size());
  if (n >= 2 && e.values(n - 1) - e.values(n - 2) <
                    1e-10 * std::max(1.0, std::abs(e.values(n - 1))))
    throw std::runtime_error("physical_vacuum: degenerate top eigenvalue");
  return e.vectors.col(n - 1);
}

// Z^+ = <f| V^N |i> with i = f = e^{beta |I*| / 2} e_(+): the partition
// function of the rectangle with plus boundary conditions.
inline double partition_function_tm(RectangleSpec box, const IsingCoupling& k) {
  TransferSystem sys(box, k);
  return std::exp(k.beta * sys.basis.n) * sys.power(sys.N)(0, 0);
}

// E^+[ prod_i s_{v_i} ] for vertices v_i of the rectangle.
inline double spin_correlation(RectangleSpec box, const std::vector<Coord2>& vertices,
                               const IsingCoupling& k) {
  TransferSystem sys(box, k);
  ComplexMatrix prod = ComplexMatrix::Identity(sys.basis.dim, sys.basis.dim);
  for (Coord2 v : vertices) prod = prod * sys.spin_op(v);
  cd r = sys.vacuum_ratio(prod);
  if (std::abs(r.imag()) > 1e-10 * std::max(1.0, std::abs(r.real())))
    throw std::runtime_error("spin_correlation: non-real result");
  return r.real();
}

}  // namespace ising
