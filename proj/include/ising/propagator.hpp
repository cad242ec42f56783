#pragma once

// Row-to-row (massive) s-holomorphic propagation on a horizontal strip, its
// explicit matrix form, and the spectral splitting.
//
// Values of f live on the n = |I*| horizontal edges of a row.  Real split
// layout everywhere: coordinates 0..n-1 are Re f, n..2n-1 are Im f.

#include "ising/shol.hpp"

namespace ising {

struct PropagatorMatrix {
  int n = 0;
  double beta = 0;
  RealMatrix m;  // 2n x 2n, split layout
};

struct ComplexifiedPropagator {
  int n = 0;
  ComplexMatrix m;  // [[A, B], [conj B, conj A]] acting on (f, conj f)
};

namespace detail {

// Complex coefficient rows of (P_b f)(k) = sum_l A(k,l) f(l) + B(k,l) conj f(l),
// from the explicit propagator formula.  The conj f(k_R) coefficient is the
// complex conjugate of the conj f(k_L) one; the critical-case display fixes
// that sign (the massive display repeats +i(C-S) for both ends, which would
// contradict it).
inline std::pair<ComplexMatrix, ComplexMatrix> propagator_coeffs(int n,
                                                                 const IsingCoupling& k) {
  const double S = k.S, C = k.C;
  ComplexMatrix A = ComplexMatrix::Zero(n, n), B = ComplexMatrix::Zero(n, n);
  for (int i = 1; i + 1 < n; ++i) {
    A(i, i - 1) = cd(-S, -1) / (2 * S);
    A(i, i) = C * C / S;
    A(i, i + 1) = cd(-S, 1) / (2 * S);
    B(i, i - 1) = C / (2 * S);
    B(i, i) = -C;
    B(i, i + 1) = C / (2 * S);
  }
  A(0, 0) = (S + C) * C / (2 * S);
  A(0, 1) = cd(-S, 1) / (2 * S);
  B(0, 0) = cd(-(S + C) * S, C - S) / (2 * S);
  B(0, 1) = C / (2 * S);
  A(n - 1, n - 2) = cd(-S, -1) / (2 * S);
  A(n - 1, n - 1) = (S + C) * C / (2 * S);
  B(n - 1, n - 2) = C / (2 * S);
  B(n - 1, n - 1) = cd(-(S + C) * S, -(C - S)) / (2 * S);
  return {A, B};
}

inline RealMatrix realify(const ComplexMatrix& A, const ComplexMatrix& B) {
  // Real form of f -> A f + B conj f in the split (Re, Im) layout.
  long n = A.rows();
  RealMatrix M(2 * n, 2 * n);
  M.topLeftCorner(n, n) = A.real() + B.real();
  M.topRightCorner(n, n) = -A.imag() + B.imag();
  M.bottomLeftCorner(n, n) = A.imag() + B.imag();
  M.bottomRightCorner(n, n) = A.real() - B.real();
  return M;
}

}  // namespace detail

inline PropagatorMatrix propagator_matrix(int n, const IsingCoupling& k) {
  if (n < 2) throw std::invalid_argument("propagator_matrix: need n >= 2");
  auto [A, B] = detail::propagator_coeffs(n, k);
  return {n, k.beta, detail::realify(A, B)};
}

inline ComplexifiedPropagator complexified_propagator(int n, const IsingCoupling& k) {
  auto [A, B] = detail::propagator_coeffs(n, k);
  ComplexMatrix M(2 * n, 2 * n);
  M.topLeftCorner(n, n) = A;
  M.topRightCorner(n, n) = B;
  M.bottomLeftCorner(n, n) = B.conjugate();
  M.bottomRightCorner(n, n) = A.conjugate();
  return {n, M};
}

struct RowPropagation {
  std::vector<cd> mid;   // values on the n+1 vertical edges of the strip
  std::vector<cd> next;  // values on the n horizontal edges of the next row
};

namespace detail {

// Solve the 2x2 real system given by two projected face relations sharing one
// unknown edge value.
struct ProjRow {
  cd dir;
  cd a, b;   // coefficients of the unknown: a z + b conj z
  cd known;  // fixed contribution inside the relation
};

inline cd solve_two(const ProjRow& r1, const ProjRow& r2) {
  Eigen::Matrix2d A;
  Eigen::Vector2d rhs;
  const ProjRow* rows[2] = {&r1, &r2};
  for (int i = 0; i < 2; ++i) {
    auto [cr, ci] = project_coeffs(rows[i]->dir, rows[i]->a, rows[i]->b);
    A(i, 0) = cr;
    A(i, 1) = ci;
    rhs(i) = -std::real(std::conj(rows[i]->dir) * rows[i]->known);
  }
  Eigen::Vector2d x = A.fullPivLu().solve(rhs);
  return cd(x(0), x(1));
}

}  // namespace detail

// One step of s-holomorphic continuation across the strip I x {0,1}, with the
// calibrated Riemann lines at the two boundary vertical edges.  The returned
// `next` row equals propagator_matrix * f.
inline RowPropagation propagate_row(const std::vector<cd>& f, const IsingCoupling& k) {
  int n = int(f.size());
  if (n < 2) throw std::invalid_argument("propagate_row: need at least 2 values");
  auto eqs = detail::face_equations(k);  // 0: N/E, 1: N/W, 2: S/E, 3: S/W
  auto conv = BoundaryLineConvention::calibrated();
  RowPropagation out;
  out.mid.resize(size_t(n + 1));
  out.next.resize(size_t(n));

  auto known_of = [](const detail::FaceEq& eq, int slot, cd v) {
    for (const auto& t : eq.terms)
      if (t.slot == slot) return t.a * v + t.b * std::conj(v);
    throw std::logic_error("known_of: slot not in equation");
  };
  auto unknown_of = [](const detail::FaceEq& eq, int slot) {
    for (const auto& t : eq.terms)
      if (t.slot == slot) return std::pair<cd, cd>{t.a, t.b};
    throw std::logic_error("unknown_of: slot not in equation");
  };

  // Vertical edges: interior ones see eq3 (edge is E of the left face, with
  // S = f(k-1)) and eq4 (edge is W of the right face, with S = f(k)).
  for (int j = 0; j <= n; ++j) {
    detail::ProjRow rows[2];
    int cnt = 0;
    if (j > 0) {  // left face exists
      auto [ua, ub] = unknown_of(eqs[2], 0);
      rows[cnt++] = {eqs[2].dir, ua, ub, known_of(eqs[2], 3, f[size_t(j - 1)])};
    }
    if (j < n) {  // right face exists
      auto [ua, ub] = unknown_of(eqs[3], 2);
      rows[cnt++] = {eqs[3].dir, ua, ub, known_of(eqs[3], 3, f[size_t(j)])};
    }
    if (cnt == 1) {
      // Boundary: add the Riemann line condition Re[conj(i ell) z] = 0.
      cd ell = j == 0 ? conv.ell_left : conv.ell_right;
      rows[1] = {cd(0, 1) * ell, cd(1), cd(0), cd(0)};
    }
    out.mid[size_t(j)] = detail::solve_two(rows[0], rows[1]);
  }

  // Next row: eq1 (edge is N, with E known) and eq2 (N, with W known) of the
  // face below each new horizontal edge.
  for (int j = 0; j < n; ++j) {
    auto [ua1, ub1] = unknown_of(eqs[0], 1);
    auto [ua2, ub2] = unknown_of(eqs[1], 1);
    detail::ProjRow r1{eqs[0].dir, ua1, ub1, known_of(eqs[0], 0, out.mid[size_t(j + 1)])};
    detail::ProjRow r2{eqs[1].dir, ua2, ub2, known_of(eqs[1], 2, out.mid[size_t(j)])};
    out.next[size_t(j)] = detail::solve_two(r1, r2);
  }
  return out;
}

struct SpectralSplit {
  int n = 0;                 // number of reciprocal pairs
  std::vector<double> lam;   // descending, all > 1
  RealMatrix vec_large;      // eigenvectors for lam (columns, same order)
  RealMatrix vec_small;      // eigenvectors for 1/lam (columns, same order)
};

inline SpectralSplit spectral_split(const PropagatorMatrix& p) {
  auto eig = sym_eig(p.m);
  int n2 = int(eig.values.size());
  int n = n2 / 2;
  for (int i = 0; i < n2; ++i)
    if (eig.values(i) <= 0)
      throw std::runtime_error("spectral_split: propagator not positive definite");
  SpectralSplit out;
  out.n = n;
  // values ascending: first n are the 1/lam, last n the lam (if pairing holds).
  out.vec_large = RealMatrix(n2, n);
  out.vec_small = RealMatrix(n2, n);
  for (int i = 0; i < n; ++i) {
    double big = eig.values(n2 - 1 - i), small = eig.values(i);
    if (std::abs(big - 1.0) < 1e-9 || std::abs(small - 1.0) < 1e-9)
      throw std::runtime_error("spectral_split: eigenvalue 1 encountered");
    if (std::abs(big * small - 1.0) > 1e-8 * big)
      throw std::runtime_error("spectral_split: reciprocal pairing failed");
    out.lam.push_back(big);
    out.vec_large.col(i) = eig.vectors.col(n2 - 1 - i);
    out.vec_small.col(i) = eig.vectors.col(i);
  }
  for (int i = 0; i + 1 < n; ++i)
    if (out.lam[size_t(i)] - out.lam[size_t(i + 1)] < 1e-9)
      throw std::runtime_error("spectral_split: eigenvalues not distinct");
  return out;
}

// { lambda0 * prod_{a in S} lam_a^{-1} : S subset of {1..n} }, descending.
inline std::vector<double> gamma_spectrum(const SpectralSplit& s, double lambda0) {
  if (!(lambda0 > 0)) throw std::invalid_argument("gamma_spectrum: lambda0 must be > 0");
  std::vector<double> out = {lambda0};
  for (double l : s.lam) {
    size_t sz = out.size();
    for (size_t i = 0; i < sz; ++i) out.push_back(out[i] / l);
  }
  std::sort(out.rbegin(), out.rend());
  return out;
}

}  // namespace ising
