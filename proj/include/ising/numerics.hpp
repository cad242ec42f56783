#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <vector>

namespace ising {

using cd = std::complex<double>;

using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

struct SymEig {
  RealVector values;   // ascending
  RealMatrix vectors;  // columns
};

inline SymEig sym_eig(const RealMatrix& A, double sym_tol = 1e-10) {
  if (A.rows() != A.cols()) throw std::invalid_argument("sym_eig: matrix not square");
  double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  if ((A - A.transpose()).cwiseAbs().maxCoeff() > sym_tol * scale)
    throw std::invalid_argument("sym_eig: matrix not symmetric");
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(0.5 * (A + A.transpose()));
  if (es.info() != Eigen::Success) throw std::runtime_error("sym_eig: solver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

struct LstSq {
  RealVector x;
  double residual = 0;   // ||Ax - b||_2
  double sigma_min = 0;  // smallest singular value of A
  double sigma_max = 0;
  int rank = 0;          // numerical rank at threshold 1e-10 * sigma_max
};

inline LstSq least_squares(const RealMatrix& A, const RealVector& b) {
  if (A.rows() != b.size()) throw std::invalid_argument("least_squares: size mismatch");
  Eigen::BDCSVD<RealMatrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  LstSq out;
  const auto& sv = svd.singularValues();
  out.sigma_max = sv.size() ? sv(0) : 0.0;
  out.sigma_min = sv.size() ? sv(sv.size() - 1) : 0.0;
  double thresh = 1e-10 * out.sigma_max;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > thresh) ++out.rank;
  out.x = svd.solve(b);
  out.residual = (A * out.x - b).norm();
  return out;
}

// Pfaffian of an antisymmetric matrix by skew-symmetric Gaussian elimination
// (Parlett-Reid) with partial pivoting; the permutation parity flips the sign.
// Odd dimension gives 0.  Works for real or complex scalars.
template <typename Scalar>
Scalar pfaffian(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> A,
                double asym_tol = 1e-10) {
  const long n = A.rows();
  if (A.cols() != n) throw std::invalid_argument("pfaffian: matrix not square");
  double scale = 0;
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) scale = std::max(scale, std::abs(A(i, j)));
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j)
      if (std::abs(A(i, j) + A(j, i)) > asym_tol * std::max(1.0, scale))
        throw std::invalid_argument("pfaffian: matrix not antisymmetric");
  if (n % 2 != 0) return Scalar(0);

  Scalar pf(1);
  for (long k = 0; k + 1 < n; k += 2) {
    long piv = k + 1;
    for (long i = k + 1; i < n; ++i)
      if (std::abs(A(k, i)) > std::abs(A(k, piv))) piv = i;
    if (A(k, piv) == Scalar(0)) return Scalar(0);
    if (piv != k + 1) {
      A.row(piv).swap(A.row(k + 1));
      A.col(piv).swap(A.col(k + 1));
      pf = -pf;
    }
    const Scalar a = A(k, k + 1);
    pf *= a;
    for (long i = k + 2; i < n; ++i)
      for (long j = k + 2; j < n; ++j)
        A(i, j) -= (A(k, i) * A(k + 1, j) - A(k, j) * A(k + 1, i)) / a;
  }
  return pf;
}

inline double pfaffian_real(const RealMatrix& A) { return pfaffian<double>(A); }
inline std::complex<double> pfaffian_complex(const ComplexMatrix& A) {
  return pfaffian<std::complex<double>>(A);
}

}  // namespace ising
