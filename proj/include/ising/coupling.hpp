#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>

namespace ising {

using cd = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

// lambda = exp(i pi/4), the eighth root of unity that appears in all the
// phase bookkeeping below.
inline const cd lambda_8 = cd(std::sqrt(0.5), std::sqrt(0.5));

inline cd lambda_pow(long k) {
  // exp(i pi k / 4), table lookup so powers stay exactly consistent.
  static const cd tbl[8] = {
      cd(1, 0),
      cd(std::sqrt(0.5), std::sqrt(0.5)),
      cd(0, 1),
      cd(-std::sqrt(0.5), std::sqrt(0.5)),
      cd(-1, 0),
      cd(-std::sqrt(0.5), -std::sqrt(0.5)),
      cd(0, -1),
      cd(std::sqrt(0.5), -std::sqrt(0.5)),
  };
  return tbl[((k % 8) + 8) % 8];
}

inline double beta_critical() { return 0.5 * std::log(std::sqrt(2.0) + 1.0); }

// All the derived constants of the coupling beta that the rest of the code
// needs. Conventions: alpha = exp(-2 beta), S = sinh(2 beta), C = cosh(2 beta),
// dual coupling sinh(2 beta) sinh(2 beta*) = 1, mass mu = (S + 1/S)/2 - 1,
// twist nu = conj(lambda)^3 (alpha + i)/(alpha - i).  At beta = beta_c:
// alpha = sqrt(2) - 1, S = 1, mu = 0, nu = 1.
struct IsingCoupling {
  double beta = 0;
  double alpha = 0;
  double S = 0;
  double C = 0;
  double s = 0;  // sinh beta
  double c = 0;  // cosh beta
  double beta_star = 0;  // dual coupling, tanh(beta*) = exp(-2 beta)
  double mu = 0;
  cd nu;

  explicit IsingCoupling(double b) : beta(b) {
    if (!(b > 0) || !std::isfinite(b))
      throw std::invalid_argument("IsingCoupling: beta must be positive and finite");
    alpha = std::exp(-2.0 * b);
    S = std::sinh(2.0 * b);
    C = std::cosh(2.0 * b);
    s = std::sinh(b);
    c = std::cosh(b);
    beta_star = std::atanh(std::exp(-2.0 * b));
    mu = 0.5 * (S + 1.0 / S) - 1.0;
    nu = std::conj(lambda_pow(3)) * (cd(alpha, 1.0) / cd(alpha, -1.0));
  }

  bool is_critical(double tol = 1e-12) const {
    return std::abs(beta - beta_critical()) < tol;
  }
};

}  // namespace ising
