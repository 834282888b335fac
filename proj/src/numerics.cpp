#include "echochan/numerics.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <vector>

#include <lapacke.h>

#include "echochan/error.hpp"
#include "eigen_bridge.hpp"

namespace echochan {

using detail::view;

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: cannot multiply " + a.shape_string() + " by " + b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  if (a.cols() == 0) return out;
  view(out).noalias() = view(a) * view(b);
  if (!out.all_finite()) throw NonFiniteError("matmul: product overflowed");
  return out;
}

Vector matvec(const Matrix& a, const Vector& x) {
  if (a.cols() != x.size()) {
    throw ShapeError("matvec: cannot multiply " + a.shape_string() + " by vector of length " +
                     std::to_string(x.size()));
  }
  Vector out(a.rows());
  Eigen::Map<Eigen::VectorXd>(out.data().data(), static_cast<Eigen::Index>(out.size())).noalias() =
      view(a) * Eigen::Map<const Eigen::VectorXd>(x.data().data(),
                                                  static_cast<Eigen::Index>(x.size()));
  return out;
}

double asymmetry(const Matrix& m) {
  if (!m.is_square()) throw ShapeError("asymmetry: matrix " + m.shape_string() + " is not square");
  const double scale = m.max_abs();
  if (scale == 0.0) return 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      worst = std::max(worst, std::abs(m(i, j) - m(j, i)));
  return worst / scale;
}

Matrix solve_spd(const Matrix& m, const Matrix& rhs) {
  if (!m.is_square()) throw ShapeError("solve_spd: matrix " + m.shape_string() + " is not square");
  if (rhs.rows() != m.rows()) {
    throw ShapeError("solve_spd: right-hand side " + rhs.shape_string() +
                     " does not match matrix " + m.shape_string());
  }
  if (const double asym = asymmetry(m); asym > 1e-9) {
    throw DefinitenessError("solve_spd: matrix is not symmetric (relative asymmetry " +
                            std::to_string(asym) + ")");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(view(m));
  if (llt.info() != Eigen::Success) {
    throw DefinitenessError("solve_spd: Cholesky factorization failed; matrix " +
                            m.shape_string() + " is not positive definite");
  }
  // Cholesky can succeed on numerically singular input; a zero or negative
  // pivot would surface as non-finite output.
  const Eigen::VectorXd diag = llt.matrixLLT().diagonal();
  if (m.rows() > 0 && !(diag.minCoeff() > 0.0)) {
    throw DefinitenessError("solve_spd: non-positive Cholesky pivot");
  }
  Matrix out = detail::to_matrix(llt.solve(view(rhs)));
  if (!out.all_finite()) throw DefinitenessError("solve_spd: solution is not finite");
  return out;
}

double spectral_radius(const Matrix& m, const SpectralOptions& opts) {
  if (!m.is_square()) {
    throw ShapeError("spectral_radius: matrix " + m.shape_string() + " is not square");
  }
  if (!(opts.tol > 0.0)) throw ConfigError("spectral_radius: tol must be positive");
  const auto n = static_cast<lapack_int>(m.rows());
  if (n == 0) return 0.0;
  if (n == 1) return std::abs(m(0, 0));

  // dgeev without eigenvectors: balance, Hessenberg reduction, Francis QR.
  std::vector<double> a(m.data().begin(), m.data().end());
  std::vector<double> re(m.rows());
  std::vector<double> im(m.rows());
  const lapack_int info = LAPACKE_dgeev(LAPACK_ROW_MAJOR, 'N', 'N', n, a.data(), n, re.data(),
                                        im.data(), nullptr, n, nullptr, n);
  if (info > 0) {
    throw ConvergenceError("spectral_radius: QR iteration failed to converge; " +
                               std::to_string(info) + " eigenvalues unresolved",
                           static_cast<std::size_t>(info));
  }
  if (info < 0) throw std::logic_error("spectral_radius: invalid LAPACK argument " + std::to_string(-info));
  double radius = 0.0;
  for (std::size_t i = 0; i < re.size(); ++i) radius = std::max(radius, std::hypot(re[i], im[i]));
  return radius;
}

}  // namespace echochan
