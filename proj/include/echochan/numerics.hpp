#pragma once

#include <cstddef>

#include "echochan/matrix.hpp"

namespace echochan {

Matrix matmul(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, const Vector& x);

/// Solves m * S = rhs for symmetric positive definite m via Cholesky.
/// Inputs asymmetric beyond 1e-9 (relative to max |m|) are rejected.
Matrix solve_spd(const Matrix& m, const Matrix& rhs);

/// Relative asymmetry max|m - m^T| / max|m| (0 for the zero matrix).
double asymmetry(const Matrix& m);

struct SpectralOptions {
  double tol = 1e-6;
};

/// Largest eigenvalue magnitude of a general real square matrix.
///
/// Computes the full spectrum (LAPACK dgeev: balancing, Hessenberg reduction,
/// Francis double-shift QR), so complex-conjugate dominant pairs are exact and
/// the result is accurate to roughly machine precision times ||m||, well inside
/// any tol >= 1e-12. Throws ConvergenceError if the QR iteration stalls.
double spectral_radius(const Matrix& m, const SpectralOptions& opts = {});

}  // namespace echochan
