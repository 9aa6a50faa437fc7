#pragma once

#include <Eigen/Dense>
#include <complex>

namespace irsce::linalg {

using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// Unnormalized forward DFT kernel, [D]_{m,n} = exp(-j*2*pi*m*n/size).
// Satisfies D * D^H = size * I; first row and first column are all ones.
CMatrix dft_matrix(int size);

// Moore-Penrose pseudo-inverse via SVD. Singular values below
// tol * sigma_max are treated as zero; tol < 0 selects the default
// max(rows, cols) * machine epsilon.
CMatrix pinv(const CMatrix& x, double tol = -1.0);

// Least-squares solve b -> pinv(a) * b that additionally requires a to have
// full column rank numerically; throws std::runtime_error naming `what` and
// the condition number otherwise.
CMatrix solve_full_col_rank(const CMatrix& a, const CMatrix& b, const char* what);

// 2-norm condition number (sigma_max / sigma_min over min(rows, cols) values).
double cond(const CMatrix& x);

// Principal square root S of a Hermitian PSD matrix, S * S^H = p.
// Eigenvalues in [-1e-10, 0) are clamped to zero; more negative eigenvalues
// or a symmetry residual above 1e-8 raise std::invalid_argument.
CMatrix hermitian_sqrt(const CMatrix& p);

// Kronecker product, dims (rows_a*rows_b) x (cols_a*cols_b).
CMatrix kron(const CMatrix& a, const CMatrix& b);

// Conformable blocks of [a, b; c, d].
struct BlockMatrix2x2 {
    CMatrix a, b, c, d;
    CMatrix assemble() const;
};

// Inverse of [a, b; c, d] through the Schur complement of a. Requires a
// square invertible and d - c*a^{-1}*b invertible; either block with
// condition number above 1e12 raises std::runtime_error.
CMatrix block_inverse(const BlockMatrix2x2& m);

// Closed-form pseudo-inverse of [a, b; c, d] for blocks satisfying
// (I - a*a+)b = 0, c(I - a+a) = 0 and d = c*a+*b (checked to check_tol,
// relative; violation raises std::invalid_argument naming the condition).
CMatrix block_pinv_structured(const BlockMatrix2x2& m, double check_tol = 1e-8);

}  // namespace irsce::linalg
