#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace unidiff::linalg {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;

// Eigendecomposition of a Hermitian matrix (LAPACK zheevd).
// Returns false if the backend failed to converge.
bool hermitian_eig(const Matrix& h, Vector& eigenvalues, Matrix& eigenvectors);

// Eigenvalues of a general complex matrix (LAPACK zgeev, no vectors).
bool complex_eigenvalues(const Matrix& a, CVector& eigenvalues);

// exp(i * scale * h) for Hermitian h, via eigendecomposition.
Matrix unitary_exp_eig(const Matrix& h, double scale);

// exp(i * scale * h) for Hermitian h without an eigensolve: truncated
// Taylor series (Paterson-Stockmeyer form), degree chosen from ||scale*h||
// so the truncation error is below ~1e-14. Only valid for small steps
// (throws if the norm bound exceeds the largest supported threshold).
Matrix unitary_exp_taylor(const Matrix& h, double scale);

// Max-norm of U^dagger U - I.
double unitarity_drift(const Matrix& u);

// Nearest-unitary projection via QR with the R diagonal phase fixed.
Matrix reunitarize_qr(const Matrix& u);

} // namespace unidiff::linalg
