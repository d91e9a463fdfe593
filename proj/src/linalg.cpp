#include "unidiff/linalg.hpp"

#include <cmath>
#include <stdexcept>

#include <lapacke.h>

namespace unidiff::linalg {

namespace {
lapack_complex_double* lp(std::complex<double>* p) {
    return reinterpret_cast<lapack_complex_double*>(p);
}
} // namespace

bool hermitian_eig(const Matrix& h, Vector& eigenvalues, Matrix& eigenvectors) {
    const int n = static_cast<int>(h.rows());
    eigenvectors = h;
    eigenvalues.resize(n);
    const int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                    lp(eigenvectors.data()), n, eigenvalues.data());
    return info == 0;
}

bool complex_eigenvalues(const Matrix& a, CVector& eigenvalues) {
    const int n = static_cast<int>(a.rows());
    Matrix work = a;
    eigenvalues.resize(n);
    const int info = LAPACKE_zgeev(LAPACK_COL_MAJOR, 'N', 'N', n, lp(work.data()), n,
                                   lp(eigenvalues.data()), nullptr, 1, nullptr, 1);
    return info == 0;
}

Matrix unitary_exp_eig(const Matrix& h, double scale) {
    Vector lam;
    Matrix v;
    if (!hermitian_eig(h, lam, v))
        throw std::runtime_error("unitary_exp_eig: Hermitian eigensolver failed");
    const int n = static_cast<int>(h.rows());
    Matrix scaled = v;
    for (int j = 0; j < n; ++j) {
        const std::complex<double> phase(std::cos(scale * lam(j)), std::sin(scale * lam(j)));
        scaled.col(j) *= phase;
    }
    return scaled * v.adjoint();
}

Matrix unitary_exp_taylor(const Matrix& h, double scale) {
    // Row-sum bound on the spectral radius of scale*h.
    const double theta = std::abs(scale) * h.cwiseAbs().rowwise().sum().maxCoeff();
    // Smallest degree (multiple of 4) with theta^{d+1}/(d+1)! e^theta < ~1e-14.
    int degree;
    if (theta < 0.11) degree = 8;
    else if (theta < 0.25) degree = 12;
    else if (theta < 0.45) degree = 12;
    else if (theta < 0.95) degree = 16;
    else throw std::runtime_error("unitary_exp_taylor: step norm too large, use unitary_exp_eig");

    // Taylor coefficients of exp(i*scale*x).
    std::vector<std::complex<double>> c(degree + 1);
    c[0] = 1.0;
    const std::complex<double> a(0.0, scale);
    for (int k = 1; k <= degree; ++k) c[k] = c[k - 1] * a / static_cast<double>(k);

    // Paterson-Stockmeyer with block size 4: 3 power gemms + one gemm per block.
    const int n = static_cast<int>(h.rows());
    Matrix h2 = h * h;
    Matrix h3 = h2 * h;
    Matrix h4 = h2 * h2;
    auto block = [&](int base) {
        Matrix b = c[base + 1] * h + c[base + 2] * h2 + c[base + 3] * h3;
        b.diagonal().array() += c[base];
        return b;
    };
    // p(X) = B_0 + X^4 (B_1 + X^4 (... + X^4 * c_degree I)), degree = 4*m.
    const int nblocks = degree / 4;
    Matrix acc = c[degree] * Matrix::Identity(n, n);
    for (int b = nblocks - 1; b >= 0; --b) acc = block(4 * b) + (h4 * acc).eval();
    return acc;
}

double unitarity_drift(const Matrix& u) {
    const int n = static_cast<int>(u.rows());
    Matrix g = u.adjoint() * u;
    g -= Matrix::Identity(n, n);
    return g.cwiseAbs().maxCoeff();
}

Matrix reunitarize_qr(const Matrix& u) {
    Eigen::HouseholderQR<Matrix> qr(u);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    const int n = static_cast<int>(u.rows());
    // Fix phases so q -> q * diag(r_jj/|r_jj|); makes the projection
    // continuous in u and the identity a fixed point.
    for (int j = 0; j < n; ++j) {
        const std::complex<double> d = r(j, j);
        const double ad = std::abs(d);
        if (ad > 0.0) q.col(j) *= d / ad;
    }
    return q;
}

} // namespace unidiff::linalg
