#pragma once

#include <Eigen/SVD>

#include "cpoint.hpp"
#include "errors.hpp"

namespace focklab {

/// A = V * diag(sigma) * W with V, W unitary and sigma non-increasing.
struct SvdResult {
    CMatrix V;
    Eigen::VectorXd sigma;
    CMatrix W;

    CMatrix Sigma() const { return sigma.cast<cplx>().asDiagonal(); }
    CMatrix reconstruct() const { return V * Sigma() * W; }
};

inline SvdResult complex_svd_small(const CMatrix& A) {
    if (A.rows() != A.cols() || A.rows() < 1 || A.rows() > kMaxDim) throw DimMismatch("complex_svd_small expects n x n, n <= 4");
    Eigen::JacobiSVD<CMatrix> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
    SvdResult r{svd.matrixU(), svd.singularValues(), svd.matrixV().adjoint()};
    double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    double err = (r.reconstruct() - A).cwiseAbs().maxCoeff();
    if (!(err <= 1e-11 * scale)) throw ConvergenceFailure("SVD reconstruction error too large");
    return r;
}

inline double spectral_norm(const CMatrix& A) { return complex_svd_small(A).sigma(0); }

}  // namespace focklab
