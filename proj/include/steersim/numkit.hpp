#ifndef STEERSIM_NUMKIT_HPP
#define STEERSIM_NUMKIT_HPP

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>

namespace steersim {

using cplx = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

/// Thrown when a numerical routine cannot produce a trustworthy result
/// (SVD non-convergence, violated solver assertion). Never swallowed.
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace numkit {

/// Thin SVD factorization A = U * diag(sigma) * V^H with min(rows, cols)
/// singular values sorted descending. U and V have orthonormal columns.
struct SvdResult {
    CMat u;
    RVec sigma;
    CMat v;

    CMat reconstruct() const { return u * sigma.asDiagonal() * v.adjoint(); }
};

SvdResult svd(const CMat& a);

/// Moore-Penrose pseudo-inverse. Singular values below rel_tol * sigma_max
/// are truncated; always well-defined.
CMat pinv(const CMat& a, double rel_tol = 1e-12);

/// Rank-1 orthogonal projector P = d d^H / (d^H d) onto span{d}.
/// Hermitian form so that P is idempotent for complex d.
CMat projector(const CVec& d);

/// Inner product, conjugate-linear in the first argument: sum conj(a_i) b_i.
cplx inner(const CVec& a, const CVec& b);

/// Euclidean norm; norm(a)^2 == inner(a, a).real().
double norm(const CVec& a);

} // namespace numkit
} // namespace steersim

#endif
