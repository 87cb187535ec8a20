#include "steersim/numkit.hpp"

#include <Eigen/SVD>

namespace steersim::numkit {

namespace {

bool all_finite(const CMat& a)
{
    return a.allFinite();
}

} // namespace

SvdResult svd(const CMat& a)
{
    if (a.rows() < 1 || a.cols() < 1) {
        throw std::domain_error("svd: matrix must have at least one row and column");
    }
    if (!all_finite(a)) {
        throw std::domain_error("svd: input contains NaN or Inf");
    }

    Eigen::JacobiSVD<CMat> jsvd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (jsvd.info() != Eigen::Success) {
        throw numerical_error("svd: Jacobi iteration did not converge");
    }

    SvdResult out{jsvd.matrixU(), jsvd.singularValues(), jsvd.matrixV()};
    if (!out.u.allFinite() || !out.sigma.allFinite() || !out.v.allFinite()) {
        throw numerical_error("svd: non-finite factor produced");
    }
    return out;
}

CMat pinv(const CMat& a, double rel_tol)
{
    if (!all_finite(a)) {
        throw std::domain_error("pinv: input contains NaN or Inf");
    }
    if (a.size() == 0) {
        return CMat::Zero(a.cols(), a.rows());
    }

    Eigen::JacobiSVD<CMat> jsvd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RVec& s = jsvd.singularValues();
    const double cutoff = rel_tol * (s.size() > 0 ? s(0) : 0.0);

    RVec s_inv = RVec::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > cutoff && s(i) > 0.0) {
            s_inv(i) = 1.0 / s(i);
        }
    }
    return jsvd.matrixV() * s_inv.asDiagonal() * jsvd.matrixU().adjoint();
}

CMat projector(const CVec& d)
{
    const double n2 = d.squaredNorm();
    if (n2 == 0.0) {
        throw std::domain_error("projector: zero direction vector");
    }
    return (d * d.adjoint()) / n2;
}

cplx inner(const CVec& a, const CVec& b)
{
    if (a.size() != b.size()) {
        throw std::domain_error("inner: dimension mismatch");
    }
    return a.dot(b); // Eigen conjugates the first argument
}

double norm(const CVec& a)
{
    return a.norm();
}

} // namespace steersim::numkit
