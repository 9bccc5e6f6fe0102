#include "openstab/variational.hpp"

#include <cmath>
#include <limits>

namespace openstab {

namespace {

constexpr double kEps = 2.220446049250313e-16;  // 2^-52

double rank_threshold(const Eigen::MatrixXd& T, double sigma_max) {
    return static_cast<double>(std::max(T.rows(), T.cols())) * sigma_max * kEps;
}

}  // namespace

JacobianSplit split_jacobian(const Eigen::MatrixXd& J, int n, int m) {
    if (J.rows() != n || J.cols() != n + m)
        throw DimensionError("expected a " + std::to_string(n) + "x" +
                             std::to_string(n + m) + " Jacobian, got " +
                             std::to_string(J.rows()) + "x" + std::to_string(J.cols()));
    JacobianSplit s;
    s.A = J.leftCols(n);
    s.B = J.rightCols(m);
    s.J = J;
    return s;
}

JacobianSplit split_at(const SystemDef& sys, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u) {
    JacobianSplit s = split_jacobian(jacobian(sys, x, u).jacobian, sys.n, sys.m);
    s.point_x = x;
    s.point_u = u;
    return s;
}

int numerical_rank(const Eigen::MatrixXd& T) {
    if (T.size() == 0) return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(T);
    const auto& sigma = svd.singularValues();
    double thresh = rank_threshold(T, sigma.size() ? sigma[0] : 0.0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
        if (sigma[i] > thresh) ++rank;
    return rank;
}

double banach_constant(const Eigen::MatrixXd& T) {
    const Eigen::Index n = T.rows();
    if (n == 0) return 0.0;
    if (T.cols() < n || T.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(T);
    const auto& sigma = svd.singularValues();
    double thresh = rank_threshold(T, sigma[0]);
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(sigma[i] > thresh)) return 0.0;
    return sigma[n - 1];
}

double operator_norm(const Eigen::MatrixXd& T) {
    if (T.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(T);
    return svd.singularValues()[0];
}

OpennessReport cov_reg(const JacobianSplit& split) {
    OpennessReport r;
    r.gamma = banach_constant(split.J);
    r.cov = r.gamma;
    r.reg = r.cov > 0.0 ? 1.0 / r.cov : std::numeric_limits<double>::infinity();
    r.rank = numerical_rank(split.J);

    Eigen::EigenSolver<Eigen::MatrixXd> es(split.A, /*computeEigenvectors=*/false);
    bool all_real = true;
    double sup_re = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        std::complex<double> lam = es.eigenvalues()[i];
        if (lam.real() >= 0.0) {
            r.lambda_plus.push_back(lam);
            sup_re = std::max(sup_re, lam.real());
            if (std::abs(lam.imag()) > 1e-12 * (1.0 + std::abs(lam))) all_real = false;
        }
    }
    r.eta = r.lambda_plus.empty() ? -std::numeric_limits<double>::infinity() : sup_re;
    r.spectral_ok = all_real && r.cov > r.eta;
    return r;
}

Eigen::MatrixXd right_pseudoinverse(const Eigen::MatrixXd& T) {
    const Eigen::Index n = T.rows();
    if (numerical_rank(T) < n)
        throw RankError("right pseudoinverse requires full row rank " + std::to_string(n) +
                        ", matrix has rank " + std::to_string(numerical_rank(T)));
    Eigen::MatrixXd gram = T * T.transpose();
    return gram.ldlt().solve(T).transpose();
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& T) {
    if (T.size() == 0) return Eigen::MatrixXd::Zero(T.cols(), T.rows());
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(T, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sigma = svd.singularValues();
    double thresh = rank_threshold(T, sigma.size() ? sigma[0] : 0.0);
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sigma.size());
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
        if (sigma[i] > thresh) inv[i] = 1.0 / sigma[i];
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::MatrixXd range_projection(const Eigen::MatrixXd& B) {
    const Eigen::Index n = B.rows();
    if (B.size() == 0) return Eigen::MatrixXd::Zero(n, n);
    int rank = numerical_rank(B);
    if (rank == n) return B * right_pseudoinverse(B);
    if (rank == 0) return Eigen::MatrixXd::Zero(n, n);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeThinU);
    Eigen::MatrixXd Ur = svd.matrixU().leftCols(rank);
    return Ur * Ur.transpose();
}

CovBounds composition_cov_bounds(const JacobianSplit& f_split,
                                 const Eigen::MatrixXd& h_jac) {
    const int nm = f_split.n() + f_split.m();
    if (h_jac.rows() != nm || h_jac.cols() != nm)
        throw DimensionError("composition Jacobian must be " + std::to_string(nm) + "x" +
                             std::to_string(nm));
    CovBounds b;
    b.exact = banach_constant(f_split.J * h_jac);
    b.lower = banach_constant(f_split.J) * banach_constant(h_jac);
    b.upper = banach_constant(f_split.J) * operator_norm(h_jac);
    if (!(b.lower <= b.exact + 1e-10 && b.exact <= b.upper + 1e-10))
        throw ConsistencyError("covering-bound chain violated: lower=" +
                               std::to_string(b.lower) + " exact=" + std::to_string(b.exact) +
                               " upper=" + std::to_string(b.upper));
    return b;
}

}  // namespace openstab
