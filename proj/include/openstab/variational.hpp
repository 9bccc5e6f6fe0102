#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "openstab/system.hpp"

namespace openstab {

// Partial Jacobians A = df/dx (n x n) and B = df/du (n x m) at a point,
// together with the full J = [A | B].
struct JacobianSplit {
    Eigen::MatrixXd A;
    Eigen::MatrixXd B;
    Eigen::MatrixXd J;
    Eigen::VectorXd point_x;
    Eigen::VectorXd point_u;

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }
};

JacobianSplit split_jacobian(const Eigen::MatrixXd& J, int n, int m);

// Jacobian at (x,u) split into (A, B, J) with the point recorded.
JacobianSplit split_at(const SystemDef& sys, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u);

// Openness/regularity quantities of a linearization.
struct OpennessReport {
    double gamma = 0.0;  // Banach constant of J
    double cov = 0.0;    // covering bound (= gamma)
    double reg = 0.0;    // regularity bound, +inf when cov = 0
    int rank = 0;
    // Eigenvalues of A with nonnegative real part.
    std::vector<std::complex<double>> lambda_plus;
    // sup of the real parts over lambda_plus, -inf when the set is empty.
    double eta = 0.0;
    // Spectral sufficient condition: lambda_plus real and cov > eta.
    bool spectral_ok = false;
};

// Singular values sigma_i count as nonzero iff
// sigma_i > max(rows, cols) * sigma_max * 2^-52.
int numerical_rank(const Eigen::MatrixXd& T);

// Banach constant Gamma(T) = min over unit y of ||T^* y||. Equals the n-th
// largest singular value when T has full row rank n, and exactly 0 otherwise.
double banach_constant(const Eigen::MatrixXd& T);

// Largest singular value; 0 for an empty matrix.
double operator_norm(const Eigen::MatrixXd& T);

OpennessReport cov_reg(const JacobianSplit& split);

// T^+ = T^* (T T^*)^-1 for a full-row-rank T. Throws RankError otherwise.
Eigen::MatrixXd right_pseudoinverse(const Eigen::MatrixXd& T);

// General Moore-Penrose pseudoinverse via SVD with the relative rank cutoff.
Eigen::MatrixXd pinv(const Eigen::MatrixXd& T);

// Orthogonal projection onto range(B) (= ker(B^*)^perp). Uses B B^+ when B
// has full row rank, an orthonormal range basis from the SVD otherwise.
Eigen::MatrixXd range_projection(const Eigen::MatrixXd& B);

struct CovBounds {
    double lower = 0.0;
    double exact = 0.0;
    double upper = 0.0;
};

// Bounds for the covering constant of a composed linearization J_f * J_h:
//   Gamma(J_f) * Gamma(J_h) <= Gamma(J_f J_h) <= Gamma(J_f) * ||J_h||.
// h_jac must be (n+m) x (n+m). The chain is asserted with 1e-10 slack.
CovBounds composition_cov_bounds(const JacobianSplit& f_split,
                                 const Eigen::MatrixXd& h_jac);

}  // namespace openstab
