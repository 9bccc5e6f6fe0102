#pragma once

#include <optional>

#include "openstab/variational.hpp"

namespace openstab {

inline constexpr double kTransversalityTol = 1e-8;

// A + cB = 0 up to `residual`, c >= 0.
struct TransversalityConstant {
    double c = 0.0;
    double residual = 0.0;
};

// A + BQ = 0 up to `residual`; Q is the minimum-Frobenius-norm factor -B^+ A.
struct TransverseFactor {
    Eigen::MatrixXd Q;
    double residual = 0.0;
};

struct Type2Result {
    bool holds = false;
    double residual = 0.0;   // ||P A A^* P - A A^*||_F with P = range_projection(B)
    double lemma_gap = 0.0;  // ||A A^* - (P A A^* + A A^* P)/2||_F
};

struct TransversalityReport {
    Eigen::VectorXd point_x;
    Eigen::VectorXd point_u;
    std::optional<TransversalityConstant> tc;  // only meaningful when n = m
    std::optional<TransverseFactor> type1;
    Type2Result type2;
    double lemma_qtli_gap = 0.0;
    bool rank_condition = false;  // rank(B) = n
};

// Least-squares c minimizing ||A + cB||_F, requires n = m. Absent when the
// minimizer is negative beyond tol or the residual (after clamping c to >= 0)
// exceeds tol * (1 + ||A||_F). When A = B = 0 returns c = 0.
std::optional<TransversalityConstant> transversality_constant(
    const JacobianSplit& split, double tol = kTransversalityTol);

// Minimum-norm least-squares factor Q = -B^+ A; present iff the residual
// ||A + BQ||_F is below tol * (1 + ||A||_F).
std::optional<TransverseFactor> transverse_factor(const JacobianSplit& split,
                                                  double tol = kTransversalityTol);

Type2Result type2_check(const JacobianSplit& split, double tol = kTransversalityTol);

// Runs every check on a prebuilt split. When cov > 0, the presence of a
// transverse factor, the type II identity, and rank(B) = n must agree
// three-ways; a mismatch throws ConsistencyError (tolerance misconfiguration).
TransversalityReport classify_split(const JacobianSplit& split,
                                    double tol = kTransversalityTol);

TransversalityReport classify(const SystemDef& sys, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u,
                              double tol = kTransversalityTol);

}  // namespace openstab
