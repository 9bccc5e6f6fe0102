#include "openstab/transversality.hpp"

#include <cmath>

namespace openstab {

std::optional<TransversalityConstant> transversality_constant(
    const JacobianSplit& split, double tol) {
    if (split.n() != split.m())
        throw DimensionError("transversality constant requires n = m, got n=" +
                             std::to_string(split.n()) + " m=" + std::to_string(split.m()));
    const Eigen::MatrixXd& A = split.A;
    const Eigen::MatrixXd& B = split.B;
    double bb = B.squaredNorm();
    double c = 0.0;
    if (bb > 0.0) c = -A.cwiseProduct(B).sum() / bb;
    if (c < -tol) return std::nullopt;
    c = std::max(c, 0.0);
    double residual = (A + c * B).norm();
    if (residual > tol * (1.0 + A.norm())) return std::nullopt;
    return TransversalityConstant{c, residual};
}

std::optional<TransverseFactor> transverse_factor(const JacobianSplit& split,
                                                  double tol) {
    const Eigen::MatrixXd& A = split.A;
    const Eigen::MatrixXd& B = split.B;
    Eigen::MatrixXd Q = -pinv(B) * A;
    double residual = (A + B * Q).norm();
    if (residual > tol * (1.0 + A.norm())) return std::nullopt;
    return TransverseFactor{std::move(Q), residual};
}

Type2Result type2_check(const JacobianSplit& split, double tol) {
    Eigen::MatrixXd P = range_projection(split.B);
    Eigen::MatrixXd AA = split.A * split.A.transpose();
    Type2Result r;
    r.residual = (P * AA * P - AA).norm();
    r.holds = r.residual <= tol * (1.0 + AA.norm());
    r.lemma_gap = (AA - 0.5 * (P * AA + AA * P)).norm();
    return r;
}

TransversalityReport classify_split(const JacobianSplit& split, double tol) {
    TransversalityReport rep;
    rep.point_x = split.point_x;
    rep.point_u = split.point_u;
    if (split.n() == split.m()) rep.tc = transversality_constant(split, tol);
    rep.type1 = transverse_factor(split, tol);
    rep.type2 = type2_check(split, tol);
    rep.lemma_qtli_gap = rep.type2.lemma_gap;
    rep.rank_condition = numerical_rank(split.B) == split.n();

    // The three-way equivalence is asserted only where it is numerically
    // decidable: the type II residual compares quantities of scale ||A||^2,
    // so below cov ~ sqrt(tol) the relative tolerances blur the verdicts.
    if (banach_constant(split.J) > std::sqrt(tol)) {
        bool t1 = rep.type1.has_value();
        bool t2 = rep.type2.holds;
        bool t3 = rep.rank_condition;
        if (t1 != t2 || t2 != t3)
            throw ConsistencyError(
                "semitransversality equivalences disagree under cov > 0 "
                "(type1=" + std::to_string(t1) + " type2=" + std::to_string(t2) +
                " rank=" + std::to_string(t3) + "); check the tolerance");
    }
    return rep;
}

TransversalityReport classify(const SystemDef& sys, const Eigen::VectorXd& x,
                              const Eigen::VectorXd& u, double tol) {
    return classify_split(split_at(sys, x, u), tol);
}

}  // namespace openstab
