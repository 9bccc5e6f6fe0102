#include "openstab/synthesis.hpp"

#include <cmath>

namespace openstab {

namespace {

// Symmetric PSD pseudoinverse through an eigendecomposition. Coincides with
// the inverse whenever the matrix is nonsingular.
Eigen::MatrixXd symmetric_pseudoinverse(const Eigen::MatrixXd& G) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const Eigen::VectorXd& lam = es.eigenvalues();
    double lmax = 0.0;
    for (Eigen::Index i = 0; i < lam.size(); ++i) lmax = std::max(lmax, std::abs(lam[i]));
    double thresh = static_cast<double>(G.rows()) * lmax * 2.220446049250313e-16;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        if (std::abs(lam[i]) > thresh) inv[i] = 1.0 / lam[i];
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

// Shared gain kernel K = -W B^* (A A^* + B B^*)^+ (I + A). Every linear law
// is this kernel with a different weight W, which keeps laws that coincide on
// paper bitwise identical here as well.
Eigen::MatrixXd feedback_gain(const JacobianSplit& s, const Eigen::MatrixXd& W) {
    const int n = s.n();
    Eigen::MatrixXd gram = s.A * s.A.transpose() + s.B * s.B.transpose();
    if (numerical_rank(gram) < n)
        throw ConsistencyError("A A^* + B B^* is singular although cov > 0 was verified");
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    return -(W * s.B.transpose() * symmetric_pseudoinverse(gram) * (I + s.A));
}

FeedbackLaw finish_linear_law(const JacobianSplit& s, LawMethod method,
                              Eigen::MatrixXd K, Eigen::VectorXd shift_x,
                              Eigen::VectorXd shift_u) {
    LinearLaw lin;
    lin.closed_loop_residual =
        (s.A + s.B * K + Eigen::MatrixXd::Identity(s.n(), s.n())).norm();
    if (lin.closed_loop_residual > 1e-9)
        throw ConsistencyError("closed-loop linearization misses -I by " +
                               std::to_string(lin.closed_loop_residual));
    lin.K = std::move(K);
    lin.shift_x = std::move(shift_x);
    lin.shift_u = std::move(shift_u);
    FeedbackLaw law;
    law.method = method;
    law.impl = std::move(lin);
    return law;
}

void require_open(const JacobianSplit& s, const char* who) {
    if (!(banach_constant(s.J) > 0.0))
        throw RankError(std::string(who) + ": linearization is rank deficient (cov = 0), "
                        "the point fails the quantitative openness condition");
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::VectorXd> CompositionOperator::apply(
    const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    const int n = static_cast<int>(Hx.cols());
    const int m = static_cast<int>(Hx.rows()) - n;
    if (x.size() != n || u.size() != m)
        throw DimensionError("composition operator expects (" + std::to_string(n) + "," +
                             std::to_string(m) + ") input");
    Eigen::VectorXd hx = Hx * x;
    Eigen::VectorXd h1 = hx.head(n);
    Eigen::VectorXd h2 = hx.tail(m) + u;
    return {h1, h2};
}

Eigen::MatrixXd CompositionOperator::jacobian() const {
    const int n = static_cast<int>(Hx.cols());
    const int m = static_cast<int>(Hx.rows()) - n;
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n + m, n + m);
    J.leftCols(n) = Hx;
    J.bottomRightCorner(m, m) = Eigen::MatrixXd::Identity(m, m);
    return J;
}

CompositionOperator build_composition_h(const SystemDef& sys) {
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(sys.n);
    Eigen::VectorXd u0 = Eigen::VectorXd::Zero(sys.m);
    Eigen::VectorXd f0 = eval(sys, x0, u0);
    if (f0.lpNorm<Eigen::Infinity>() > 1e-12)
        throw Error("composition operator requires f(0,0) = 0; got ||f(0,0)|| = " +
                    std::to_string(f0.norm()));

    JacobianSplit s = split_at(sys, x0, u0);
    require_open(s, "composition operator");

    CompositionOperator op;
    op.Hx = -right_pseudoinverse(s.J);
    op.base_x = x0;
    op.base_u = u0;

    Eigen::MatrixXd check = s.J * op.Hx + Eigen::MatrixXd::Identity(sys.n, sys.n);
    if (check.norm() > 1e-10)
        throw ConsistencyError("J * Hx != -I, defect " + std::to_string(check.norm()));
    if (numerical_rank(op.Hx) < sys.n)
        throw ConsistencyError("Hx lost column rank; h would not be a diffeomorphism");
    return op;
}

SystemDef apply_composition(const SystemDef& sys, const CompositionOperator& op) {
    const int n = sys.n;
    const int m = sys.m;
    std::vector<ExprPtr> subst_x(static_cast<size_t>(n));
    std::vector<ExprPtr> subst_u(static_cast<size_t>(m));
    for (int i = 0; i < n; ++i) {
        std::vector<double> row(static_cast<size_t>(n));
        for (int k = 0; k < n; ++k) row[static_cast<size_t>(k)] = op.Hx(i, k);
        subst_x[static_cast<size_t>(i)] = make_linear_combination(row, make_var_x);
    }
    for (int j = 0; j < m; ++j) {
        std::vector<double> row(static_cast<size_t>(n));
        for (int k = 0; k < n; ++k) row[static_cast<size_t>(k)] = op.Hx(n + j, k);
        ExprPtr combo = make_linear_combination(row, make_var_x);
        ExprPtr uj = make_var_u(j + 1);
        bool combo_zero = combo->kind == ExprKind::Constant && combo->constant == 0.0;
        subst_u[static_cast<size_t>(j)] = combo_zero ? uj : make_add(combo, uj);
    }

    SystemDef out;
    out.n = n;
    out.m = m;
    out.name = sys.name.empty() ? "modified" : sys.name + "_mod";
    out.exprs.reserve(static_cast<size_t>(n));
    for (const ExprPtr& e : sys.exprs) out.exprs.push_back(substitute(e, subst_x, subst_u));
    return out;
}

const char* law_method_name(LawMethod method) {
    switch (method) {
        case LawMethod::Transversal: return "t1";
        case LawMethod::Semitransversal1: return "st1";
        case LawMethod::Semitransversal2: return "qt1";
        case LawMethod::Shifted: return "shift";
        case LawMethod::Fixpoint: return "fixpoint";
        case LawMethod::Trivial: return "trivial";
    }
    return "?";
}

Eigen::VectorXd FeedbackLaw::evaluate(const Eigen::VectorXd& x) const {
    if (is_linear()) {
        const LinearLaw& lin = linear();
        if (lin.shift_x.size() > 0) return lin.shift_u + lin.K * (x - lin.shift_x);
        return lin.K * x;
    }
    return grid().at(x);
}

bool FeedbackLaw::in_domain(const Eigen::VectorXd& x) const {
    return is_linear() || grid().contains(x);
}

FeedbackLaw trivial_law(int n, int m) {
    LinearLaw lin;
    lin.K = Eigen::MatrixXd::Zero(m, n);
    FeedbackLaw law;
    law.method = LawMethod::Trivial;
    law.impl = std::move(lin);
    return law;
}

ControlFn as_control(const FeedbackLaw& law) {
    return [law](const Eigen::VectorXd& x) { return law.evaluate(x); };
}

FeedbackLaw law_transversal(const JacobianSplit& split, double c, double tol) {
    if (split.n() != split.m())
        throw DimensionError("transversal law requires n = m");
    require_open(split, "transversal law");
    double residual = (split.A + c * split.B).norm();
    if (residual > tol * (1.0 + split.A.norm()))
        throw Error("transversality residual too large: ||A + cB|| = " +
                    std::to_string(residual));
    const int m = split.m();
    Eigen::MatrixXd W = (c * c + 1.0) * Eigen::MatrixXd::Identity(m, m);
    return finish_linear_law(split, LawMethod::Transversal, feedback_gain(split, W),
                             Eigen::VectorXd(), Eigen::VectorXd());
}

FeedbackLaw law_semitransversal_1(const JacobianSplit& split, const Eigen::MatrixXd& Q,
                                  double tol) {
    if (Q.rows() != split.m() || Q.cols() != split.n())
        throw DimensionError("transverse factor must be m x n");
    require_open(split, "semitransversal law");
    double residual = (split.A + split.B * Q).norm();
    if (residual > tol * (1.0 + split.A.norm()))
        throw Error("transverse-factor residual too large: ||A + BQ|| = " +
                    std::to_string(residual));
    const int m = split.m();
    Eigen::MatrixXd W = Q * Q.transpose() + Eigen::MatrixXd::Identity(m, m);
    return finish_linear_law(split, LawMethod::Semitransversal1, feedback_gain(split, W),
                             Eigen::VectorXd(), Eigen::VectorXd());
}

namespace {

Eigen::MatrixXd type2_weight(const JacobianSplit& split) {
    const int m = split.m();
    Eigen::MatrixXd Bp = right_pseudoinverse(split.B);
    Eigen::MatrixXd AA = split.A * split.A.transpose();
    return Bp * AA * Bp.transpose() + Eigen::MatrixXd::Identity(m, m);
}

}  // namespace

FeedbackLaw law_semitransversal_2(const JacobianSplit& split, double tol) {
    require_open(split, "semitransversal law");
    Type2Result t2 = type2_check(split, tol);
    if (!t2.holds)
        throw Error("type II identity fails: residual " + std::to_string(t2.residual));
    return finish_linear_law(split, LawMethod::Semitransversal2,
                             feedback_gain(split, type2_weight(split)),
                             Eigen::VectorXd(), Eigen::VectorXd());
}

FeedbackLaw law_shifted(const SystemDef& sys, const Eigen::VectorXd& x1,
                        const Eigen::VectorXd& u1, double tol) {
    JacobianSplit split = split_at(sys, x1, u1);
    require_open(split, "shifted law");
    Type2Result t2 = type2_check(split, tol);
    if (!t2.holds)
        throw Error("semitransversality fails at the shift point: type II residual " +
                    std::to_string(t2.residual));
    FeedbackLaw law = finish_linear_law(split, LawMethod::Shifted,
                                        feedback_gain(split, type2_weight(split)), x1, u1);
    return law;
}

SystemDef family_F(const SystemDef& f, const SystemDef& G, double c) {
    if (c == 0.0) throw Error("family parameter c must be nonzero");
    if (G.m != 0 || G.n != f.n)
        throw DimensionError("G must map R^n -> R^n with n = " + std::to_string(f.n));

    const int n = f.n;
    const int m = f.m;
    Eigen::VectorXd G0 = eval(G, Eigen::VectorXd::Zero(n), Eigen::VectorXd());

    // In the augmented system the control is w = (y, u): f's state variables
    // become w_1..w_n and f's controls become w_{n+1}..w_{n+m}.
    std::vector<ExprPtr> subst_x(static_cast<size_t>(n));
    std::vector<ExprPtr> subst_u(static_cast<size_t>(m));
    for (int i = 0; i < n; ++i) subst_x[static_cast<size_t>(i)] = make_var_u(i + 1);
    for (int j = 0; j < m; ++j) subst_u[static_cast<size_t>(j)] = make_var_u(n + j + 1);

    SystemDef F;
    F.n = n;
    F.m = n + m;
    F.name = f.name.empty() ? "family" : f.name + "_family";
    F.exprs.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        ExprPtr fw = substitute(f.exprs[static_cast<size_t>(i)], subst_x, subst_u);
        ExprPtr term = c == 1.0 ? fw : make_mul(make_constant(c), fw);
        const ExprPtr& gi = G.exprs[static_cast<size_t>(i)];
        if (gi->kind == ExprKind::Constant) {
            // Constant G contributes G_i - G_i(0) = 0 exactly.
            F.exprs.push_back(term);
            continue;
        }
        ExprPtr e = make_add(gi, term);
        if (G0[i] != 0.0) e = make_sub(e, make_constant(G0[i]));
        F.exprs.push_back(e);
    }
    return F;
}

LyapunovValue lyapunov_value(const SystemDef& sys, const ControlFn& control,
                             const Eigen::VectorXd& x) {
    auto field = [&](const Eigen::VectorXd& y) { return eval(sys, y, control(y)); };
    Eigen::VectorXd F = field(x);
    LyapunovValue out;
    out.v = 0.5 * F.squaredNorm();
    double nw = F.norm();
    if (nw == 0.0) return out;
    double h = 1e-6 * (1.0 + x.norm()) / nw;
    Eigen::VectorXd jw = (field(x + h * F) - field(x - h * F)) / (2.0 * h);
    out.vdot = jw.dot(F);
    return out;
}

LyapunovValue lyapunov_value(const SystemDef& sys, const FeedbackLaw& law,
                             const Eigen::VectorXd& x) {
    return lyapunov_value(sys, as_control(law), x);
}

}  // namespace openstab
