#pragma once

#include <functional>
#include <variant>

#include "openstab/transversality.hpp"

namespace openstab {

// Stationary linear change of variables h(x,u) = Hx*x + (0;u). Built so that
// the composed field f(h(.)) has spatial linearization -I at the base point.
struct CompositionOperator {
    Eigen::MatrixXd Hx;  // (n+m) x n, full column rank
    Eigen::VectorXd base_x;
    Eigen::VectorXd base_u;

    // Returns (h1, h2) with h1 in R^n, h2 in R^m.
    std::pair<Eigen::VectorXd, Eigen::VectorXd> apply(const Eigen::VectorXd& x,
                                                      const Eigen::VectorXd& u) const;

    // Full (n+m) x (n+m) Jacobian [Hx | (0;I)].
    Eigen::MatrixXd jacobian() const;
};

// Hx = -(J_f|(0,0))^+. Requires f(0,0) = 0 and cov f(0,0) > 0; throws
// RankError with a diagnostic when the linearization is rank deficient.
CompositionOperator build_composition_h(const SystemDef& sys);

// Symbolic composed system f(h(x,u)) as a new SystemDef.
SystemDef apply_composition(const SystemDef& sys, const CompositionOperator& op);

enum class LawMethod { Transversal, Semitransversal1, Semitransversal2, Shifted, Fixpoint, Trivial };

const char* law_method_name(LawMethod method);

// u(x) = shift_u + K (x - shift_x); shifts are zero vectors for laws anchored
// at the origin.
struct LinearLaw {
    Eigen::MatrixXd K;  // m x n
    Eigen::VectorXd shift_x;
    Eigen::VectorXd shift_u;
    double closed_loop_residual = 0.0;  // ||A + BK + I||_F at the anchor point
};

// Control sampled on a regular grid over an axis-aligned box, evaluated by
// multilinear interpolation. The box is inscribed in the ball of `radius`
// unless overridden, and must contain the origin.
struct GridControl {
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;
    int grid_n = 0;  // cells per axis; grid_n+1 nodes per axis
    double radius = 0.0;
    std::vector<Eigen::VectorXd> values;  // (grid_n+1)^n entries, row-major
    bool converged = false;
    double residual = 0.0;  // ||u - Tu||_inf over the nodes
    int iterations = 0;

    int n() const { return static_cast<int>(lo.size()); }
    int m() const { return values.empty() ? 0 : static_cast<int>(values.front().size()); }
    int nodes_per_axis() const { return grid_n + 1; }
    int node_count() const;
    Eigen::VectorXd node_coord(int flat) const;
    bool contains(const Eigen::VectorXd& x) const;
    Eigen::VectorXd at(const Eigen::VectorXd& x) const;  // throws DomainError outside
};

struct FeedbackLaw {
    LawMethod method = LawMethod::Trivial;
    std::variant<LinearLaw, GridControl> impl;

    bool is_linear() const { return std::holds_alternative<LinearLaw>(impl); }
    const LinearLaw& linear() const { return std::get<LinearLaw>(impl); }
    const GridControl& grid() const { return std::get<GridControl>(impl); }

    Eigen::VectorXd evaluate(const Eigen::VectorXd& x) const;
    bool in_domain(const Eigen::VectorXd& x) const;
};

FeedbackLaw trivial_law(int n, int m);

using ControlFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
ControlFn as_control(const FeedbackLaw& law);

// K = -(c^2+1) B^* (A A^* + B B^*)^-1 (I + A); requires n = m, A = -cB within
// tol, and cov > 0. Closed loop A + BK = -I within 1e-9.
FeedbackLaw law_transversal(const JacobianSplit& split, double c,
                            double tol = kTransversalityTol);

// K = -(Q Q^* + I) B^* (A A^* + B B^*)^-1 (I + A); requires A = -BQ within tol
// and cov > 0.
FeedbackLaw law_semitransversal_1(const JacobianSplit& split, const Eigen::MatrixXd& Q,
                                  double tol = kTransversalityTol);

// K = -(B^+ A A^* (B^+)^* + I) B^* (A A^* + B B^*)^-1 (I + A); requires the
// type II identity within tol and cov > 0.
FeedbackLaw law_semitransversal_2(const JacobianSplit& split,
                                  double tol = kTransversalityTol);

// Anchors the semitransversal law at (x1, u1): builds the split there, applies
// the law_semitransversal_2 gain, and records the shift so the deployed
// control is u(x) = u1 + K (x - x1).
FeedbackLaw law_shifted(const SystemDef& sys, const Eigen::VectorXd& x1,
                        const Eigen::VectorXd& u1, double tol = kTransversalityTol);

// Augmented family F(x, w) = G(x) - G(0) + c f(w) with state x in R^n and
// control w = (y, u) in R^(n+m). G must map R^n -> R^n (m = 0), c != 0.
SystemDef family_F(const SystemDef& f, const SystemDef& G, double c);

struct FixpointOptions {
    double radius = 0.5;
    int grid_n = 32;
    double damping = 0.5;
    int max_iter = 500;
    double tol = 1e-6;
    Eigen::VectorXd u0;      // initial node value, size m; zeros when empty
    Eigen::VectorXd box_lo;  // optional box override, size n
    Eigen::VectorXd box_hi;
};

// Damped Picard iteration for the punctured-neighborhood fixed-point control:
//   u_{k+1}(x) = (1-damping) u_k(x) + damping * integral_0^1 U(s x, x) ds,
//   U(p, y)    = -(df/du|(p,u(p)))^+ (I + df/dx|(p,u(p))) y,
// with u interpolated multilinearly between grid nodes and the s-integral by
// composite Simpson on [eps, 1], eps = 1/grid_n, 2*grid_n panels, plus a
// rectangle term for the truncated [0, eps] piece. Preflight requires
// cov > 0 and the type II identity at every nonzero node paired with u0.
// Non-convergence is reported through the flags, not thrown.
GridControl fixpoint_control(const SystemDef& sys, const FixpointOptions& opt);

// One application of the exact integral operator to an arbitrary control:
// Tu(x) = lim_{eps->0} integral_eps^1 U(s x, x) ds, evaluated with tanh-sinh
// quadrature (handles the power singularity at s = 0). Oracle for closed-form
// fixed points.
Eigen::VectorXd fixpoint_apply_exact(const SystemDef& sys, const ControlFn& u,
                                     const Eigen::VectorXd& x);

// ||u(x) - Tu(x)|| at one point.
double fixpoint_residual_exact(const SystemDef& sys, const ControlFn& u,
                               const Eigen::VectorXd& x);

struct LyapunovValue {
    double v = 0.0;
    double vdot = 0.0;
};

// v(x) = ||f(x,u(x))||^2 / 2 and its derivative along the closed-loop flow,
// computed by central differences of the field along itself.
LyapunovValue lyapunov_value(const SystemDef& sys, const FeedbackLaw& law,
                             const Eigen::VectorXd& x);
LyapunovValue lyapunov_value(const SystemDef& sys, const ControlFn& control,
                             const Eigen::VectorXd& x);

}  // namespace openstab
