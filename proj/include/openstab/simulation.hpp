#pragma once

#include <cstdint>

#include "openstab/synthesis.hpp"

namespace openstab {

// Sampled closed-loop solution on a uniform time grid starting at t = 0.
struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    Eigen::VectorXd x0;
    std::string law_tag;
    bool truncated = false;  // left the control's domain before t_end
};

// Classical fixed-step RK4 for x' = f(x, u(x)); the control is evaluated
// inside every stage. When a stage leaves the control's domain the trajectory
// is cut short and flagged.
Trajectory integrate(const SystemDef& sys, const FeedbackLaw& law,
                     const Eigen::VectorXd& x0, double t_end, double step);
Trajectory integrate(const SystemDef& sys, const ControlFn& control,
                     const Eigen::VectorXd& x0, double t_end, double step,
                     const std::string& law_tag = "custom");

// Exponential envelope fit ||phi(t)|| <= M ||x0|| exp(-alpha t).
struct DecayFit {
    double alpha = 0.0;
    double M = 0.0;
    double r2 = 0.0;
    bool envelope_ok = false;
    double delta = 0.0;
};

// alpha from the pooled least-squares slope of log||phi|| against t
// (per-trajectory intercepts; samples below 1e-14 excluded), M from the
// worst normalized ratio, then the envelope is re-verified with 1.01 slack.
DecayFit fit_decay(const std::vector<Trajectory>& trajectories, double delta);

// Closed-loop solutions from `samples` directions drawn uniformly on the
// sphere, each scaled by delta/2 * {1, 1/2, 1/4}. Deterministic for a fixed
// seed.
std::vector<Trajectory> les_trajectories(const SystemDef& sys, const ControlFn& control,
                                         double delta, int samples, double t_end,
                                         double step = 1e-3,
                                         std::uint64_t seed = 0x5eedu,
                                         const std::string& law_tag = "custom");

// Aggregates les_trajectories via fit_decay.
DecayFit verify_les(const SystemDef& sys, const FeedbackLaw& law, double delta,
                    int samples, double t_end, double step = 1e-3,
                    std::uint64_t seed = 0x5eedu);
DecayFit verify_les(const SystemDef& sys, const ControlFn& control, double delta,
                    int samples, double t_end, double step = 1e-3,
                    std::uint64_t seed = 0x5eedu);

struct DescentCheck {
    double fraction_descending = 0.0;
    Eigen::VectorXd worst;  // node with the largest vdot
    double worst_vdot = 0.0;
};

// Evaluates lyapunov_value over a grid of states (which must exclude the
// origin) and reports how often the closed loop descends.
DescentCheck lyapunov_descent_check(const SystemDef& sys, const FeedbackLaw& law,
                                    const std::vector<Eigen::VectorXd>& grid);

}  // namespace openstab
