#include "openstab/simulation.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace openstab {

namespace {

constexpr double kLogFloor = 1e-14;

}  // namespace

Trajectory integrate(const SystemDef& sys, const ControlFn& control,
                     const Eigen::VectorXd& x0, double t_end, double step,
                     const std::string& law_tag) {
    if (!(step > 0.0)) throw Error("integration step must be positive");
    if (x0.size() != sys.n) throw DimensionError("x0 must have length n");

    auto field = [&](const Eigen::VectorXd& y) { return eval(sys, y, control(y)); };

    Trajectory traj;
    traj.x0 = x0;
    traj.law_tag = law_tag;
    const int steps = static_cast<int>(std::ceil(t_end / step - 1e-9));
    traj.times.reserve(static_cast<size_t>(steps) + 1);
    traj.states.reserve(static_cast<size_t>(steps) + 1);
    traj.times.push_back(0.0);
    traj.states.push_back(x0);

    Eigen::VectorXd x = x0;
    for (int i = 0; i < steps; ++i) {
        try {
            Eigen::VectorXd k1 = field(x);
            Eigen::VectorXd k2 = field(x + 0.5 * step * k1);
            Eigen::VectorXd k3 = field(x + 0.5 * step * k2);
            Eigen::VectorXd k4 = field(x + step * k3);
            x += (step / 6.0) * (k1 + 2.0 * (k2 + k3) + k4);
        } catch (const DomainError&) {
            traj.truncated = true;
            break;
        }
        traj.times.push_back((i + 1) * step);
        traj.states.push_back(x);
    }
    return traj;
}

Trajectory integrate(const SystemDef& sys, const FeedbackLaw& law,
                     const Eigen::VectorXd& x0, double t_end, double step) {
    if (!law.in_domain(x0))
        throw DomainError("initial state is outside the control's domain");
    return integrate(sys, as_control(law), x0, t_end, step, law_method_name(law.method));
}

DecayFit fit_decay(const std::vector<Trajectory>& trajectories, double delta) {
    if (trajectories.empty()) throw Error("fit_decay needs at least one trajectory");
    for (const Trajectory& traj : trajectories) {
        if (traj.states.empty()) throw Error("fit_decay received an empty trajectory");
        if (!(traj.x0.norm() < delta))
            throw Error("initial state with ||x0|| = " + std::to_string(traj.x0.norm()) +
                        " is not inside the delta ball " + std::to_string(delta));
    }

    // Pooled slope with per-trajectory intercepts; robust to truncation and to
    // starts of different magnitude.
    double sxx = 0.0, sxy = 0.0, sst = 0.0;
    struct Demeaned {
        std::vector<double> t, y;
        double tbar = 0.0, ybar = 0.0;
    };
    std::vector<Demeaned> parts;
    for (const Trajectory& traj : trajectories) {
        Demeaned d;
        for (size_t i = 0; i < traj.states.size(); ++i) {
            double nrm = traj.states[i].norm();
            if (nrm < kLogFloor) continue;
            d.t.push_back(traj.times[i]);
            d.y.push_back(std::log(nrm));
        }
        if (d.t.empty()) continue;
        for (size_t i = 0; i < d.t.size(); ++i) {
            d.tbar += d.t[i];
            d.ybar += d.y[i];
        }
        d.tbar /= static_cast<double>(d.t.size());
        d.ybar /= static_cast<double>(d.t.size());
        for (size_t i = 0; i < d.t.size(); ++i) {
            double dt = d.t[i] - d.tbar;
            double dy = d.y[i] - d.ybar;
            sxx += dt * dt;
            sxy += dt * dy;
            sst += dy * dy;
        }
        parts.push_back(std::move(d));
    }
    if (parts.empty() || sxx == 0.0)
        throw Error("all trajectory samples sit below the log floor; decay fit is degenerate");

    double slope = sxy / sxx;
    DecayFit fit;
    fit.alpha = -slope;
    fit.delta = delta;

    double ssr = 0.0;
    for (const Demeaned& d : parts)
        for (size_t i = 0; i < d.t.size(); ++i) {
            double r = (d.y[i] - d.ybar) - slope * (d.t[i] - d.tbar);
            ssr += r * r;
        }
    fit.r2 = sst > 0.0 ? 1.0 - ssr / sst : 1.0;

    double M = 0.0;
    for (const Trajectory& traj : trajectories) {
        double nx0 = traj.x0.norm();
        if (nx0 == 0.0) continue;
        for (size_t i = 0; i < traj.states.size(); ++i) {
            double nrm = traj.states[i].norm();
            if (nrm < kLogFloor) continue;
            M = std::max(M, nrm * std::exp(fit.alpha * traj.times[i]) / nx0);
        }
    }
    fit.M = M;

    bool envelope = fit.alpha > 0.0;
    for (const Trajectory& traj : trajectories) {
        double nx0 = traj.x0.norm();
        for (size_t i = 0; i < traj.states.size() && envelope; ++i) {
            double bound = 1.01 * M * nx0 * std::exp(-fit.alpha * traj.times[i]);
            if (traj.states[i].norm() > bound) envelope = false;
        }
    }
    fit.envelope_ok = envelope;
    return fit;
}

std::vector<Trajectory> les_trajectories(const SystemDef& sys, const ControlFn& control,
                                         double delta, int samples, double t_end,
                                         double step, std::uint64_t seed,
                                         const std::string& law_tag) {
    if (samples < 1) throw Error("verify_les needs at least one sample");
    if (!(delta > 0.0)) throw Error("delta must be positive");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double scales[] = {1.0, 0.5, 0.25};

    std::vector<Trajectory> trajs;
    trajs.reserve(static_cast<size_t>(samples) * 3);
    for (int i = 0; i < samples; ++i) {
        Eigen::VectorXd dir(sys.n);
        double nrm = 0.0;
        do {
            for (int k = 0; k < sys.n; ++k) dir[k] = gauss(rng);
            nrm = dir.norm();
        } while (nrm < 1e-12);
        dir /= nrm;
        for (double sc : scales) {
            Eigen::VectorXd x0 = (0.5 * delta * sc) * dir;
            trajs.push_back(integrate(sys, control, x0, t_end, step, law_tag));
        }
    }
    return trajs;
}

DecayFit verify_les(const SystemDef& sys, const FeedbackLaw& law, double delta,
                    int samples, double t_end, double step, std::uint64_t seed) {
    DecayFit fit = fit_decay(les_trajectories(sys, as_control(law), delta, samples,
                                              t_end, step, seed,
                                              law_method_name(law.method)),
                             delta);
    fit.delta = delta;
    return fit;
}

DecayFit verify_les(const SystemDef& sys, const ControlFn& control, double delta,
                    int samples, double t_end, double step, std::uint64_t seed) {
    DecayFit fit =
        fit_decay(les_trajectories(sys, control, delta, samples, t_end, step, seed),
                  delta);
    fit.delta = delta;
    return fit;
}

DescentCheck lyapunov_descent_check(const SystemDef& sys, const FeedbackLaw& law,
                                    const std::vector<Eigen::VectorXd>& grid) {
    if (grid.empty()) throw Error("descent check needs a nonempty grid");
    DescentCheck out;
    out.worst_vdot = -std::numeric_limits<double>::infinity();
    int descending = 0;
    for (const Eigen::VectorXd& x : grid) {
        if (x.norm() == 0.0)
            throw Error("descent-check grid must exclude the origin");
        LyapunovValue lv = lyapunov_value(sys, law, x);
        if (lv.vdot < 0.0) ++descending;
        if (lv.vdot > out.worst_vdot) {
            out.worst_vdot = lv.vdot;
            out.worst = x;
        }
    }
    out.fraction_descending = static_cast<double>(descending) / static_cast<double>(grid.size());
    return out;
}

}  // namespace openstab
