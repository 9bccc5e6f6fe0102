#include <cmath>

#include "openstab/synthesis.hpp"

namespace openstab {

namespace {

std::string vec_str(const Eigen::VectorXd& v) {
    std::string s = "(";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += format_double(v[i]);
    }
    return s + ")";
}

// U(p, y) = -(df/du|(p,u))^+ (I + df/dx|(p,u)) y.
Eigen::VectorXd transport_operator(const SystemDef& sys, const Eigen::VectorXd& p,
                                   const Eigen::VectorXd& u_at_p,
                                   const Eigen::VectorXd& y) {
    JacobianSplit s = split_at(sys, p, u_at_p);
    Eigen::MatrixXd Bp = right_pseudoinverse(s.B);
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(sys.n, sys.n);
    return -(Bp * ((I + s.A) * y));
}

}  // namespace

int GridControl::node_count() const {
    int count = 1;
    for (int k = 0; k < n(); ++k) count *= nodes_per_axis();
    return count;
}

Eigen::VectorXd GridControl::node_coord(int flat) const {
    const int npa = nodes_per_axis();
    Eigen::VectorXd coord(n());
    for (int k = n() - 1; k >= 0; --k) {
        int idx = flat % npa;
        flat /= npa;
        coord[k] = lo[k] + (hi[k] - lo[k]) * static_cast<double>(idx) /
                               static_cast<double>(grid_n);
    }
    return coord;
}

bool GridControl::contains(const Eigen::VectorXd& x) const {
    if (x.size() != n()) return false;
    for (int k = 0; k < n(); ++k) {
        double slack = 1e-12 * (1.0 + hi[k] - lo[k]);
        if (x[k] < lo[k] - slack || x[k] > hi[k] + slack) return false;
    }
    return true;
}

Eigen::VectorXd GridControl::at(const Eigen::VectorXd& x) const {
    if (!contains(x))
        throw DomainError("point " + vec_str(x) + " is outside the control grid");
    const int dim = n();
    std::vector<int> cell(static_cast<size_t>(dim));
    std::vector<double> frac(static_cast<size_t>(dim));
    for (int k = 0; k < dim; ++k) {
        double h = (hi[k] - lo[k]) / static_cast<double>(grid_n);
        double t = (x[k] - lo[k]) / h;
        int j = std::min(std::max(static_cast<int>(std::floor(t)), 0), grid_n - 1);
        cell[static_cast<size_t>(k)] = j;
        frac[static_cast<size_t>(k)] = std::min(std::max(t - j, 0.0), 1.0);
    }
    const int npa = nodes_per_axis();
    Eigen::VectorXd out = Eigen::VectorXd::Zero(m());
    for (int corner = 0; corner < (1 << dim); ++corner) {
        double w = 1.0;
        int flat = 0;
        for (int k = 0; k < dim; ++k) {
            int bit = (corner >> k) & 1;
            w *= bit ? frac[static_cast<size_t>(k)] : 1.0 - frac[static_cast<size_t>(k)];
            flat = flat * npa + cell[static_cast<size_t>(k)] + bit;
        }
        if (w != 0.0) out += w * values[static_cast<size_t>(flat)];
    }
    return out;
}

namespace {

class FixpointSolver {
public:
    FixpointSolver(const SystemDef& sys, const FixpointOptions& opt)
        : sys_(sys), opt_(opt) {
        if (opt.grid_n < 2) throw Error("grid_n must be at least 2");
        if (!(opt.damping > 0.0 && opt.damping <= 1.0))
            throw Error("damping must lie in (0, 1]");
        if (!(opt.tol > 0.0)) throw Error("tolerance must be positive");
        if (!(opt.radius > 0.0)) throw Error("radius must be positive");

        grid_.grid_n = opt.grid_n;
        grid_.radius = opt.radius;
        double half = opt.radius / std::sqrt(static_cast<double>(sys.n));
        grid_.lo = opt.box_lo.size() ? opt.box_lo
                                     : Eigen::VectorXd::Constant(sys.n, -half);
        grid_.hi = opt.box_hi.size() ? opt.box_hi
                                     : Eigen::VectorXd::Constant(sys.n, half);
        if (grid_.lo.size() != sys.n || grid_.hi.size() != sys.n)
            throw DimensionError("box bounds must have length n");
        for (int k = 0; k < sys.n; ++k) {
            if (!(grid_.lo[k] < grid_.hi[k])) throw Error("box must have positive extent");
            if (grid_.lo[k] > 0.0 || grid_.hi[k] < 0.0)
                throw Error("grid box must contain the origin");
        }
        u0_ = opt.u0.size() ? opt.u0 : Eigen::VectorXd::Zero(sys.m);
        if (u0_.size() != sys.m) throw DimensionError("u0 must have length m");

        grid_.values.assign(static_cast<size_t>(grid_.node_count()), u0_);
    }

    GridControl run() {
        preflight();
        const double d = opt_.damping;
        for (int iter = 1; iter <= opt_.max_iter; ++iter) {
            std::vector<Eigen::VectorXd> applied = sweep();
            double change = 0.0;
            for (size_t j = 0; j < applied.size(); ++j) {
                Eigen::VectorXd next =
                    (1.0 - d) * grid_.values[j] + d * applied[j];
                change = std::max(change,
                                  (next - grid_.values[j]).lpNorm<Eigen::Infinity>());
                grid_.values[j] = std::move(next);
            }
            grid_.iterations = iter;
            if (change < opt_.tol) {
                grid_.converged = true;
                break;
            }
        }
        std::vector<Eigen::VectorXd> final_apply = sweep();
        double res = 0.0;
        for (size_t j = 0; j < final_apply.size(); ++j)
            res = std::max(res,
                           (grid_.values[j] - final_apply[j]).lpNorm<Eigen::Infinity>());
        grid_.residual = res;
        return std::move(grid_);
    }

private:
    bool is_origin_node(const Eigen::VectorXd& coord) const {
        for (int k = 0; k < sys_.n; ++k) {
            double scale = 1e-14 * (1.0 + grid_.hi[k] - grid_.lo[k]);
            if (std::abs(coord[k]) > scale) return false;
        }
        return true;
    }

    void preflight() const {
        for (int j = 0; j < grid_.node_count(); ++j) {
            Eigen::VectorXd coord = grid_.node_coord(j);
            if (is_origin_node(coord)) continue;
            JacobianSplit s = split_at(sys_, coord, u0_);
            if (!(banach_constant(s.J) > 0.0))
                throw PreflightError("cov = 0 at grid node x=" + vec_str(coord) +
                                     " (with u0=" + vec_str(u0_) + ")");
            Type2Result t2 = type2_check(s, opt_.tol);
            if (!t2.holds)
                throw PreflightError("semitransversality fails at grid node x=" +
                                     vec_str(coord) + ": type II residual " +
                                     std::to_string(t2.residual));
        }
    }

    // One application of the integral operator to the current grid control.
    std::vector<Eigen::VectorXd> sweep() const {
        std::vector<Eigen::VectorXd> out(grid_.values.size());
        for (int j = 0; j < grid_.node_count(); ++j) {
            Eigen::VectorXd coord = grid_.node_coord(j);
            out[static_cast<size_t>(j)] = is_origin_node(coord)
                                              ? Eigen::VectorXd::Zero(sys_.m)
                                              : integrate_ray(coord);
        }
        return out;
    }

    Eigen::VectorXd integrand(double s, const Eigen::VectorXd& x_node) const {
        Eigen::VectorXd p = s * x_node;
        Eigen::VectorXd u_at_p = grid_.at(p);
        try {
            return transport_operator(sys_, p, u_at_p, x_node);
        } catch (const RankError&) {
            throw Error("pseudoinverse breakdown: df/du is rank deficient at s=" +
                        format_double(s) + " on the ray to node x=" + vec_str(x_node));
        }
    }

    // Composite Simpson on [eps, 1] with 2*grid_n panels plus a rectangle term
    // for the truncated [0, eps] piece (exact for integrands constant in s).
    Eigen::VectorXd integrate_ray(const Eigen::VectorXd& x_node) const {
        const double eps = 1.0 / static_cast<double>(opt_.grid_n);
        const int panels = 2 * opt_.grid_n;
        const double h = (1.0 - eps) / panels;
        Eigen::VectorXd g_lo = integrand(eps, x_node);
        Eigen::VectorXd sum = g_lo + integrand(1.0, x_node);
        for (int i = 1; i < panels; ++i) {
            double w = (i % 2 == 1) ? 4.0 : 2.0;
            sum += w * integrand(eps + i * h, x_node);
        }
        return (h / 3.0) * sum + eps * g_lo;
    }

    const SystemDef& sys_;
    const FixpointOptions& opt_;
    Eigen::VectorXd u0_;
    GridControl grid_;
};

}  // namespace

GridControl fixpoint_control(const SystemDef& sys, const FixpointOptions& opt) {
    return FixpointSolver(sys, opt).run();
}

Eigen::VectorXd fixpoint_apply_exact(const SystemDef& sys, const ControlFn& u,
                                     const Eigen::VectorXd& x) {
    if (x.size() != sys.n) throw DimensionError("point must have length n");
    if (x.norm() == 0.0) return Eigen::VectorXd::Zero(sys.m);

    auto g = [&](double s) {
        Eigen::VectorXd p = s * x;
        return transport_operator(sys, p, u(p), x);
    };

    // Tanh-sinh quadrature on (0,1): s(t) = sigma(pi*sinh t) with
    // sigma(z) = 1/(1+exp(-z)); handles the integrable power singularity that
    // the pseudoinverse produces as s -> 0.
    const double t_max = 3.45;
    Eigen::VectorXd prev = Eigen::VectorXd::Zero(sys.m);
    Eigen::VectorXd integral = Eigen::VectorXd::Zero(sys.m);
    for (int level = 2; level <= 11; ++level) {
        int half = 1 << level;
        double h = t_max / half;
        Eigen::VectorXd acc = Eigen::VectorXd::Zero(sys.m);
        for (int j = -half; j <= half; ++j) {
            double t = j * h;
            double z = 0.5 * M_PI * std::sinh(t);
            double s = 1.0 / (1.0 + std::exp(-2.0 * z));
            double w = 0.25 * M_PI * std::cosh(t) / std::pow(std::cosh(z), 2);
            if (w < 1e-300 || s <= 0.0 || s >= 1.0) continue;
            acc += w * g(s);
        }
        integral = h * acc;
        if (level >= 4 &&
            (integral - prev).lpNorm<Eigen::Infinity>() <=
                1e-11 * (1.0 + integral.lpNorm<Eigen::Infinity>()))
            break;
        prev = integral;
    }
    return integral;
}

double fixpoint_residual_exact(const SystemDef& sys, const ControlFn& u,
                               const Eigen::VectorXd& x) {
    return (u(x) - fixpoint_apply_exact(sys, u, x)).norm();
}

}  // namespace openstab
