#include "openstab/system.hpp"

namespace openstab {

namespace {

void check_point(const SystemDef& sys, const Eigen::VectorXd& x,
                 const Eigen::VectorXd& u) {
    if (x.size() != sys.n || u.size() != sys.m)
        throw DimensionError("point has dimensions (" + std::to_string(x.size()) + "," +
                             std::to_string(u.size()) + ") but the system expects (" +
                             std::to_string(sys.n) + "," + std::to_string(sys.m) + ")");
}

}  // namespace

Eigen::VectorXd eval(const SystemDef& sys, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& u) {
    check_point(sys, x, u);
    std::vector<double> xs(x.data(), x.data() + x.size());
    std::vector<double> us(u.data(), u.data() + u.size());
    Eigen::VectorXd out(sys.n);
    for (int k = 0; k < sys.n; ++k) {
        try {
            out[k] = eval_expr(*sys.exprs[static_cast<size_t>(k)], xs, us);
        } catch (const DomainError& e) {
            throw DomainError(e.what(), k + 1);
        }
    }
    return out;
}

DualVec jacobian(const SystemDef& sys, const Eigen::VectorXd& x,
                 const Eigen::VectorXd& u) {
    check_point(sys, x, u);
    const int n = sys.n;
    const int m = sys.m;

    DualVec res;
    res.value.resize(n);
    res.jacobian.resize(n, n + m);

    std::vector<Dual> xs(static_cast<size_t>(n));
    std::vector<Dual> us(static_cast<size_t>(m));
    for (int i = 0; i < n; ++i) xs[static_cast<size_t>(i)] = {x[i], 0.0};
    for (int j = 0; j < m; ++j) us[static_cast<size_t>(j)] = {u[j], 0.0};

    // One forward pass per input direction.
    for (int dir = 0; dir < n + m; ++dir) {
        Dual* seed = dir < n ? &xs[static_cast<size_t>(dir)] : &us[static_cast<size_t>(dir - n)];
        seed->der = 1.0;
        for (int k = 0; k < n; ++k) {
            Dual d;
            try {
                d = eval_expr(*sys.exprs[static_cast<size_t>(k)], xs, us);
            } catch (const DomainError& e) {
                throw DomainError(e.what(), k + 1);
            }
            res.jacobian(k, dir) = d.der;
            if (dir == 0) res.value[k] = d.val;
        }
        seed->der = 0.0;
    }
    return res;
}

Eigen::MatrixXd jacobian_fd(const SystemDef& sys, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& u, double step) {
    check_point(sys, x, u);
    if (!(step > 0.0)) throw Error("finite-difference step must be positive");
    const int n = sys.n;
    const int m = sys.m;
    Eigen::MatrixXd J(n, n + m);
    for (int dir = 0; dir < n + m; ++dir) {
        Eigen::VectorXd xp = x, xm = x, up = u, um = u;
        if (dir < n) {
            xp[dir] += step;
            xm[dir] -= step;
        } else {
            up[dir - n] += step;
            um[dir - n] -= step;
        }
        J.col(dir) = (eval(sys, xp, up) - eval(sys, xm, um)) / (2.0 * step);
    }
    return J;
}

}  // namespace openstab
