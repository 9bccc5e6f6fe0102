#pragma once

// Shared generators and oracles for the unit and acceptance suites. Oracles
// here are intentionally independent of the library's computation paths.

#include <Eigen/Dense>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>

#include "openstab/system.hpp"

namespace testsupport {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols,
                                     double lo = -2.0, double hi = 2.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Eigen::MatrixXd m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
    return m;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, int size, double lo = -2.0,
                                     double hi = 2.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Eigen::VectorXd v(size);
    for (int i = 0; i < size; ++i) v[i] = dist(rng);
    return v;
}

// Resamples until the smallest of the `rows` singular values clears min_sigma.
inline Eigen::MatrixXd random_full_row_rank(std::mt19937_64& rng, int rows, int cols,
                                            double min_sigma = 1e-6) {
    while (true) {
        Eigen::MatrixXd m = random_matrix(rng, rows, cols);
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
        if (svd.singularValues()[rows - 1] > min_sigma) return m;
    }
}

// Monte-Carlo lower envelope of ||T^* y|| over random unit y; brute-force
// oracle for the Banach constant.
inline double mc_min_gain(std::mt19937_64& rng, const Eigen::MatrixXd& T, int samples) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int n = static_cast<int>(T.rows());
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXd y(n);
    for (int s = 0; s < samples; ++s) {
        double nrm = 0.0;
        do {
            for (int i = 0; i < n; ++i) y[i] = gauss(rng);
            nrm = y.norm();
        } while (nrm < 1e-12);
        best = std::min(best, (T.transpose() * y).norm() / nrm);
    }
    return best;
}

// Same sampled inf, but against a per-dimension set of unit directions drawn
// once and reused (common random numbers). Keeps thousand-instance sweeps
// inside their runtime budget while the lower-bound assertion stays valid for
// any fixed sample set.
inline double mc_min_gain_shared(const Eigen::MatrixXd& T, int samples) {
    static std::map<std::pair<int, int>, Eigen::MatrixXd> cache;
    const int n = static_cast<int>(T.rows());
    auto key = std::make_pair(n, samples);
    auto it = cache.find(key);
    if (it == cache.end()) {
        std::mt19937_64 rng(0xd14ec7104u + static_cast<unsigned>(n));
        std::normal_distribution<double> gauss(0.0, 1.0);
        Eigen::MatrixXd Y(n, samples);
        for (int j = 0; j < samples; ++j) {
            Eigen::VectorXd y(n);
            double nrm = 0.0;
            do {
                for (int i = 0; i < n; ++i) y[i] = gauss(rng);
                nrm = y.norm();
            } while (nrm < 1e-12);
            Y.col(j) = y / nrm;
        }
        it = cache.emplace(key, std::move(Y)).first;
    }
    return (T.transpose() * it->second).colwise().norm().minCoeff();
}

// SVD-route Moore-Penrose pseudoinverse; oracle for the normal-equations
// right_pseudoinverse in the library.
inline Eigen::MatrixXd svd_pinv(const Eigen::MatrixXd& T, double rcond = 1e-13) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(T, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sigma = svd.singularValues();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sigma.size());
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
        if (sigma[i] > rcond * sigma[0]) inv[i] = 1.0 / sigma[i];
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

// Random smooth expression tree over x1..xn, u1..um; restricted to primitives
// that are globally differentiable so finite differences stay valid anywhere.
inline openstab::ExprPtr random_expr(std::mt19937_64& rng, int n, int m, int depth) {
    using namespace openstab;
    std::uniform_real_distribution<double> coeff(-2.0, 2.0);
    std::uniform_int_distribution<int> leaf_kind(0, 2);
    if (depth <= 0) {
        switch (leaf_kind(rng)) {
            case 0: return make_constant(coeff(rng));
            case 1: return make_var_x(std::uniform_int_distribution<int>(1, n)(rng));
            default:
                if (m == 0) return make_var_x(std::uniform_int_distribution<int>(1, n)(rng));
                return make_var_u(std::uniform_int_distribution<int>(1, m)(rng));
        }
    }
    switch (std::uniform_int_distribution<int>(0, 7)(rng)) {
        case 0: return make_add(random_expr(rng, n, m, depth - 1), random_expr(rng, n, m, depth - 1));
        case 1: return make_sub(random_expr(rng, n, m, depth - 1), random_expr(rng, n, m, depth - 1));
        case 2: return make_mul(random_expr(rng, n, m, depth - 1), random_expr(rng, n, m, depth - 1));
        case 3: return make_pow(random_expr(rng, n, m, depth - 1),
                                std::uniform_int_distribution<int>(2, 3)(rng));
        case 4: return make_neg(random_expr(rng, n, m, depth - 1));
        case 5: return make_call(ExprFn::Sin, random_expr(rng, n, m, depth - 1));
        case 6: return make_call(ExprFn::Cos, random_expr(rng, n, m, depth - 1));
        default: return random_expr(rng, n, m, 0);
    }
}

inline openstab::SystemDef random_system(std::mt19937_64& rng, int max_n = 3,
                                         int max_m = 3, int depth = 3) {
    openstab::SystemDef sys;
    sys.n = std::uniform_int_distribution<int>(1, max_n)(rng);
    sys.m = std::uniform_int_distribution<int>(1, max_m)(rng);
    sys.name = "random";
    for (int k = 0; k < sys.n; ++k)
        sys.exprs.push_back(random_expr(rng, sys.n, sys.m, depth));
    return sys;
}

inline std::string data_path(const std::string& file) {
    return std::string(OPENSTAB_DATA_DIR) + "/" + file;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace testsupport
