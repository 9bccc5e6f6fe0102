// Acceptance suite: one self-contained check per criterion, each printed as a
// single PASS/FAIL line with its runtime. Exits nonzero if any check fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "openstab/report.hpp"
#include "openstab/simulation.hpp"
#include "test_support.hpp"

using namespace openstab;

namespace {

Eigen::VectorXd vec1(double a) {
    Eigen::VectorXd v(1);
    v << a;
    return v;
}

SystemDef load(const std::string& file) {
    return parse_system(testsupport::read_file(testsupport::data_path(file)));
}

struct Criterion {
    int id;
    std::string title;
    double time_limit_s;
    std::function<std::optional<std::string>()> run;  // nullopt = pass
};

#define EXPECT(cond, msg) \
    do { \
        if (!(cond)) return std::string(msg); \
    } while (0)

std::optional<std::string> sontag_openness_and_composition() {
    SystemDef sontag = load("sontag.sys");
    Eigen::VectorXd z1 = Eigen::VectorXd::Zero(1);
    OpennessReport base = cov_reg(split_at(sontag, z1, z1));
    EXPECT(std::abs(base.cov - 1.0) <= 1e-12, "cov f(0,0) != 1");
    EXPECT(std::abs(base.eta - 1.0) <= 1e-12, "eta != 1");

    CompositionOperator op = build_composition_h(sontag);
    EXPECT(std::abs(op.Hx(0, 0) + 1.0) <= 1e-12 && std::abs(op.Hx(1, 0)) <= 1e-12,
           "h(x,u) != (-x, u)");

    SystemDef modified = apply_composition(sontag, op);
    OpennessReport mod = cov_reg(split_at(modified, z1, z1));
    EXPECT(std::isinf(mod.eta) && mod.eta < 0.0, "modified eta != -inf");
    EXPECT(std::abs(mod.cov - 1.0) <= 1e-12, "modified cov != 1");
    EXPECT(mod.spectral_ok, "modified system fails the spectral condition");
    return std::nullopt;
}

std::optional<std::string> coron_equilibria_not_open() {
    SystemDef coron = load("coron.sys");
    std::mt19937_64 rng(1001);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        Eigen::VectorXd x(3);
        double r = dist(rng);
        x << r, 0.0, r;
        OpennessReport rep = cov_reg(split_at(coron, x, Eigen::VectorXd::Zero(1)));
        EXPECT(std::abs(rep.cov) <= 1e-12,
               "cov != 0 at equilibrium r=" + std::to_string(r));
    }
    return std::nullopt;
}

std::optional<std::string> closed_loop_minus_identity() {
    std::mt19937_64 rng(1002);
    for (int trial = 0; trial < 500; ++trial) {
        int n = std::uniform_int_distribution<int>(1, 4)(rng);
        int m = std::uniform_int_distribution<int>(n, 5)(rng);
        Eigen::MatrixXd B = testsupport::random_full_row_rank(rng, n, m);
        bool with_tc = n == m && trial % 3 == 0;
        double c = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        Eigen::MatrixXd A = with_tc ? Eigen::MatrixXd(-c * B)
                                    : testsupport::random_matrix(rng, n, n);
        Eigen::MatrixXd J(n, n + m);
        J << A, B;
        JacobianSplit s = split_jacobian(J, n, m);
        Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);

        auto defect = [&](const FeedbackLaw& law) {
            return (A + B * law.linear().K + I).norm();
        };
        EXPECT(defect(law_semitransversal_2(s)) <= 1e-9, "qt1 law misses -I");
        EXPECT(defect(law_semitransversal_1(s, -pinv(B) * A)) <= 1e-9,
               "st1 law misses -I");
        if (with_tc) EXPECT(defect(law_transversal(s, c)) <= 1e-9, "t1 law misses -I");
    }
    return std::nullopt;
}

std::optional<std::string> semitransversality_equivalences() {
    std::mt19937_64 rng(1003);
    int done = 0;
    while (done < 1000) {
        int n = std::uniform_int_distribution<int>(1, 4)(rng);
        int m = std::uniform_int_distribution<int>(1, 5)(rng);
        Eigen::MatrixXd J = testsupport::random_matrix(rng, n, n + m);
        if (!(banach_constant(J) > 0.1)) continue;
        JacobianSplit s = split_jacobian(J, n, m);
        bool t1 = transverse_factor(s, 1e-8).has_value();
        bool t2 = type2_check(s, 1e-8).holds;
        bool t3 = numerical_rank(s.B) == n;
        EXPECT(t1 == t2 && t2 == t3,
               "equivalence broken at instance " + std::to_string(done) + ": type1=" +
                   std::to_string(t1) + " type2=" + std::to_string(t2) +
                   " rank=" + std::to_string(t3));
        ++done;
    }
    return std::nullopt;
}

std::optional<std::string> covering_identities() {
    std::mt19937_64 rng(1004);
    for (int trial = 0; trial < 1000; ++trial) {
        int n = std::uniform_int_distribution<int>(1, 4)(rng);
        int l = std::uniform_int_distribution<int>(n, 7)(rng);
        Eigen::MatrixXd T = testsupport::random_full_row_rank(rng, n, l, 0.05);

        Eigen::MatrixXd J = T;
        OpennessReport rep = cov_reg(split_jacobian(J, n, l - n));
        EXPECT(std::abs(rep.cov * rep.reg - 1.0) <= 1e-10, "cov * reg != 1");

        // Gamma(T) = 1 / ||T^-1|| with the two sides computed along different
        // routes: SVD for Gamma, normal equations + SVD norm for T^+.
        double gamma = banach_constant(T);
        double inv_norm = operator_norm(right_pseudoinverse(T));
        EXPECT(std::abs(gamma * inv_norm - 1.0) <= 1e-10,
               "Gamma(T) * ||T^+|| != 1 (got " + std::to_string(gamma * inv_norm) + ")");

        double sampled = testsupport::mc_min_gain_shared(T, 100000);
        EXPECT(gamma <= sampled + 1e-12, "Gamma fails to lower-bound the sampled inf");
    }
    return std::nullopt;
}

std::optional<std::string> exponential_envelopes() {
    SystemDef sontag = load("sontag.sys");
    SystemDef modified = apply_composition(sontag, build_composition_h(sontag));
    DecayFit fit1 = verify_les(modified, trivial_law(1, 1), 0.05, 12, 8.0);
    EXPECT(fit1.envelope_ok, "modified system envelope fails");
    EXPECT(fit1.alpha >= 0.9 && fit1.alpha <= 1.1,
           "modified system alpha = " + std::to_string(fit1.alpha));
    EXPECT(fit1.M <= 1.1, "modified system M = " + std::to_string(fit1.M));

    SystemDef linear = load("linear.sys");
    FeedbackLaw qt1 = law_semitransversal_2(
        split_at(linear, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)));
    DecayFit fit2 = verify_les(linear, qt1, 0.05, 12, 8.0);
    EXPECT(fit2.envelope_ok, "stabilized linear system envelope fails");
    EXPECT(fit2.alpha >= 0.9 && fit2.alpha <= 1.1,
           "stabilized linear system alpha = " + std::to_string(fit2.alpha));
    EXPECT(fit2.M <= 1.1, "stabilized linear system M = " + std::to_string(fit2.M));
    return std::nullopt;
}

std::optional<std::string> fixed_point_verification() {
    SystemDef xsqr = load("xsqr.sys");
    ControlFn closed_form = [](const Eigen::VectorXd& p) {
        return vec1(std::sqrt(p[0] * p[0] + p[0]));
    };
    for (int i = 0; i <= 49; ++i) {
        double x = 0.01 + (0.5 - 0.01) * i / 49.0;
        double residual = fixpoint_residual_exact(xsqr, closed_form, vec1(x));
        EXPECT(residual <= 1e-6, "closed-form residual " + std::to_string(residual) +
                                     " at x=" + std::to_string(x));
    }

    FixpointOptions opt;
    opt.radius = 0.5;
    opt.grid_n = 64;
    opt.damping = 0.5;
    opt.max_iter = 2000;
    opt.tol = 5e-5;
    opt.u0 = vec1(0.1);
    opt.box_lo = vec1(0.0);
    opt.box_hi = vec1(0.5);
    GridControl grid = fixpoint_control(xsqr, opt);
    if (grid.converged) {
        EXPECT(grid.residual <= 1e-4,
               "converged but ||u - Tu|| = " + std::to_string(grid.residual));
        std::printf("         picard: converged in %d iterations, ||u - Tu||_inf = %.2e\n",
                    grid.iterations, grid.residual);
    } else {
        EXPECT(std::isfinite(grid.residual), "non-convergence without a residual");
        std::printf("         picard: no convergence in %d iterations, ||u - Tu||_inf = %.2e"
                    " (closed-form check passed regardless)\n",
                    grid.iterations, grid.residual);
    }
    return std::nullopt;
}

std::optional<std::string> family_control_matches_composition() {
    SystemDef sontag = load("sontag.sys");
    SystemDef Gconst = parse_system("n=1 m=0\nf1 = 0.25\n");
    SystemDef F = family_F(sontag, Gconst, 1.0);
    FeedbackLaw wlaw = law_semitransversal_2(
        split_at(F, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(2)));
    CompositionOperator op = build_composition_h(sontag);

    std::mt19937_64 rng(1008);
    for (int i = 0; i < 100; ++i) {
        Eigen::VectorXd x = testsupport::random_vector(rng, 1);
        double gap = (wlaw.evaluate(x) - op.Hx * x).lpNorm<Eigen::Infinity>();
        EXPECT(gap <= 1e-9, "w(x) != h(x,0), gap " + std::to_string(gap));
    }
    return std::nullopt;
}

std::optional<std::string> autodiff_vs_finite_differences() {
    std::mt19937_64 rng(1009);
    for (int trial = 0; trial < 1000; ++trial) {
        SystemDef sys = testsupport::random_system(rng);
        Eigen::VectorXd x = testsupport::random_vector(rng, sys.n, -0.8, 0.8);
        Eigen::VectorXd u = testsupport::random_vector(rng, sys.m, -0.8, 0.8);
        Eigen::MatrixXd ad = jacobian(sys, x, u).jacobian;
        Eigen::MatrixXd fd = jacobian_fd(sys, x, u, 1e-6);
        double dev = (ad - fd).cwiseAbs().maxCoeff();
        EXPECT(dev <= 1e-6 * (1.0 + ad.cwiseAbs().maxCoeff()),
               "deviation " + std::to_string(dev) + " at trial " + std::to_string(trial));
    }
    return std::nullopt;
}

}  // namespace

int main() {
    std::vector<Criterion> criteria = {
        {1, "scalar cubic-input system: cov = eta = 1, composition gives h(x,u) = (-x,u)",
         1.0, sontag_openness_and_composition},
        {2, "three-state example: cov = 0 at 100 sampled equilibria", 1.0,
         coron_equilibria_not_open},
        {3, "500 random splits: every applicable law yields A + BK = -I within 1e-9",
         5.0, closed_loop_minus_identity},
        {4, "1000 open splits: factor/type-II/rank conditions agree pairwise", 5.0,
         semitransversality_equivalences},
        {5, "1000 full-row-rank matrices: cov*reg = 1, Gamma = 1/||T^+||, MC lower bound",
         10.0, covering_identities},
        {6, "exponential envelope at delta = 0.05: alpha in [0.9, 1.1], M <= 1.1", 5.0,
         exponential_envelopes},
        {7, "fixed-point control: closed form sqrt(x^2+x) residual <= 1e-6; Picard at "
            "grid_n = 64", 30.0, fixed_point_verification},
        {8, "constant-G augmented family: QT law equals h(x,0) within 1e-9", 1.0,
         family_control_matches_composition},
        {9, "dual-number jacobian vs central differences on 1000 random systems", 5.0,
         autodiff_vs_finite_differences},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        auto t0 = std::chrono::steady_clock::now();
        std::optional<std::string> err;
        try {
            err = c.run();
        } catch (const std::exception& e) {
            err = std::string("exception: ") + e.what();
        }
        double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!err && elapsed > c.time_limit_s)
            err = "runtime " + std::to_string(elapsed) + "s exceeds " +
                  std::to_string(c.time_limit_s) + "s";
        if (err) {
            ++failures;
            std::printf("FAIL criterion %d: %s (%.2f s)\n         %s\n", c.id,
                        c.title.c_str(), elapsed, err->c_str());
        } else {
            std::printf("PASS criterion %d: %s (%.2f s)\n", c.id, c.title.c_str(), elapsed);
        }
    }
    if (failures) std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
