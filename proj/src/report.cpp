#include "openstab/report.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace openstab {

json to_json(double v) {
    if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
    return json(v);
}

json to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(to_json(v[i]));
    return arr;
}

json to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(to_json(m(i, j)));
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

double double_from_json(const json& j) {
    if (j.is_string()) {
        std::string s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw Error("unexpected numeric string '" + s + "' in JSON");
    }
    return j.get<double>();
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(j.size());
    for (size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = double_from_json(j[i]);
    return v;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    if (j.empty()) return Eigen::MatrixXd(0, 0);
    Eigen::MatrixXd m(j.size(), j[0].size());
    for (size_t i = 0; i < j.size(); ++i)
        for (size_t k = 0; k < j[i].size(); ++k)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = double_from_json(j[i][k]);
    return m;
}

}  // namespace

json to_json(const OpennessReport& r) {
    json lp = json::array();
    for (const auto& lam : r.lambda_plus) lp.push_back({lam.real(), lam.imag()});
    return json{{"gamma", to_json(r.gamma)},   {"cov", to_json(r.cov)},
                {"reg", to_json(r.reg)},       {"rank", r.rank},
                {"eta", to_json(r.eta)},       {"lambda_plus", std::move(lp)},
                {"spectral_ok", r.spectral_ok}};
}

json to_json(const TransversalityReport& r) {
    json j;
    j["point"] = {{"x", to_json(r.point_x)}, {"u", to_json(r.point_u)}};
    j["tc"] = r.tc ? json{{"c", r.tc->c}, {"residual", r.tc->residual}} : json(nullptr);
    j["type1"] = r.type1 ? json{{"q", to_json(r.type1->Q)}, {"residual", r.type1->residual}}
                         : json(nullptr);
    j["type2"] = {{"holds", r.type2.holds}, {"residual", r.type2.residual}};
    j["lemma_qtli_gap"] = to_json(r.lemma_qtli_gap);
    j["rank_condition"] = r.rank_condition;
    return j;
}

AnalysisReport analyze(const SystemDef& sys, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u, double tol) {
    AnalysisReport rep;
    rep.system_name = sys.name;
    rep.point_x = x;
    rep.point_u = u;

    JacobianSplit split = split_at(sys, x, u);
    rep.openness = cov_reg(split);
    rep.transversality = classify_split(split, tol);

    const bool open = rep.openness.cov > 0.0;
    const bool at_origin = x.norm() == 0.0 && u.norm() == 0.0;
    const bool equilibrium = eval(sys, x, u).norm() <= 1e-9;

    if (open && rep.transversality.tc)
        rep.applicable.push_back(
            {"t1", "cov > 0 and a transversality constant c = " +
                       format_double(rep.transversality.tc->c) + " exists"});
    if (open && rep.transversality.type1)
        rep.applicable.push_back({"st1", "cov > 0 and a transverse factor exists"});
    if (open && rep.transversality.type2.holds)
        rep.applicable.push_back({"qt1", "cov > 0 and the type II identity holds"});
    if (open && !at_origin && rep.transversality.type2.holds)
        rep.applicable.push_back(
            {"shift", "openness and semitransversality hold away from the origin; "
                      "the shifted law stabilizes f(x+x1, u+u1) - f(x1, u1)"});
    if (open && at_origin && equilibrium)
        rep.applicable.push_back(
            {"composition", "cov > 0 at the equilibrium: a linear change of variables "
                            "makes the trivial law u = 0 exponentially stabilizing"});
    if (open && rep.transversality.type2.holds)
        rep.applicable.push_back(
            {"fixpoint", "pointwise hypotheses hold; the punctured-neighborhood "
                         "construction still requires a grid preflight"});

    if (!open) {
        rep.warnings.push_back(
            "cov = 0: the system is not linearly open here (Brockett-type openness "
            "obstruction); no openness-based synthesis applies at this point");
    } else if (rep.openness.spectral_ok) {
        rep.warnings.push_back(
            "spectral condition holds (cov > eta, nonnegative spectrum real): the "
            "linearization alone certifies exponential stabilizability");
    } else {
        rep.warnings.push_back(
            "spectral condition fails (cov <= eta or complex nonnegative spectrum); "
            "transversality or composition routes are needed");
    }
    return rep;
}

json to_json(const AnalysisReport& r) {
    json methods = json::array();
    for (const auto& m : r.applicable)
        methods.push_back({{"method", m.method}, {"reason", m.reason}});
    return json{{"system", r.system_name},
                {"point", {{"x", to_json(r.point_x)}, {"u", to_json(r.point_u)}}},
                {"openness", to_json(r.openness)},
                {"transversality", to_json(r.transversality)},
                {"applicable_methods", std::move(methods)},
                {"warnings", r.warnings}};
}

json to_json(const FeedbackLaw& law) {
    json j;
    j["provenance"] = law_method_name(law.method);
    if (law.is_linear()) {
        const LinearLaw& lin = law.linear();
        j["kind"] = "linear";
        j["k"] = to_json(lin.K);
        j["closed_loop_residual"] = to_json(lin.closed_loop_residual);
        j["shift"] = lin.shift_x.size()
                         ? json{{"x", to_json(lin.shift_x)}, {"u", to_json(lin.shift_u)}}
                         : json(nullptr);
    } else {
        const GridControl& g = law.grid();
        j["kind"] = "grid";
        j["lo"] = to_json(g.lo);
        j["hi"] = to_json(g.hi);
        j["grid_n"] = g.grid_n;
        j["radius"] = g.radius;
        j["converged"] = g.converged;
        j["residual"] = to_json(g.residual);
        j["iterations"] = g.iterations;
        json vals = json::array();
        for (const auto& v : g.values) vals.push_back(to_json(v));
        j["values"] = std::move(vals);
    }
    return j;
}

FeedbackLaw law_from_json(const json& j) {
    FeedbackLaw law;
    std::string prov = j.at("provenance").get<std::string>();
    for (LawMethod m : {LawMethod::Transversal, LawMethod::Semitransversal1,
                        LawMethod::Semitransversal2, LawMethod::Shifted,
                        LawMethod::Fixpoint, LawMethod::Trivial})
        if (prov == law_method_name(m)) law.method = m;

    std::string kind = j.at("kind").get<std::string>();
    if (kind == "linear") {
        LinearLaw lin;
        lin.K = matrix_from_json(j.at("k"));
        if (j.contains("closed_loop_residual"))
            lin.closed_loop_residual = double_from_json(j["closed_loop_residual"]);
        if (j.contains("shift") && !j["shift"].is_null()) {
            lin.shift_x = vector_from_json(j["shift"]["x"]);
            lin.shift_u = vector_from_json(j["shift"]["u"]);
        }
        law.impl = std::move(lin);
    } else if (kind == "grid") {
        GridControl g;
        g.lo = vector_from_json(j.at("lo"));
        g.hi = vector_from_json(j.at("hi"));
        g.grid_n = j.at("grid_n").get<int>();
        g.radius = double_from_json(j.at("radius"));
        g.converged = j.at("converged").get<bool>();
        g.residual = double_from_json(j.at("residual"));
        g.iterations = j.at("iterations").get<int>();
        for (const auto& v : j.at("values")) g.values.push_back(vector_from_json(v));
        law.impl = std::move(g);
    } else {
        throw Error("unknown law kind '" + kind + "'");
    }
    return law;
}

json to_json(const DecayFit& fit) {
    return json{{"alpha", to_json(fit.alpha)},
                {"m", to_json(fit.M)},
                {"r2", to_json(fit.r2)},
                {"envelope_ok", fit.envelope_ok},
                {"delta", to_json(fit.delta)}};
}

std::string trajectory_csv(const Trajectory& traj) {
    std::ostringstream out;
    out.precision(17);
    const Eigen::Index n = traj.x0.size();
    out << "t";
    for (Eigen::Index k = 0; k < n; ++k) out << ",x" << (k + 1);
    out << ",norm\n";
    for (size_t i = 0; i < traj.times.size(); ++i) {
        out << traj.times[i];
        for (Eigen::Index k = 0; k < n; ++k) out << ',' << traj.states[i][k];
        out << ',' << traj.states[i].norm() << '\n';
    }
    return out.str();
}

std::string grid_csv(const GridControl& grid) {
    std::ostringstream out;
    out.precision(17);
    for (int k = 0; k < grid.n(); ++k) out << (k ? "," : "") << 'x' << (k + 1);
    for (int k = 0; k < grid.m(); ++k) out << ",u" << (k + 1);
    out << '\n';
    for (int j = 0; j < grid.node_count(); ++j) {
        Eigen::VectorXd coord = grid.node_coord(j);
        for (int k = 0; k < grid.n(); ++k) out << (k ? "," : "") << coord[k];
        const Eigen::VectorXd& v = grid.values[static_cast<size_t>(j)];
        for (int k = 0; k < grid.m(); ++k) out << ',' << v[k];
        out << '\n';
    }
    return out.str();
}

}  // namespace openstab
