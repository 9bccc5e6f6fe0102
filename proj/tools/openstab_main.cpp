#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "openstab/report.hpp"

namespace fs = std::filesystem;
using openstab::json;

namespace {

// Exit codes used by scripted sweeps.
enum ExitCode {
    kOk = 0,
    kFailure = 1,
    kParseError = 2,
    kDimensionError = 3,
    kNoMethod = 4,
    kDomainExit = 5,
    kEnvelopeFail = 6,
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw openstab::Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw openstab::Error("cannot write '" + path + "'");
    out << content;
}

void emit(const json& j, const std::string& out_path) {
    std::string text = j.dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        write_file(out_path, text);
}

openstab::SystemDef load_system(const std::string& path) {
    openstab::SystemDef sys = openstab::parse_system(read_file(path));
    if (sys.name.empty()) sys.name = fs::path(path).stem().string();
    return sys;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> split_point(
    const openstab::SystemDef& sys, const std::vector<double>& point) {
    if (point.empty())
        return {Eigen::VectorXd::Zero(sys.n), Eigen::VectorXd::Zero(sys.m)};
    if (static_cast<int>(point.size()) != sys.n + sys.m)
        throw openstab::DimensionError(
            "--point needs n+m = " + std::to_string(sys.n + sys.m) + " values, got " +
            std::to_string(point.size()));
    Eigen::VectorXd x(sys.n), u(sys.m);
    for (int i = 0; i < sys.n; ++i) x[i] = point[static_cast<size_t>(i)];
    for (int j = 0; j < sys.m; ++j) u[j] = point[static_cast<size_t>(sys.n + j)];
    return {x, u};
}

Eigen::VectorXd to_vec(const std::vector<double>& v) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
    return out;
}

struct SynthesizeArgs {
    std::string file;
    std::string method = "auto";
    std::string out;
    double tol = openstab::kTransversalityTol;
    double radius = 0.5;
    int grid_n = 32;
    double damping = 0.5;
    int max_iter = 500;
    std::vector<double> u0;
    std::vector<std::string> box;  // "lo:hi" per axis
    std::vector<double> shift_x;
    std::vector<double> shift_u;
};

openstab::FixpointOptions fixpoint_options(const openstab::SystemDef& sys,
                                           const SynthesizeArgs& a) {
    openstab::FixpointOptions opt;
    opt.radius = a.radius;
    opt.grid_n = a.grid_n;
    opt.damping = a.damping;
    opt.max_iter = a.max_iter;
    opt.tol = a.tol;
    if (!a.u0.empty()) opt.u0 = to_vec(a.u0);
    if (!a.box.empty()) {
        if (static_cast<int>(a.box.size()) != sys.n)
            throw openstab::DimensionError("--box needs one lo:hi range per state axis");
        opt.box_lo.resize(sys.n);
        opt.box_hi.resize(sys.n);
        for (int k = 0; k < sys.n; ++k) {
            const std::string& spec = a.box[static_cast<size_t>(k)];
            size_t colon = spec.find(':');
            if (colon == std::string::npos)
                throw openstab::Error("--box entries look like lo:hi, got '" + spec + "'");
            opt.box_lo[k] = std::stod(spec.substr(0, colon));
            opt.box_hi[k] = std::stod(spec.substr(colon + 1));
        }
    }
    return opt;
}

json synthesize_with_method(const openstab::SystemDef& sys, const std::string& method,
                            const SynthesizeArgs& a) {
    using namespace openstab;
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(sys.n);
    Eigen::VectorXd u0 = Eigen::VectorXd::Zero(sys.m);
    json out;
    out["system"] = sys.name;
    out["method"] = method;

    if (method == "t1" || method == "st1" || method == "qt1") {
        JacobianSplit split = split_at(sys, x0, u0);
        FeedbackLaw law;
        if (method == "t1") {
            auto tc = transversality_constant(split, a.tol);
            if (!tc) throw Error("no transversality constant at the origin");
            law = law_transversal(split, tc->c, a.tol);
        } else if (method == "st1") {
            auto q = transverse_factor(split, a.tol);
            if (!q) throw Error("no transverse factor at the origin");
            law = law_semitransversal_1(split, q->Q, a.tol);
        } else {
            law = law_semitransversal_2(split, a.tol);
        }
        out["law"] = to_json(law);
        out["closed_loop_check"] = to_json(law.linear().closed_loop_residual);
        return out;
    }
    if (method == "shift") {
        Eigen::VectorXd sx = a.shift_x.empty() ? x0 : to_vec(a.shift_x);
        Eigen::VectorXd su = a.shift_u.empty() ? u0 : to_vec(a.shift_u);
        if (sx.size() != sys.n || su.size() != sys.m)
            throw DimensionError("--shift-x needs n values and --shift-u needs m values");
        FeedbackLaw law = law_shifted(sys, sx, su, a.tol);
        out["law"] = to_json(law);
        out["closed_loop_check"] = to_json(law.linear().closed_loop_residual);
        return out;
    }
    if (method == "composition") {
        CompositionOperator op = build_composition_h(sys);
        SystemDef modified = apply_composition(sys, op);
        FeedbackLaw law = trivial_law(sys.n, sys.m);
        out["law"] = to_json(law);
        out["h"] = json{{"hx", to_json(op.Hx)},
                        {"base_point", {{"x", to_json(op.base_x)}, {"u", to_json(op.base_u)}}}};
        out["modified_system"] = print_system(modified);
        out["modified_openness"] =
            to_json(cov_reg(split_at(modified, Eigen::VectorXd::Zero(sys.n),
                                     Eigen::VectorXd::Zero(sys.m))));
        return out;
    }
    if (method == "fixpoint") {
        GridControl grid = fixpoint_control(sys, fixpoint_options(sys, a));
        FeedbackLaw law;
        law.method = LawMethod::Fixpoint;
        law.impl = std::move(grid);
        out["law"] = to_json(law);
        return out;
    }
    throw Error("unknown method '" + method + "'");
}

int cmd_synthesize(const SynthesizeArgs& a) {
    openstab::SystemDef sys = load_system(a.file);
    if (a.method != "auto") {
        emit(synthesize_with_method(sys, a.method, a), a.out);
        return kOk;
    }
    std::vector<std::string> order = {"t1", "st1", "qt1", "composition", "fixpoint"};
    json failures = json::array();
    for (const std::string& method : order) {
        try {
            json result = synthesize_with_method(sys, method, a);
            if (!failures.empty()) result["skipped_methods"] = failures;
            emit(result, a.out);
            return kOk;
        } catch (const openstab::Error& e) {
            failures.push_back({{"method", method}, {"error", e.what()}});
        }
    }
    std::cerr << "no synthesis method applies:\n" << failures.dump(2) << "\n";
    return kNoMethod;
}

struct SimulateArgs {
    std::string file;
    std::string law_file;
    std::string out;
    std::string csv_dir;
    std::vector<double> x0;
    double delta = 0.1;
    int samples = 8;
    double t_end = 8.0;
    double step = 1e-3;
};

int cmd_simulate(const SimulateArgs& a) {
    using namespace openstab;
    SystemDef sys = load_system(a.file);
    json law_json = json::parse(read_file(a.law_file));
    if (law_json.contains("law")) law_json = law_json["law"];
    FeedbackLaw law = law_from_json(law_json);

    std::vector<Trajectory> trajs;
    DecayFit fit;
    if (!a.x0.empty()) {
        Eigen::VectorXd x0 = to_vec(a.x0);
        if (x0.size() != sys.n) throw DimensionError("--x0 needs n values");
        trajs.push_back(integrate(sys, law, x0, a.t_end, a.step));
        fit = fit_decay(trajs, 2.0 * x0.norm() + 1e-30);
        fit.delta = 2.0 * x0.norm();
    } else {
        trajs = les_trajectories(sys, as_control(law), a.delta, a.samples, a.t_end,
                                 a.step, 0x5eedu, law_method_name(law.method));
        fit = fit_decay(trajs, a.delta);
        fit.delta = a.delta;
    }

    if (!a.csv_dir.empty()) {
        fs::create_directories(a.csv_dir);
        for (size_t i = 0; i < trajs.size(); ++i)
            write_file((fs::path(a.csv_dir) / ("trajectory_" + std::to_string(i) + ".csv")).string(),
                       trajectory_csv(trajs[i]));
        if (!law.is_linear())
            write_file((fs::path(a.csv_dir) / "grid_control.csv").string(),
                       grid_csv(law.grid()));
    }

    emit(to_json(fit), a.out);
    for (const Trajectory& t : trajs)
        if (t.truncated) {
            std::cerr << "trajectory left the control's domain\n";
            return kDomainExit;
        }
    return fit.envelope_ok ? kOk : kEnvelopeFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"openness/transversality analysis and feedback synthesis for "
                 "nonlinear control systems x' = f(x,u)"};
    app.require_subcommand(1);

    std::string an_file, an_out;
    std::vector<double> an_point;
    double an_tol = openstab::kTransversalityTol;
    CLI::App* an = app.add_subcommand("analyze", "classify a system at a point");
    an->add_option("file", an_file, "system file")->required();
    an->add_option("--point", an_point, "point as n+m values (x then u); default origin");
    an->add_option("--tol", an_tol, "classification tolerance");
    an->add_option("--out", an_out, "write the JSON report here instead of stdout");

    SynthesizeArgs sy;
    CLI::App* syn = app.add_subcommand("synthesize", "construct a stabilizing feedback law");
    syn->add_option("file", sy.file, "system file")->required();
    syn->add_option("--method", sy.method,
                    "auto|t1|st1|qt1|shift|composition|fixpoint (default auto)");
    syn->add_option("--tol", sy.tol, "precondition tolerance");
    syn->add_option("--radius", sy.radius, "fixpoint: domain radius");
    syn->add_option("--grid-n", sy.grid_n, "fixpoint: cells per axis");
    syn->add_option("--damping", sy.damping, "fixpoint: Picard damping in (0,1]");
    syn->add_option("--max-iter", sy.max_iter, "fixpoint: iteration cap");
    syn->add_option("--u0", sy.u0, "fixpoint: initial control value (m values)");
    syn->add_option("--box", sy.box, "fixpoint: per-axis domain override lo:hi");
    syn->add_option("--shift-x", sy.shift_x, "shift: anchor state (n values)");
    syn->add_option("--shift-u", sy.shift_u, "shift: anchor control (m values)");
    syn->add_option("--out", sy.out, "write the law JSON here instead of stdout");

    SimulateArgs si;
    CLI::App* sim = app.add_subcommand("simulate", "integrate the closed loop and fit the decay");
    sim->add_option("file", si.file, "system file")->required();
    sim->add_option("--law", si.law_file, "law JSON produced by synthesize")->required();
    sim->add_option("--x0", si.x0, "single start state (n values)");
    sim->add_option("--delta", si.delta, "initial ball radius for sampling");
    sim->add_option("--samples", si.samples, "number of sampled directions");
    sim->add_option("--t-end", si.t_end, "integration horizon");
    sim->add_option("--step", si.step, "RK4 step");
    sim->add_option("--csv-dir", si.csv_dir, "write trajectory/grid CSV files here");
    sim->add_option("--out", si.out, "write the decay-fit JSON here instead of stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (an->parsed()) {
            openstab::SystemDef sys = load_system(an_file);
            auto [x, u] = split_point(sys, an_point);
            emit(to_json(openstab::analyze(sys, x, u, an_tol)), an_out);
            return kOk;
        }
        if (syn->parsed()) return cmd_synthesize(sy);
        if (sim->parsed()) return cmd_simulate(si);
    } catch (const openstab::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kParseError;
    } catch (const openstab::DimensionError& e) {
        std::cerr << "dimension error: " << e.what() << "\n";
        return kDimensionError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kFailure;
}
