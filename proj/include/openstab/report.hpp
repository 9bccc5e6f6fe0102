#pragma once

#include <json.hpp>

#include "openstab/simulation.hpp"

namespace openstab {

using json = nlohmann::json;

// One synthesis route that applies at the analyzed point, with the reason it
// qualifies.
struct ApplicableMethod {
    std::string method;
    std::string reason;
};

// Aggregate of all point analyses: openness quantities, transversality
// classification, applicable synthesis routes, and human-readable warnings.
struct AnalysisReport {
    std::string system_name;
    Eigen::VectorXd point_x;
    Eigen::VectorXd point_u;
    OpennessReport openness;
    TransversalityReport transversality;
    std::vector<ApplicableMethod> applicable;
    std::vector<std::string> warnings;
};

AnalysisReport analyze(const SystemDef& sys, const Eigen::VectorXd& x,
                       const Eigen::VectorXd& u, double tol = kTransversalityTol);

// JSON conventions: keys lower_snake_case, matrices as row-major nested
// arrays, non-finite reals as the strings "inf" / "-inf".
json to_json(double v);
json to_json(const Eigen::VectorXd& v);
json to_json(const Eigen::MatrixXd& m);
json to_json(const OpennessReport& r);
json to_json(const TransversalityReport& r);
json to_json(const AnalysisReport& r);
json to_json(const FeedbackLaw& law);
json to_json(const DecayFit& fit);

FeedbackLaw law_from_json(const json& j);

std::string trajectory_csv(const Trajectory& traj);
std::string grid_csv(const GridControl& grid);

}  // namespace openstab
