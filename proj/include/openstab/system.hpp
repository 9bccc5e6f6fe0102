#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "openstab/expr.hpp"

namespace openstab {

// A parsed control system f : R^n x R^m -> R^n.
struct SystemDef {
    int n = 0;
    int m = 0;
    std::string name;
    std::vector<ExprPtr> exprs;  // exactly n entries
};

// Parses the system-file format:
//   n=<int> m=<int>
//   name=<ident>            (optional)
//   f1 = <expr>
//   ...
//   fn = <expr>
// Expression grammar:
//   expr   := term (('+'|'-') term)*
//   term   := factor (('*'|'/') factor)*
//   factor := atom ('^' int)?
//   atom   := number | 'x'int | 'u'int | fn '(' expr ')' | '(' expr ')' | '-' atom
// with fn in {sin, cos, exp, sqrt, abs}. Throws ParseError with line/column on
// malformed input, including variable indices outside [1,n] / [1,m] and an
// equation count that disagrees with the declared n.
SystemDef parse_system(const std::string& text);

// Renders a SystemDef back into the file format; reparsing yields structurally
// identical expression trees.
std::string print_system(const SystemDef& sys);

Eigen::VectorXd eval(const SystemDef& sys, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& u);

// Value and exact Jacobian at a point. Jacobian columns 1..n are df/dx,
// columns n+1..n+m are df/du.
struct DualVec {
    Eigen::VectorXd value;
    Eigen::MatrixXd jacobian;  // n rows, n+m columns
};

// Forward-mode dual-number differentiation: one pass per input direction.
DualVec jacobian(const SystemDef& sys, const Eigen::VectorXd& x,
                 const Eigen::VectorXd& u);

// Central finite differences; validation oracle for `jacobian`.
Eigen::MatrixXd jacobian_fd(const SystemDef& sys, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& u, double step);

}  // namespace openstab
