#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "openstab/errors.hpp"

namespace openstab {

// Forward-mode dual number carrying one directional derivative through the
// expression arithmetic.
struct Dual {
    double val = 0.0;
    double der = 0.0;
};

enum class ExprKind { Constant, VarX, VarU, Add, Sub, Mul, Div, Pow, Neg, Call };

enum class ExprFn { Sin, Cos, Exp, Sqrt, Abs };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Immutable expression tree over the variables x1..xn, u1..um.
struct Expr {
    ExprKind kind;
    double constant = 0.0;      // Constant
    int index = 0;              // VarX / VarU, 1-based
    int exponent = 0;           // Pow
    ExprFn fn = ExprFn::Sin;    // Call
    ExprPtr lhs;                // first child (unary ops use lhs only)
    ExprPtr rhs;                // second child
};

ExprPtr make_constant(double value);
ExprPtr make_var_x(int index);
ExprPtr make_var_u(int index);
ExprPtr make_add(ExprPtr lhs, ExprPtr rhs);
ExprPtr make_sub(ExprPtr lhs, ExprPtr rhs);
ExprPtr make_mul(ExprPtr lhs, ExprPtr rhs);
ExprPtr make_div(ExprPtr lhs, ExprPtr rhs);
ExprPtr make_pow(ExprPtr base, int exponent);
ExprPtr make_neg(ExprPtr arg);
ExprPtr make_call(ExprFn fn, ExprPtr arg);

// Builds sum_k coeffs[k] * leaf(k+1) + constant-free tail, skipping zero
// coefficients. `leaf` maps a 1-based index to a variable node. Returns the
// zero constant when every coefficient vanishes.
ExprPtr make_linear_combination(const std::vector<double>& coeffs,
                                const std::function<ExprPtr(int)>& leaf);

// Replaces each variable leaf: VarX(i) becomes subst_x[i-1], VarU(j) becomes
// subst_u[j-1]. Sizes must cover every index that occurs.
ExprPtr substitute(const ExprPtr& expr, const std::vector<ExprPtr>& subst_x,
                   const std::vector<ExprPtr>& subst_u);

double eval_expr(const Expr& e, const std::vector<double>& x,
                 const std::vector<double>& u);
Dual eval_expr(const Expr& e, const std::vector<Dual>& x,
               const std::vector<Dual>& u);

bool structurally_equal(const Expr& a, const Expr& b);

// Renders the tree in the system-file grammar; parsing the result yields a
// structurally identical tree. Doubles are printed with enough digits to
// round-trip exactly.
std::string to_string(const Expr& e);

std::string fn_name(ExprFn fn);

// Largest x (resp. u) index referenced anywhere in the tree, 0 when none.
int max_x_index(const Expr& e);
int max_u_index(const Expr& e);

std::string format_double(double v);

}  // namespace openstab
