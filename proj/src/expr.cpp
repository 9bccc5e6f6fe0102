#include "openstab/expr.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace openstab {

namespace {

ExprPtr node(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

// Dual arithmetic. Domain violations throw DomainError without a component
// index; the system layer attaches it.

Dual dadd(Dual a, Dual b) { return {a.val + b.val, a.der + b.der}; }
Dual dsub(Dual a, Dual b) { return {a.val - b.val, a.der - b.der}; }
Dual dmul(Dual a, Dual b) { return {a.val * b.val, a.der * b.val + a.val * b.der}; }

Dual ddiv(Dual a, Dual b) {
    if (b.val == 0.0) throw DomainError("division by zero");
    double v = a.val / b.val;
    return {v, (a.der - v * b.der) / b.val};
}

Dual dneg(Dual a) { return {-a.val, -a.der}; }

Dual dcall(ExprFn fn, Dual a) {
    switch (fn) {
        case ExprFn::Sin: return {std::sin(a.val), a.der * std::cos(a.val)};
        case ExprFn::Cos: return {std::cos(a.val), -a.der * std::sin(a.val)};
        case ExprFn::Exp: {
            double e = std::exp(a.val);
            return {e, a.der * e};
        }
        case ExprFn::Sqrt: {
            if (a.val < 0.0) throw DomainError("sqrt of a negative value");
            if (a.val == 0.0) throw DomainError("sqrt is not differentiable at 0");
            double s = std::sqrt(a.val);
            return {s, a.der / (2.0 * s)};
        }
        case ExprFn::Abs: {
            if (a.val == 0.0) throw DomainError("abs is not differentiable at 0");
            return {std::abs(a.val), a.val > 0.0 ? a.der : -a.der};
        }
    }
    throw Error("unhandled function");
}

double scall(ExprFn fn, double a) {
    switch (fn) {
        case ExprFn::Sin: return std::sin(a);
        case ExprFn::Cos: return std::cos(a);
        case ExprFn::Exp: return std::exp(a);
        case ExprFn::Sqrt:
            if (a < 0.0) throw DomainError("sqrt of a negative value");
            return std::sqrt(a);
        case ExprFn::Abs: return std::abs(a);
    }
    throw Error("unhandled function");
}

// Integer power by repeated multiplication, exact at 0.
template <class T, class Mul, class Div>
T ipow(T base, int exponent, T one, Mul mul, Div div) {
    int k = exponent >= 0 ? exponent : -exponent;
    T acc = one;
    for (int i = 0; i < k; ++i) acc = mul(acc, base);
    if (exponent < 0) acc = div(one, acc);
    return acc;
}

template <class T, class Vec>
T eval_node(const Expr& e, const Vec& x, const Vec& u);

template <class T, class Vec>
T child(const ExprPtr& p, const Vec& x, const Vec& u) {
    return eval_node<T>(*p, x, u);
}

template <>
double eval_node<double>(const Expr& e, const std::vector<double>& x,
                         const std::vector<double>& u) {
    switch (e.kind) {
        case ExprKind::Constant: return e.constant;
        case ExprKind::VarX: return x[static_cast<size_t>(e.index - 1)];
        case ExprKind::VarU: return u[static_cast<size_t>(e.index - 1)];
        case ExprKind::Add:
            return child<double>(e.lhs, x, u) + child<double>(e.rhs, x, u);
        case ExprKind::Sub:
            return child<double>(e.lhs, x, u) - child<double>(e.rhs, x, u);
        case ExprKind::Mul:
            return child<double>(e.lhs, x, u) * child<double>(e.rhs, x, u);
        case ExprKind::Div: {
            double d = child<double>(e.rhs, x, u);
            if (d == 0.0) throw DomainError("division by zero");
            return child<double>(e.lhs, x, u) / d;
        }
        case ExprKind::Pow: {
            double b = child<double>(e.lhs, x, u);
            if (e.exponent < 0 && b == 0.0)
                throw DomainError("zero raised to a negative power");
            return ipow<double>(
                b, e.exponent, 1.0, [](double p, double q) { return p * q; },
                [](double p, double q) { return p / q; });
        }
        case ExprKind::Neg: return -child<double>(e.lhs, x, u);
        case ExprKind::Call: return scall(e.fn, child<double>(e.lhs, x, u));
    }
    throw Error("unhandled expression node");
}

template <>
Dual eval_node<Dual>(const Expr& e, const std::vector<Dual>& x,
                     const std::vector<Dual>& u) {
    switch (e.kind) {
        case ExprKind::Constant: return {e.constant, 0.0};
        case ExprKind::VarX: return x[static_cast<size_t>(e.index - 1)];
        case ExprKind::VarU: return u[static_cast<size_t>(e.index - 1)];
        case ExprKind::Add: return dadd(child<Dual>(e.lhs, x, u), child<Dual>(e.rhs, x, u));
        case ExprKind::Sub: return dsub(child<Dual>(e.lhs, x, u), child<Dual>(e.rhs, x, u));
        case ExprKind::Mul: return dmul(child<Dual>(e.lhs, x, u), child<Dual>(e.rhs, x, u));
        case ExprKind::Div: return ddiv(child<Dual>(e.lhs, x, u), child<Dual>(e.rhs, x, u));
        case ExprKind::Pow: {
            Dual b = child<Dual>(e.lhs, x, u);
            if (e.exponent < 0 && b.val == 0.0)
                throw DomainError("zero raised to a negative power");
            return ipow<Dual>(b, e.exponent, Dual{1.0, 0.0}, dmul, ddiv);
        }
        case ExprKind::Neg: return dneg(child<Dual>(e.lhs, x, u));
        case ExprKind::Call: return dcall(e.fn, child<Dual>(e.lhs, x, u));
    }
    throw Error("unhandled expression node");
}

// Printer precedence levels, matching the grammar's nesting:
// expr(1) -> term(2) -> factor(3) -> atom(4).
int precedence(const Expr& e) {
    switch (e.kind) {
        case ExprKind::Add:
        case ExprKind::Sub: return 1;
        case ExprKind::Mul:
        case ExprKind::Div: return 2;
        case ExprKind::Pow: return 3;
        case ExprKind::Neg: return 4;  // '-' atom is itself an atom
        default: return 4;
    }
}

void print_node(const Expr& e, int min_prec, std::string& out) {
    bool parens = precedence(e) < min_prec;
    if (parens) out += '(';
    switch (e.kind) {
        case ExprKind::Constant:
            if (e.constant < 0.0) {
                out += '-';
                out += format_double(-e.constant);
            } else {
                out += format_double(e.constant);
            }
            break;
        case ExprKind::VarX:
            out += 'x';
            out += std::to_string(e.index);
            break;
        case ExprKind::VarU:
            out += 'u';
            out += std::to_string(e.index);
            break;
        case ExprKind::Add:
            print_node(*e.lhs, 1, out);
            out += " + ";
            print_node(*e.rhs, 2, out);
            break;
        case ExprKind::Sub:
            print_node(*e.lhs, 1, out);
            out += " - ";
            print_node(*e.rhs, 2, out);
            break;
        case ExprKind::Mul:
            print_node(*e.lhs, 2, out);
            out += "*";
            print_node(*e.rhs, 3, out);
            break;
        case ExprKind::Div:
            print_node(*e.lhs, 2, out);
            out += "/";
            print_node(*e.rhs, 3, out);
            break;
        case ExprKind::Pow:
            print_node(*e.lhs, 4, out);
            out += '^';
            out += std::to_string(e.exponent);
            break;
        case ExprKind::Neg:
            out += '-';
            print_node(*e.lhs, 4, out);
            break;
        case ExprKind::Call:
            out += fn_name(e.fn);
            out += '(';
            print_node(*e.lhs, 1, out);
            out += ')';
            break;
    }
    if (parens) out += ')';
}

void max_indices(const Expr& e, int& mx, int& mu) {
    switch (e.kind) {
        case ExprKind::VarX:
            if (e.index > mx) mx = e.index;
            return;
        case ExprKind::VarU:
            if (e.index > mu) mu = e.index;
            return;
        default: break;
    }
    if (e.lhs) max_indices(*e.lhs, mx, mu);
    if (e.rhs) max_indices(*e.rhs, mx, mu);
}

}  // namespace

ExprPtr make_constant(double value) {
    Expr e;
    e.kind = ExprKind::Constant;
    e.constant = value;
    return node(std::move(e));
}

ExprPtr make_var_x(int index) {
    Expr e;
    e.kind = ExprKind::VarX;
    e.index = index;
    return node(std::move(e));
}

ExprPtr make_var_u(int index) {
    Expr e;
    e.kind = ExprKind::VarU;
    e.index = index;
    return node(std::move(e));
}

namespace {
ExprPtr binary(ExprKind kind, ExprPtr lhs, ExprPtr rhs) {
    Expr e;
    e.kind = kind;
    e.lhs = std::move(lhs);
    e.rhs = std::move(rhs);
    return node(std::move(e));
}
}  // namespace

ExprPtr make_add(ExprPtr lhs, ExprPtr rhs) { return binary(ExprKind::Add, std::move(lhs), std::move(rhs)); }
ExprPtr make_sub(ExprPtr lhs, ExprPtr rhs) { return binary(ExprKind::Sub, std::move(lhs), std::move(rhs)); }
ExprPtr make_mul(ExprPtr lhs, ExprPtr rhs) { return binary(ExprKind::Mul, std::move(lhs), std::move(rhs)); }
ExprPtr make_div(ExprPtr lhs, ExprPtr rhs) { return binary(ExprKind::Div, std::move(lhs), std::move(rhs)); }

ExprPtr make_pow(ExprPtr base, int exponent) {
    Expr e;
    e.kind = ExprKind::Pow;
    e.exponent = exponent;
    e.lhs = std::move(base);
    return node(std::move(e));
}

ExprPtr make_neg(ExprPtr arg) {
    Expr e;
    e.kind = ExprKind::Neg;
    e.lhs = std::move(arg);
    return node(std::move(e));
}

ExprPtr make_call(ExprFn fn, ExprPtr arg) {
    Expr e;
    e.kind = ExprKind::Call;
    e.fn = fn;
    e.lhs = std::move(arg);
    return node(std::move(e));
}

ExprPtr make_linear_combination(const std::vector<double>& coeffs,
                                const std::function<ExprPtr(int)>& leaf) {
    ExprPtr acc;
    for (size_t k = 0; k < coeffs.size(); ++k) {
        double c = coeffs[k];
        if (c == 0.0) continue;
        ExprPtr term;
        double mag = std::abs(c);
        if (mag == 1.0) {
            term = leaf(static_cast<int>(k) + 1);
        } else {
            term = make_mul(make_constant(mag), leaf(static_cast<int>(k) + 1));
        }
        if (!acc) {
            acc = c < 0.0 ? make_neg(term) : term;
        } else {
            acc = c < 0.0 ? make_sub(acc, term) : make_add(acc, term);
        }
    }
    return acc ? acc : make_constant(0.0);
}

ExprPtr substitute(const ExprPtr& expr, const std::vector<ExprPtr>& subst_x,
                   const std::vector<ExprPtr>& subst_u) {
    const Expr& e = *expr;
    switch (e.kind) {
        case ExprKind::Constant: return expr;
        case ExprKind::VarX: {
            size_t i = static_cast<size_t>(e.index - 1);
            if (i >= subst_x.size()) throw DimensionError("substitution misses x" + std::to_string(e.index));
            return subst_x[i];
        }
        case ExprKind::VarU: {
            size_t j = static_cast<size_t>(e.index - 1);
            if (j >= subst_u.size()) throw DimensionError("substitution misses u" + std::to_string(e.index));
            return subst_u[j];
        }
        default: break;
    }
    Expr out = e;
    if (e.lhs) out.lhs = substitute(e.lhs, subst_x, subst_u);
    if (e.rhs) out.rhs = substitute(e.rhs, subst_x, subst_u);
    return node(std::move(out));
}

double eval_expr(const Expr& e, const std::vector<double>& x,
                 const std::vector<double>& u) {
    return eval_node<double>(e, x, u);
}

Dual eval_expr(const Expr& e, const std::vector<Dual>& x,
               const std::vector<Dual>& u) {
    return eval_node<Dual>(e, x, u);
}

bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case ExprKind::Constant:
            if (a.constant != b.constant) return false;
            break;
        case ExprKind::VarX:
        case ExprKind::VarU:
            if (a.index != b.index) return false;
            break;
        case ExprKind::Pow:
            if (a.exponent != b.exponent) return false;
            break;
        case ExprKind::Call:
            if (a.fn != b.fn) return false;
            break;
        default: break;
    }
    if (static_cast<bool>(a.lhs) != static_cast<bool>(b.lhs)) return false;
    if (static_cast<bool>(a.rhs) != static_cast<bool>(b.rhs)) return false;
    if (a.lhs && !structurally_equal(*a.lhs, *b.lhs)) return false;
    if (a.rhs && !structurally_equal(*a.rhs, *b.rhs)) return false;
    return true;
}

std::string to_string(const Expr& e) {
    std::string out;
    print_node(e, 1, out);
    return out;
}

std::string fn_name(ExprFn fn) {
    switch (fn) {
        case ExprFn::Sin: return "sin";
        case ExprFn::Cos: return "cos";
        case ExprFn::Exp: return "exp";
        case ExprFn::Sqrt: return "sqrt";
        case ExprFn::Abs: return "abs";
    }
    return "?";
}

int max_x_index(const Expr& e) {
    int mx = 0, mu = 0;
    max_indices(e, mx, mu);
    return mx;
}

int max_u_index(const Expr& e) {
    int mx = 0, mu = 0;
    max_indices(e, mx, mu);
    return mu;
}

std::string format_double(double v) {
    // Shortest representation that parses back to the same double.
    char buf[64];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

}  // namespace openstab
