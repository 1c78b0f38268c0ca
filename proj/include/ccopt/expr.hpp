#pragma once

/**
 * @file expr.hpp
 * @brief Scalar expressions over x1..xn with exact first and second derivatives.
 *
 * Expressions are parsed into an immutable AST. eval2() propagates a
 * second-order jet (value, gradient, Hessian) through the tree using the
 * chain rule, so all derivatives are exact up to floating point rounding.
 *
 * Grammar:
 *   expr   := term (('+'|'-') term)*
 *   term   := factor (('*'|'/') factor)*
 *   factor := base ('^' integer)?
 *   base   := number | ident | '(' expr ')' | '-' base | func '(' expr ')'
 *   func   := 'sin' | 'cos' | 'exp' | 'log'
 *   ident  := 'x' positive-integer
 */

#include <Eigen/Dense>

#include <cctype>
#include <charconv>
#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <variant>
#include <vector>

namespace ccopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t position)
        : std::runtime_error(what + " at position " + std::to_string(position)),
          position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

/// Raised when evaluation hits log of a nonpositive value or division by zero.
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

enum class UnaryFn { Neg, Sin, Cos, Exp, Log };
enum class BinaryOp { Add, Sub, Mul, Div };

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Immutable expression node. Shared subtrees are safe to evaluate concurrently.
class Expr {
public:
    struct Number { double value; };
    struct Variable { int index; };  // 0-based
    struct Unary { UnaryFn fn; ExprPtr arg; };
    struct Binary { BinaryOp op; ExprPtr lhs, rhs; };
    struct Power { ExprPtr base; int exponent; };
    using Node = std::variant<Number, Variable, Unary, Binary, Power>;

    explicit Expr(Node node) : node_(std::move(node)) {}

    const Node& node() const noexcept { return node_; }

    static ExprPtr number(double v) { return std::make_shared<const Expr>(Number{v}); }
    static ExprPtr variable(int index) { return std::make_shared<const Expr>(Variable{index}); }
    static ExprPtr unary(UnaryFn fn, ExprPtr a) {
        return std::make_shared<const Expr>(Unary{fn, std::move(a)});
    }
    static ExprPtr binary(BinaryOp op, ExprPtr a, ExprPtr b) {
        return std::make_shared<const Expr>(Binary{op, std::move(a), std::move(b)});
    }
    static ExprPtr power(ExprPtr base, int k) {
        return std::make_shared<const Expr>(Power{std::move(base), k});
    }

private:
    Node node_;
};

/// Structural equality of two ASTs.
inline bool same_tree(const Expr& a, const Expr& b) {
    if (a.node().index() != b.node().index()) return false;
    return std::visit(
        [&](const auto& na) -> bool {
            using T = std::decay_t<decltype(na)>;
            const auto& nb = std::get<T>(b.node());
            if constexpr (std::is_same_v<T, Expr::Number>) {
                return na.value == nb.value;
            } else if constexpr (std::is_same_v<T, Expr::Variable>) {
                return na.index == nb.index;
            } else if constexpr (std::is_same_v<T, Expr::Unary>) {
                return na.fn == nb.fn && same_tree(*na.arg, *nb.arg);
            } else if constexpr (std::is_same_v<T, Expr::Binary>) {
                return na.op == nb.op && same_tree(*na.lhs, *nb.lhs) && same_tree(*na.rhs, *nb.rhs);
            } else {
                return na.exponent == nb.exponent && same_tree(*na.base, *nb.base);
            }
        },
        a.node());
}

/// Largest variable index referenced (0-based), or -1 for constant expressions.
inline int max_variable(const Expr& e) {
    return std::visit(
        [](const auto& n) -> int {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Expr::Number>) {
                return -1;
            } else if constexpr (std::is_same_v<T, Expr::Variable>) {
                return n.index;
            } else if constexpr (std::is_same_v<T, Expr::Unary>) {
                return max_variable(*n.arg);
            } else if constexpr (std::is_same_v<T, Expr::Binary>) {
                return std::max(max_variable(*n.lhs), max_variable(*n.rhs));
            } else {
                return max_variable(*n.base);
            }
        },
        e.node());
}

/// Polynomial degree of the expression, or nullopt when it is not a polynomial
/// (transcendental function of a nonconstant argument, division by a
/// nonconstant, negative power of a nonconstant).
inline std::optional<int> polynomial_degree(const Expr& e) {
    return std::visit(
        [](const auto& n) -> std::optional<int> {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Expr::Number>) {
                return 0;
            } else if constexpr (std::is_same_v<T, Expr::Variable>) {
                return 1;
            } else if constexpr (std::is_same_v<T, Expr::Unary>) {
                auto d = polynomial_degree(*n.arg);
                if (!d) return std::nullopt;
                if (n.fn == UnaryFn::Neg) return d;
                return *d == 0 ? std::optional<int>(0) : std::nullopt;
            } else if constexpr (std::is_same_v<T, Expr::Binary>) {
                auto a = polynomial_degree(*n.lhs);
                auto b = polynomial_degree(*n.rhs);
                if (!a || !b) return std::nullopt;
                switch (n.op) {
                    case BinaryOp::Add:
                    case BinaryOp::Sub: return std::max(*a, *b);
                    case BinaryOp::Mul: return *a + *b;
                    case BinaryOp::Div: return *b == 0 ? std::optional<int>(*a) : std::nullopt;
                }
                return std::nullopt;
            } else {
                auto d = polynomial_degree(*n.base);
                if (!d) return std::nullopt;
                if (*d == 0) return 0;
                if (n.exponent < 0) return std::nullopt;
                return *d * n.exponent;
            }
        },
        e.node());
}

// ---------------------------------------------------------------------------
// Printing

namespace detail {

inline void print_to(const Expr& e, std::string& out) {
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, Expr::Number>) {
                out += format_number(n.value);
            } else if constexpr (std::is_same_v<T, Expr::Variable>) {
                out += 'x';
                out += std::to_string(n.index + 1);
            } else if constexpr (std::is_same_v<T, Expr::Unary>) {
                switch (n.fn) {
                    case UnaryFn::Neg:
                        out += "(-";
                        print_to(*n.arg, out);
                        out += ')';
                        return;
                    case UnaryFn::Sin: out += "sin("; break;
                    case UnaryFn::Cos: out += "cos("; break;
                    case UnaryFn::Exp: out += "exp("; break;
                    case UnaryFn::Log: out += "log("; break;
                }
                print_to(*n.arg, out);
                out += ')';
            } else if constexpr (std::is_same_v<T, Expr::Binary>) {
                static constexpr const char* ops[] = {" + ", " - ", " * ", " / "};
                out += '(';
                print_to(*n.lhs, out);
                out += ops[static_cast<int>(n.op)];
                print_to(*n.rhs, out);
                out += ')';
            } else {
                out += '(';
                print_to(*n.base, out);
                out += '^';
                out += std::to_string(n.exponent);
                out += ')';
            }
        },
        e.node());
}

}  // namespace detail

/// Fully parenthesized text form; parse(print(e)) reproduces e.
inline std::string print(const Expr& e) {
    std::string out;
    detail::print_to(e, out);
    return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

class Parser {
public:
    Parser(std::string_view src, int n) : src_(src), n_(n) {}

    ExprPtr run() {
        auto e = parse_expr();
        skip_ws();
        if (pos_ != src_.size()) fail("unexpected character '" + std::string(1, src_[pos_]) + "'");
        return e;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    ExprPtr parse_expr() {
        auto lhs = parse_term();
        for (;;) {
            if (accept('+')) lhs = Expr::binary(BinaryOp::Add, lhs, parse_term());
            else if (accept('-')) lhs = Expr::binary(BinaryOp::Sub, lhs, parse_term());
            else return lhs;
        }
    }

    ExprPtr parse_term() {
        auto lhs = parse_factor();
        for (;;) {
            if (accept('*')) lhs = Expr::binary(BinaryOp::Mul, lhs, parse_factor());
            else if (accept('/')) lhs = Expr::binary(BinaryOp::Div, lhs, parse_factor());
            else return lhs;
        }
    }

    ExprPtr parse_factor() {
        auto base = parse_base();
        if (accept('^')) return Expr::power(base, parse_integer());
        return base;
    }

    int parse_integer() {
        skip_ws();
        const std::size_t start = pos_;
        bool negative = false;
        if (pos_ < src_.size() && (src_[pos_] == '-' || src_[pos_] == '+')) {
            negative = src_[pos_] == '-';
            ++pos_;
        }
        const std::size_t digits = pos_;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        if (pos_ == digits) {
            pos_ = start;
            fail("expected integer exponent");
        }
        if (pos_ < src_.size() && (src_[pos_] == '.' || src_[pos_] == 'e' || src_[pos_] == 'E')) {
            pos_ = start;
            fail("exponent must be an integer");
        }
        int value = 0;
        auto res = std::from_chars(src_.data() + digits, src_.data() + pos_, value);
        if (res.ec != std::errc{}) {
            pos_ = start;
            fail("exponent out of range");
        }
        return negative ? -value : value;
    }

    ExprPtr parse_number() {
        const std::size_t start = pos_;
        auto digit_at = [&](std::size_t p) {
            return p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]));
        };
        while (digit_at(pos_)) ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            while (digit_at(pos_)) ++pos_;
        }
        if (pos_ == start || (pos_ == start + 1 && src_[start] == '.')) {
            pos_ = start;
            fail("malformed number");
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t p = pos_ + 1;
            if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
            if (!digit_at(p)) {
                pos_ = p;
                fail("malformed exponent in number");
            }
            while (digit_at(p)) ++p;
            pos_ = p;
        }
        double value = 0.0;
        auto res = std::from_chars(src_.data() + start, src_.data() + pos_, value);
        if (res.ec != std::errc{} || res.ptr != src_.data() + pos_) {
            pos_ = start;
            fail("malformed number");
        }
        return Expr::number(value);
    }

    ExprPtr parse_base() {
        skip_ws();
        if (pos_ >= src_.size()) fail("unexpected end of input");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            auto e = parse_expr();
            if (!accept(')')) fail("expected ')'");
            return e;
        }
        if (c == '-') {
            ++pos_;
            return Expr::unary(UnaryFn::Neg, parse_base());
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
        fail("unexpected character '" + std::string(1, c) + "'");
    }

    ExprPtr parse_identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && std::isalnum(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        const std::string_view word = src_.substr(start, pos_ - start);

        static constexpr std::pair<std::string_view, UnaryFn> funcs[] = {
            {"sin", UnaryFn::Sin}, {"cos", UnaryFn::Cos}, {"exp", UnaryFn::Exp}, {"log", UnaryFn::Log}};
        for (const auto& [name, fn] : funcs) {
            if (word == name) {
                if (!accept('(')) fail("expected '(' after " + std::string(name));
                auto arg = parse_expr();
                if (!accept(')')) fail("expected ')'");
                return Expr::unary(fn, arg);
            }
        }

        if (word.size() >= 2 && word[0] == 'x') {
            const auto digits = word.substr(1);
            bool all_digits = true;
            for (char d : digits) all_digits = all_digits && std::isdigit(static_cast<unsigned char>(d));
            if (all_digits && digits[0] != '0') {
                int index = 0;
                auto res = std::from_chars(digits.data(), digits.data() + digits.size(), index);
                if (res.ec != std::errc{} || index > n_) {
                    pos_ = start;
                    fail("variable " + std::string(word) + " out of range (n = " + std::to_string(n_) + ")");
                }
                return Expr::variable(index - 1);
            }
        }
        pos_ = start;
        fail("unknown identifier '" + std::string(word) + "'");
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int n_;
};

}  // namespace detail

/// Parses `source` as an expression over x1..xn. Throws ParseError.
inline ExprPtr parse(std::string_view source, int n) {
    if (n < 1) throw ParseError("dimension must be at least 1", 0);
    return detail::Parser(source, n).run();
}

// ---------------------------------------------------------------------------
// Second-order forward evaluation

/// Value, gradient and Hessian of a scalar function at a point.
/// The Hessian is kept exactly symmetric: only the upper triangle is computed
/// and then mirrored.
struct Jet2 {
    double value = 0.0;
    Vector gradient;
    Matrix hessian;

    static Jet2 constant(double v, Eigen::Index n) {
        return {v, Vector::Zero(n), Matrix::Zero(n, n)};
    }
};

namespace detail {

inline void mirror_upper(Matrix& h) {
    for (Eigen::Index j = 0; j < h.cols(); ++j)
        for (Eigen::Index i = j + 1; i < h.rows(); ++i) h(i, j) = h(j, i);
}

// Rank-two symmetric update H += a*(u v' + v u') on the upper triangle.
inline void add_sym_outer(Matrix& h, double a, const Vector& u, const Vector& v) {
    for (Eigen::Index j = 0; j < h.cols(); ++j)
        for (Eigen::Index i = 0; i <= j; ++i) h(i, j) += a * (u(i) * v(j) + v(i) * u(j));
}

// phi(u) with phi' = d1, phi'' = d2
inline Jet2 chain(const Jet2& u, double value, double d1, double d2) {
    Jet2 r;
    r.value = value;
    r.gradient = d1 * u.gradient;
    r.hessian = d1 * u.hessian;
    add_sym_outer(r.hessian, 0.5 * d2, u.gradient, u.gradient);
    mirror_upper(r.hessian);
    return r;
}

inline Jet2 product(const Jet2& a, const Jet2& b) {
    Jet2 r;
    r.value = a.value * b.value;
    r.gradient = a.value * b.gradient + b.value * a.gradient;
    r.hessian = a.value * b.hessian + b.value * a.hessian;
    add_sym_outer(r.hessian, 1.0, a.gradient, b.gradient);
    mirror_upper(r.hessian);
    return r;
}

inline Jet2 power(const Jet2& u, int k) {
    if (k == 0) return Jet2::constant(1.0, u.gradient.size());
    if (k < 0 && u.value == 0.0) throw DomainError("negative power of zero");
    const double v = u.value;
    const double d1 = k * std::pow(v, k - 1);
    const double d2 = k == 1 ? 0.0 : static_cast<double>(k) * (k - 1) * std::pow(v, k - 2);
    return chain(u, std::pow(v, k), d1, d2);
}

inline Jet2 eval_jet(const Expr& e, const Vector& x) {
    const Eigen::Index n = x.size();
    return std::visit(
        [&](const auto& node) -> Jet2 {
            using T = std::decay_t<decltype(node)>;
            if constexpr (std::is_same_v<T, Expr::Number>) {
                return Jet2::constant(node.value, n);
            } else if constexpr (std::is_same_v<T, Expr::Variable>) {
                if (node.index >= n) throw DomainError("variable index exceeds point dimension");
                Jet2 r = Jet2::constant(x(node.index), n);
                r.gradient(node.index) = 1.0;
                return r;
            } else if constexpr (std::is_same_v<T, Expr::Unary>) {
                Jet2 u = eval_jet(*node.arg, x);
                switch (node.fn) {
                    case UnaryFn::Neg:
                        u.value = -u.value;
                        u.gradient = -u.gradient;
                        u.hessian = -u.hessian;
                        return u;
                    case UnaryFn::Sin: {
                        const double s = std::sin(u.value), c = std::cos(u.value);
                        return chain(u, s, c, -s);
                    }
                    case UnaryFn::Cos: {
                        const double s = std::sin(u.value), c = std::cos(u.value);
                        return chain(u, c, -s, -c);
                    }
                    case UnaryFn::Exp: {
                        const double ev = std::exp(u.value);
                        return chain(u, ev, ev, ev);
                    }
                    case UnaryFn::Log: {
                        if (!(u.value > 0.0))
                            throw DomainError("log of nonpositive value in log(" + print(*node.arg) + ")");
                        return chain(u, std::log(u.value), 1.0 / u.value, -1.0 / (u.value * u.value));
                    }
                }
                throw DomainError("unknown function");
            } else if constexpr (std::is_same_v<T, Expr::Binary>) {
                Jet2 a = eval_jet(*node.lhs, x);
                Jet2 b = eval_jet(*node.rhs, x);
                switch (node.op) {
                    case BinaryOp::Add:
                        a.value += b.value;
                        a.gradient += b.gradient;
                        a.hessian += b.hessian;
                        return a;
                    case BinaryOp::Sub:
                        a.value -= b.value;
                        a.gradient -= b.gradient;
                        a.hessian -= b.hessian;
                        return a;
                    case BinaryOp::Mul: return product(a, b);
                    case BinaryOp::Div: {
                        if (b.value == 0.0) throw DomainError("division by zero in " + print(*node.rhs));
                        const double v = b.value;
                        return product(a, chain(b, 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)));
                    }
                }
                throw DomainError("unknown operator");
            } else {
                Jet2 u = eval_jet(*node.base, x);
                try {
                    return power(u, node.exponent);
                } catch (const DomainError&) {
                    throw DomainError("negative power of zero in " + print(*node.base));
                }
            }
        },
        e.node());
}

}  // namespace detail

/// Exact value, gradient and Hessian of `e` at `x`. Throws DomainError.
inline Jet2 eval2(const Expr& e, const Vector& x) { return detail::eval_jet(e, x); }

/// Plain value at `x`.
inline double eval(const Expr& e, const Vector& x) { return detail::eval_jet(e, x).value; }

}  // namespace ccopt
