#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace fracdyn::mapexpr {

// ---------------------------------------------------------------------------
// A small expression language for plane-map components and gasket profile
// functions, so new constructions need no recompilation.
//
// Grammar (whitespace insignificant, identifiers [a-z][a-z0-9_]*):
//   expr   := term (("+"|"-") term)*
//   term   := factor (("*"|"/") factor)*
//   factor := "-" factor | power
//   power  := atom ("^" factor)?
//   atom   := number | ident | ident "(" expr ("," expr)* ")" | "(" expr ")"
// ---------------------------------------------------------------------------

struct ParseError : std::runtime_error {
    std::size_t offset;
    ParseError(std::size_t off, const std::string& msg)
        : std::runtime_error("syntax error at offset " + std::to_string(off) + ": " + msg),
          offset(off) {}
};

struct EvalError : std::runtime_error {
    std::size_t offset;
    EvalError(std::size_t off, const std::string& msg)
        : std::runtime_error("evaluation error at offset " + std::to_string(off) + ": " + msg),
          offset(off) {}
};

enum class Var : unsigned { X = 0, Y = 1, T = 2 };
enum class Op { Add, Sub, Mul, Div, Pow };
enum class Func { Sin, Cos, Tan, Asin, Acos, Atan, Sqrt, Cbrt, Abs, Exp, Log, Mod };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

/// Immutable after parse; shared freely across threads.
struct Node {
    enum class Kind { Number, Variable, Negate, Binary, Call };
    Kind kind;
    std::size_t offset = 0;  // byte offset of the originating token
    double number = 0.0;
    Var var = Var::X;
    Op op = Op::Add;
    Func func = Func::Sin;
    NodePtr a;
    NodePtr b;
};

struct Expr {
    NodePtr root;
    bool valid() const { return root != nullptr; }
};

/// Variable bindings for evaluation; unset fields are unbound.
struct Env {
    std::optional<double> x;
    std::optional<double> y;
    std::optional<double> t;
};

inline Env env_xy(double x, double y) { return {x, y, std::nullopt}; }
inline Env env_x(double x) { return {x, std::nullopt, std::nullopt}; }
inline Env env_txy(double t, double x, double y) { return {x, y, t}; }

namespace detail {

inline const char* var_name(Var v) {
    switch (v) {
        case Var::X: return "x";
        case Var::Y: return "y";
        case Var::T: return "t";
    }
    return "?";
}

struct FuncInfo {
    const char* name;
    Func func;
    int arity;
};

inline constexpr std::array<FuncInfo, 12> kFuncs = {{
    {"sin", Func::Sin, 1}, {"cos", Func::Cos, 1}, {"tan", Func::Tan, 1},
    {"asin", Func::Asin, 1}, {"acos", Func::Acos, 1}, {"atan", Func::Atan, 1},
    {"sqrt", Func::Sqrt, 1}, {"cbrt", Func::Cbrt, 1}, {"abs", Func::Abs, 1},
    {"exp", Func::Exp, 1}, {"log", Func::Log, 1}, {"mod", Func::Mod, 2},
}};

inline const FuncInfo* find_func(std::string_view name) {
    for (const auto& f : kFuncs)
        if (name == f.name) return &f;
    return nullptr;
}

inline const char* func_name(Func f) {
    for (const auto& fi : kFuncs)
        if (fi.func == f) return fi.name;
    return "?";
}

class Parser {
public:
    explicit Parser(std::string_view text) : text_(text) {}

    Expr parse_full() {
        Expr e{parse_expr()};
        skip_ws();
        if (pos_ != text_.size()) throw ParseError(pos_, "unexpected trailing input");
        return e;
    }

    // "expr, expr" optionally followed by "| expr, expr".
    void parse_map(Expr& fx, Expr& fy, std::optional<std::array<Expr, 2>>& inv) {
        fx = Expr{parse_expr()};
        expect(',', "map takes two comma-separated components");
        fy = Expr{parse_expr()};
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '|') {
            ++pos_;
            Expr gx{parse_expr()};
            expect(',', "inverse takes two comma-separated components");
            Expr gy{parse_expr()};
            inv = std::array<Expr, 2>{gx, gy};
        }
        skip_ws();
        if (pos_ != text_.size())
            throw ParseError(pos_, "wrong component count: a map is 'expr, expr' with an "
                                   "optional '| expr, expr' inverse");
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() &&
               (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                text_[pos_] == '\r'))
            ++pos_;
    }

    bool peek_is(char c) {
        skip_ws();
        return pos_ < text_.size() && text_[pos_] == c;
    }

    void expect(char c, const char* what) {
        skip_ws();
        if (pos_ >= text_.size() || text_[pos_] != c)
            throw ParseError(pos_, std::string("expected '") + c + "': " + what);
        ++pos_;
    }

    NodePtr parse_expr() {
        NodePtr lhs = parse_term();
        for (;;) {
            skip_ws();
            if (pos_ >= text_.size()) break;
            const char c = text_[pos_];
            if (c != '+' && c != '-') break;
            const std::size_t off = pos_++;
            NodePtr rhs = parse_term();
            lhs = make_binary(c == '+' ? Op::Add : Op::Sub, off, lhs, rhs);
        }
        return lhs;
    }

    NodePtr parse_term() {
        NodePtr lhs = parse_factor();
        for (;;) {
            skip_ws();
            if (pos_ >= text_.size()) break;
            const char c = text_[pos_];
            if (c != '*' && c != '/') break;
            const std::size_t off = pos_++;
            NodePtr rhs = parse_factor();
            lhs = make_binary(c == '*' ? Op::Mul : Op::Div, off, lhs, rhs);
        }
        return lhs;
    }

    NodePtr parse_factor() {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '-') {
            const std::size_t off = pos_++;
            NodePtr inner = parse_factor();
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::Negate;
            n->offset = off;
            n->a = inner;
            return n;
        }
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_atom();
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == '^') {
            const std::size_t off = pos_++;
            NodePtr exp = parse_factor();  // right-associative, allows x^-2
            return make_binary(Op::Pow, off, base, exp);
        }
        return base;
    }

    NodePtr parse_atom() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError(pos_, "expected a value");
        const char c = text_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr inner = parse_expr();
            expect(')', "to close '('");
            return inner;
        }
        if (c >= '0' && c <= '9') return parse_number();
        if (c >= 'a' && c <= 'z') return parse_ident();
        throw ParseError(pos_, "expected a value");
    }

    NodePtr parse_number() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            const std::size_t frac = pos_;
            while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
            if (pos_ == frac) throw ParseError(pos_, "expected digits after '.'");
        }
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            const std::size_t ex = pos_;
            while (pos_ < text_.size() && text_[pos_] >= '0' && text_[pos_] <= '9') ++pos_;
            if (pos_ == ex) throw ParseError(pos_, "expected digits in exponent");
        }
        double value = 0.0;
        const auto res =
            std::from_chars(text_.data() + start, text_.data() + pos_, value);
        if (res.ec != std::errc{}) throw ParseError(start, "malformed number");
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Number;
        n->offset = start;
        n->number = value;
        return n;
    }

    NodePtr parse_ident() {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               ((text_[pos_] >= 'a' && text_[pos_] <= 'z') ||
                (text_[pos_] >= '0' && text_[pos_] <= '9') || text_[pos_] == '_'))
            ++pos_;
        const std::string_view name = text_.substr(start, pos_ - start);

        if (peek_is('(')) {
            const FuncInfo* fi = find_func(name);
            if (!fi)
                throw ParseError(start, "unknown function '" + std::string(name) + "'");
            ++pos_;  // consume '('
            std::size_t argc = 0;
            NodePtr args[2];
            for (;;) {
                NodePtr arg = parse_expr();
                if (argc < 2) args[argc] = arg;
                ++argc;
                skip_ws();
                if (pos_ < text_.size() && text_[pos_] == ',') {
                    ++pos_;
                    continue;
                }
                break;
            }
            expect(')', "to close the argument list");
            if (static_cast<int>(argc) != fi->arity)
                throw ParseError(start, "function '" + std::string(name) + "' expects " +
                                            std::to_string(fi->arity) + " argument" +
                                            (fi->arity == 1 ? "" : "s") + ", got " +
                                            std::to_string(argc));
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::Call;
            n->offset = start;
            n->func = fi->func;
            n->a = args[0];
            if (fi->arity == 2) n->b = args[1];
            return n;
        }

        if (name == "pi") {
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::Number;
            n->offset = start;
            n->number = M_PI;
            return n;
        }
        Var v;
        if (name == "x") v = Var::X;
        else if (name == "y") v = Var::Y;
        else if (name == "t") v = Var::T;
        else throw ParseError(start, "unknown identifier '" + std::string(name) + "'");
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Variable;
        n->offset = start;
        n->var = v;
        return n;
    }

    static NodePtr make_binary(Op op, std::size_t off, NodePtr a, NodePtr b) {
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Binary;
        n->offset = off;
        n->op = op;
        n->a = std::move(a);
        n->b = std::move(b);
        return n;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

inline double eval_node(const Node& n, const Env& env) {
    switch (n.kind) {
        case Node::Kind::Number:
            return n.number;
        case Node::Kind::Variable: {
            const std::optional<double>* slot = nullptr;
            switch (n.var) {
                case Var::X: slot = &env.x; break;
                case Var::Y: slot = &env.y; break;
                case Var::T: slot = &env.t; break;
            }
            if (!slot->has_value())
                throw EvalError(n.offset, std::string("unbound variable '") + var_name(n.var) +
                                              "'");
            return **slot;
        }
        case Node::Kind::Negate:
            return -eval_node(*n.a, env);
        case Node::Kind::Binary: {
            const double a = eval_node(*n.a, env);
            const double b = eval_node(*n.b, env);
            switch (n.op) {
                case Op::Add: return a + b;
                case Op::Sub: return a - b;
                case Op::Mul: return a * b;
                case Op::Div:
                    if (b == 0.0) throw EvalError(n.offset, "division by zero");
                    return a / b;
                case Op::Pow:
                    if (a < 0.0 && b != std::floor(b))
                        throw EvalError(n.offset,
                                        "negative base with non-integer exponent; write real "
                                        "roots as cbrt(...)");
                    if (a == 0.0 && b < 0.0) throw EvalError(n.offset, "zero base with negative exponent");
                    return std::pow(a, b);
            }
            return 0.0;
        }
        case Node::Kind::Call: {
            const double a = eval_node(*n.a, env);
            switch (n.func) {
                case Func::Sin: return std::sin(a);
                case Func::Cos: return std::cos(a);
                case Func::Tan: return std::tan(a);
                case Func::Asin:
                    if (a < -1.0 || a > 1.0)
                        throw EvalError(n.offset, "asin argument outside [-1, 1]");
                    return std::asin(a);
                case Func::Acos:
                    if (a < -1.0 || a > 1.0)
                        throw EvalError(n.offset, "acos argument outside [-1, 1]");
                    return std::acos(a);
                case Func::Atan: return std::atan(a);
                case Func::Sqrt:
                    if (a < 0.0) throw EvalError(n.offset, "sqrt of a negative value");
                    return std::sqrt(a);
                case Func::Cbrt: return std::cbrt(a);
                case Func::Abs: return std::fabs(a);
                case Func::Exp: return std::exp(a);
                case Func::Log:
                    if (a <= 0.0) throw EvalError(n.offset, "log of a non-positive value");
                    return std::log(a);
                case Func::Mod: {
                    const double b = eval_node(*n.b, env);
                    if (b == 0.0) throw EvalError(n.offset, "mod with zero divisor");
                    return a - b * std::floor(a / b);
                }
            }
            return 0.0;
        }
    }
    return 0.0;
}

// Precedence used by the canonical printer. Mirrors the grammar:
// add/sub 1, mul/div 2, unary minus 3, pow 4, atoms 5.
inline int precedence(const Node& n) {
    switch (n.kind) {
        case Node::Kind::Number:
        case Node::Kind::Variable:
        case Node::Kind::Call: return 5;
        case Node::Kind::Negate: return 3;
        case Node::Kind::Binary:
            switch (n.op) {
                case Op::Add:
                case Op::Sub: return 1;
                case Op::Mul:
                case Op::Div: return 2;
                case Op::Pow: return 4;
            }
    }
    return 5;
}

inline void print_node(const Node& n, std::string& out);

inline void print_child(const Node& child, bool parens, std::string& out) {
    if (parens) out += '(';
    print_node(child, out);
    if (parens) out += ')';
}

inline void print_node(const Node& n, std::string& out) {
    switch (n.kind) {
        case Node::Kind::Number: {
            char buf[32];
            const auto res = std::to_chars(buf, buf + sizeof(buf), n.number);
            out.append(buf, res.ptr);
            return;
        }
        case Node::Kind::Variable:
            out += var_name(n.var);
            return;
        case Node::Kind::Negate:
            out += '-';
            print_child(*n.a, precedence(*n.a) < 3, out);
            return;
        case Node::Kind::Binary: {
            if (n.op == Op::Pow) {
                // Grammar requires an atom base; exponent is a factor.
                print_child(*n.a, precedence(*n.a) < 5, out);
                out += '^';
                print_child(*n.b, precedence(*n.b) < 3, out);
                return;
            }
            const int p = precedence(n);
            const char* sym = n.op == Op::Add ? "+" : n.op == Op::Sub ? "-"
                              : n.op == Op::Mul ? "*" : "/";
            print_child(*n.a, precedence(*n.a) < p, out);
            out += sym;
            print_child(*n.b, precedence(*n.b) <= p, out);
            return;
        }
        case Node::Kind::Call:
            out += func_name(n.func);
            out += '(';
            print_node(*n.a, out);
            if (n.b) {
                out += ',';
                print_node(*n.b, out);
            }
            out += ')';
            return;
    }
}

inline void collect_vars(const Node& n, unsigned& mask) {
    if (n.kind == Node::Kind::Variable) mask |= 1u << static_cast<unsigned>(n.var);
    if (n.a) collect_vars(*n.a, mask);
    if (n.b) collect_vars(*n.b, mask);
}

inline void first_disallowed(const Node& n, unsigned allowed, const Node*& hit) {
    if (hit) return;
    if (n.kind == Node::Kind::Variable &&
        !(allowed & (1u << static_cast<unsigned>(n.var)))) {
        hit = &n;
        return;
    }
    if (n.a) first_disallowed(*n.a, allowed, hit);
    if (n.b) first_disallowed(*n.b, allowed, hit);
}

}  // namespace detail

inline Expr parse_expr(std::string_view text) {
    return detail::Parser(text).parse_full();
}

inline double eval_expr(const Expr& e, const Env& env) {
    if (!e.valid()) throw std::logic_error("eval_expr: empty expression");
    return detail::eval_node(*e.root, env);
}

/// Canonical printed form; parsing it back yields a structurally identical tree.
inline std::string to_string(const Expr& e) {
    std::string out;
    if (e.valid()) detail::print_node(*e.root, out);
    return out;
}

/// Bitmask of variables appearing in the expression (bit 0 x, 1 y, 2 t).
inline unsigned variables_used(const Expr& e) {
    unsigned mask = 0;
    if (e.valid()) detail::collect_vars(*e.root, mask);
    return mask;
}

constexpr unsigned kVarX = 1u;
constexpr unsigned kVarY = 2u;
constexpr unsigned kVarT = 4u;

inline void require_variables(const Expr& e, unsigned allowed, const char* context) {
    const Node* hit = nullptr;
    if (e.valid()) detail::first_disallowed(*e.root, allowed, hit);
    if (hit)
        throw ParseError(hit->offset, std::string("variable '") +
                                          detail::var_name(hit->var) + "' not allowed in " +
                                          context);
}

inline bool structurally_equal(const Expr& a, const Expr& b) {
    struct Walk {
        static bool eq(const Node* x, const Node* y) {
            if (!x || !y) return x == y;
            if (x->kind != y->kind) return false;
            switch (x->kind) {
                case Node::Kind::Number:
                    // bitwise: canonical printing round-trips exactly
                    return x->number == y->number;
                case Node::Kind::Variable: return x->var == y->var;
                case Node::Kind::Negate: return eq(x->a.get(), y->a.get());
                case Node::Kind::Binary:
                    return x->op == y->op && eq(x->a.get(), y->a.get()) &&
                           eq(x->b.get(), y->b.get());
                case Node::Kind::Call:
                    return x->func == y->func && eq(x->a.get(), y->a.get()) &&
                           eq(x->b.get(), y->b.get());
            }
            return false;
        }
    };
    return Walk::eq(a.root.get(), b.root.get());
}

/// A plane map as expressions: forward pair, optional inverse pair.
/// Forward components are in (x, y); inverse components read the image point
/// through the same variable names.
struct MapDef {
    Expr forward_x;
    Expr forward_y;
    std::optional<std::array<Expr, 2>> inverse;
};

inline MapDef parse_map(std::string_view text) {
    MapDef def;
    detail::Parser p(text);
    p.parse_map(def.forward_x, def.forward_y, def.inverse);
    require_variables(def.forward_x, kVarX | kVarY, "a map component");
    require_variables(def.forward_y, kVarX | kVarY, "a map component");
    if (def.inverse) {
        require_variables((*def.inverse)[0], kVarX | kVarY, "a map component");
        require_variables((*def.inverse)[1], kVarX | kVarY, "a map component");
    }
    return def;
}

/// One-variable function body in x (gasket profiles).
inline Expr parse_func(std::string_view text) {
    Expr e = parse_expr(text);
    require_variables(e, kVarX, "a one-variable function");
    return e;
}

}  // namespace fracdyn::mapexpr
