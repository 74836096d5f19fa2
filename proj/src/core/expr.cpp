#include "expr.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <numbers>

#include "error.hpp"

namespace charstrip {

namespace var {
std::string name(int slot) {
    if (slot == x) return "x";
    if (slot == t) return "t";
    if (slot == tau) return "tau";
    return "V" + std::to_string(slot - 2);
}
}  // namespace var

VarMask state_mask(int n) {
    VarMask m = 0;
    for (int i = 1; i <= n; ++i) m |= mask_of(var::V(i));
    return m;
}

enum class Kind { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Log, Sqrt, Abs };

struct Node {
    Kind kind = Kind::Const;
    double value = 0.0;
    bool is_pi = false;
    int slot = 0;
    int exponent = 0;
    std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Node>;

NodePtr make_const(double v, bool pi = false) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Const;
    n->value = v;
    n->is_pi = pi;
    return n;
}

NodePtr make_var(int slot) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Var;
    n->slot = slot;
    return n;
}

bool is_const(const NodePtr& n, double v) { return n->kind == Kind::Const && n->value == v; }

// The smart constructors fold only the trivially safe cases (0 and 1 identities,
// constant negation). Nothing that could change where evaluation fails.
NodePtr make_unary(Kind k, NodePtr a) {
    if (k == Kind::Neg && a->kind == Kind::Const && !a->is_pi) return make_const(-a->value);
    if (k == Kind::Neg && a->kind == Kind::Neg) return a->a;
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    return n;
}

NodePtr make_binary(Kind k, NodePtr a, NodePtr b) {
    switch (k) {
        case Kind::Add:
            if (is_const(a, 0.0)) return b;
            if (is_const(b, 0.0)) return a;
            break;
        case Kind::Sub:
            if (is_const(b, 0.0)) return a;
            if (is_const(a, 0.0)) return make_unary(Kind::Neg, b);
            break;
        case Kind::Mul:
            if (is_const(a, 0.0) || is_const(b, 0.0)) return make_const(0.0);
            if (is_const(a, 1.0)) return b;
            if (is_const(b, 1.0)) return a;
            break;
        case Kind::Div:
            if (is_const(b, 1.0)) return a;
            break;
        default:
            break;
    }
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
}

NodePtr make_pow(NodePtr a, int e) {
    if (e == 0) return make_const(1.0);
    if (e == 1) return a;
    auto n = std::make_shared<Node>();
    n->kind = Kind::Pow;
    n->exponent = e;
    n->a = std::move(a);
    return n;
}

// ---------------------------------------------------------------- parser

class Parser {
public:
    Parser(std::string_view s, VarMask allowed) : s_(s), allowed_(allowed) {}

    NodePtr parse_all() {
        skip_ws();
        if (pos_ >= s_.size()) throw SyntaxError("empty expression", pos_);
        NodePtr n = parse_sum();
        skip_ws();
        if (pos_ != s_.size()) throw SyntaxError("unexpected character '" + std::string(1, s_[pos_]) + "'", pos_);
        return n;
    }

private:
    static constexpr int kMaxDepth = 200;

    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' || s_[pos_] == '\r')) ++pos_;
    }
    bool peek(char c) {
        skip_ws();
        return pos_ < s_.size() && s_[pos_] == c;
    }
    bool accept(char c) {
        if (peek(c)) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!accept(c)) throw SyntaxError(std::string("expected '") + c + "'", pos_);
    }

    struct DepthGuard {
        explicit DepthGuard(Parser& p) : p(p) {
            if (++p.depth_ > kMaxDepth) throw SyntaxError("expression nested too deeply", p.pos_);
        }
        ~DepthGuard() { --p.depth_; }
        Parser& p;
    };

    NodePtr parse_sum() {
        DepthGuard g(*this);
        NodePtr left = parse_product();
        for (;;) {
            if (accept('+')) left = make_binary(Kind::Add, left, parse_product());
            else if (accept('-')) left = make_binary(Kind::Sub, left, parse_product());
            else return left;
        }
    }

    NodePtr parse_product() {
        NodePtr left = parse_unary();
        for (;;) {
            if (accept('*')) left = make_binary(Kind::Mul, left, parse_unary());
            else if (accept('/')) left = make_binary(Kind::Div, left, parse_unary());
            else return left;
        }
    }

    NodePtr parse_unary() {
        DepthGuard g(*this);
        if (accept('-')) return make_unary(Kind::Neg, parse_unary());
        if (accept('+')) return parse_unary();
        return parse_power();
    }

    NodePtr parse_power() {
        NodePtr base = parse_primary();
        if (!accept('^')) return base;
        skip_ws();
        bool paren = accept('(');
        bool neg = accept('-');
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < s_.size() && s_[pos_] >= '0' && s_[pos_] <= '9') ++pos_;
        if (start == pos_) throw SyntaxError("exponent must be an integer literal", start);
        if (pos_ < s_.size() && (s_[pos_] == '.' || s_[pos_] == 'e' || s_[pos_] == 'E'))
            throw SyntaxError("exponent must be an integer literal", start);
        int e = 0;
        auto [p, ec] = std::from_chars(s_.data() + start, s_.data() + pos_, e);
        if (ec != std::errc{} || e > 1000) throw SyntaxError("exponent out of range", start);
        if (paren) expect(')');
        return make_pow(base, neg ? -e : e);
    }

    NodePtr parse_number() {
        std::size_t start = pos_;
        while (pos_ < s_.size() && ((s_[pos_] >= '0' && s_[pos_] <= '9') || s_[pos_] == '.')) ++pos_;
        if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
            std::size_t save = pos_++;
            if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) ++pos_;
            std::size_t digits = pos_;
            while (pos_ < s_.size() && s_[pos_] >= '0' && s_[pos_] <= '9') ++pos_;
            if (digits == pos_) pos_ = save;
        }
        double v = 0.0;
        auto [p, ec] = std::from_chars(s_.data() + start, s_.data() + pos_, v);
        if (ec != std::errc{} || p != s_.data() + pos_) throw SyntaxError("malformed number", start);
        return make_const(v);
    }

    NodePtr parse_primary() {
        skip_ws();
        if (pos_ >= s_.size()) throw SyntaxError("unexpected end of input", pos_);
        char c = s_[pos_];
        if ((c >= '0' && c <= '9') || c == '.') return parse_number();
        if (c == '(') {
            ++pos_;
            NodePtr n = parse_sum();
            expect(')');
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            std::string id(s_.substr(start, pos_ - start));
            return identifier(id, start);
        }
        throw SyntaxError("unexpected character '" + std::string(1, c) + "'", pos_);
    }

    NodePtr identifier(const std::string& id, std::size_t at) {
        static const std::array<std::pair<const char*, Kind>, 6> fns = {{{"sin", Kind::Sin},
                                                                         {"cos", Kind::Cos},
                                                                         {"exp", Kind::Exp},
                                                                         {"log", Kind::Log},
                                                                         {"sqrt", Kind::Sqrt},
                                                                         {"abs", Kind::Abs}}};
        for (auto& [name, kind] : fns) {
            if (id == name) {
                if (!accept('(')) throw SyntaxError("expected '(' after " + id, pos_);
                NodePtr arg = parse_sum();
                expect(')');
                return make_unary(kind, arg);
            }
        }
        if (id == "pi") return make_const(std::numbers::pi, true);
        int slot = -1;
        if (id == "x") slot = var::x;
        else if (id == "t") slot = var::t;
        else if (id == "tau") slot = var::tau;
        else if (id.size() >= 2 && id[0] == 'V' && id[1] != '0') {
            int i = 0;
            auto [p, ec] = std::from_chars(id.data() + 1, id.data() + id.size(), i);
            if (ec == std::errc{} && p == id.data() + id.size() && i >= 1 && i <= var::max_state) slot = var::V(i);
        }
        if (slot < 0) throw Error(ErrorCode::UnknownIdentifier, "unknown identifier '" + id + "' at byte " + std::to_string(at));
        if (!((allowed_ >> slot) & 1u))
            throw Error(ErrorCode::UnknownIdentifier, "variable '" + id + "' is not allowed here (byte " + std::to_string(at) + ")");
        return make_var(slot);
    }

    std::string_view s_;
    VarMask allowed_;
    std::size_t pos_ = 0;
    int depth_ = 0;
};

// ---------------------------------------------------------------- derivative

NodePtr diff(const NodePtr& n, int slot) {
    const auto zero = [] { return make_const(0.0); };
    switch (n->kind) {
        case Kind::Const: return zero();
        case Kind::Var: return make_const(n->slot == slot ? 1.0 : 0.0);
        case Kind::Neg: return make_unary(Kind::Neg, diff(n->a, slot));
        case Kind::Add: return make_binary(Kind::Add, diff(n->a, slot), diff(n->b, slot));
        case Kind::Sub: return make_binary(Kind::Sub, diff(n->a, slot), diff(n->b, slot));
        case Kind::Mul:
            return make_binary(Kind::Add, make_binary(Kind::Mul, diff(n->a, slot), n->b),
                               make_binary(Kind::Mul, n->a, diff(n->b, slot)));
        case Kind::Div: {
            NodePtr num = make_binary(Kind::Sub, make_binary(Kind::Mul, diff(n->a, slot), n->b),
                                      make_binary(Kind::Mul, n->a, diff(n->b, slot)));
            if (is_const(num, 0.0)) return zero();
            return make_binary(Kind::Div, num, make_pow(n->b, 2));
        }
        case Kind::Pow: {
            NodePtr da = diff(n->a, slot);
            if (is_const(da, 0.0)) return zero();
            return make_binary(Kind::Mul,
                               make_binary(Kind::Mul, make_const(n->exponent), make_pow(n->a, n->exponent - 1)), da);
        }
        default: break;
    }
    NodePtr da = diff(n->a, slot);
    if (is_const(da, 0.0)) return zero();
    NodePtr outer;
    switch (n->kind) {
        case Kind::Sin: outer = make_unary(Kind::Cos, n->a); break;
        case Kind::Cos: outer = make_unary(Kind::Neg, make_unary(Kind::Sin, n->a)); break;
        case Kind::Exp: outer = n; break;
        case Kind::Log: return make_binary(Kind::Div, da, n->a);
        case Kind::Sqrt: return make_binary(Kind::Div, da, make_binary(Kind::Mul, make_const(2.0), n));
        case Kind::Abs: outer = make_binary(Kind::Div, n->a, n); break;
        default: break;
    }
    if (is_const(da, 1.0)) return outer;
    // keep a leading minus outermost so that d/dt(-(2+sin t)) renders as -cos(t)
    if (outer->kind == Kind::Neg) return make_unary(Kind::Neg, make_binary(Kind::Mul, outer->a, da));
    return make_binary(Kind::Mul, outer, da);
}

NodePtr subst(const NodePtr& n, int slot, const NodePtr& with) {
    if (n->kind == Kind::Var) return n->slot == slot ? with : n;
    if (n->kind == Kind::Const) return n;
    NodePtr a = subst(n->a, slot, with);
    if (n->kind == Kind::Pow) return make_pow(a, n->exponent);
    if (n->b) return make_binary(n->kind, a, subst(n->b, slot, with));
    return make_unary(n->kind, a);
}

// ---------------------------------------------------------------- render

int precedence(const Node& n) {
    switch (n.kind) {
        case Kind::Add:
        case Kind::Sub: return 1;
        case Kind::Mul:
        case Kind::Div: return 2;
        case Kind::Neg: return 3;
        case Kind::Pow: return 4;
        case Kind::Const: return (n.value < 0 || std::signbit(n.value)) ? 0 : 5;
        default: return 5;
    }
}

std::string number_text(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, p);
    if (s == "inf" || s == "-inf" || s == "nan" || s == "-nan") return "(1/0)";
    return s;
}

void render_to(const Node& n, std::string& out);

void render_child(const Node& c, int min_prec, std::string& out) {
    if (precedence(c) < min_prec) {
        out += '(';
        render_to(c, out);
        out += ')';
    } else {
        render_to(c, out);
    }
}

void render_to(const Node& n, std::string& out) {
    switch (n.kind) {
        case Kind::Const:
            if (n.is_pi) out += "pi";
            else out += number_text(n.value);
            return;
        case Kind::Var: out += var::name(n.slot); return;
        case Kind::Neg:
            out += '-';
            render_child(*n.a, 3, out);
            return;
        case Kind::Add:
        case Kind::Sub:
            render_child(*n.a, 1, out);
            out += n.kind == Kind::Add ? "+" : "-";
            render_child(*n.b, 2, out);
            return;
        case Kind::Mul:
        case Kind::Div:
            render_child(*n.a, 2, out);
            out += n.kind == Kind::Mul ? "*" : "/";
            render_child(*n.b, 3, out);
            return;
        case Kind::Pow:
            render_child(*n.a, 5, out);
            out += "^";
            if (n.exponent < 0) out += "(" + std::to_string(n.exponent) + ")";
            else out += std::to_string(n.exponent);
            return;
        default: break;
    }
    static const char* names[] = {"sin", "cos", "exp", "log", "sqrt", "abs"};
    out += names[static_cast<int>(n.kind) - static_cast<int>(Kind::Sin)];
    out += '(';
    render_to(*n.a, out);
    out += ')';
}

VarMask collect_vars(const Node& n) {
    VarMask m = 0;
    if (n.kind == Kind::Var) m |= mask_of(n.slot);
    if (n.a) m |= collect_vars(*n.a);
    if (n.b) m |= collect_vars(*n.b);
    return m;
}

}  // namespace

// ---------------------------------------------------------------- bytecode

enum class Op : std::uint8_t { Const, Var, Neg, Add, Sub, Mul, Div, Pow, Sin, Cos, Exp, Log, Sqrt, Abs };

struct Instr {
    Op op;
    int arg;
    double value;
};

struct Program {
    std::vector<Instr> code;
    int max_depth = 0;
};

namespace {

void emit(const Node& n, Program& p, int depth) {
    auto push = [&](Op op, int arg, double v, int d) {
        p.code.push_back({op, arg, v});
        if (d > p.max_depth) p.max_depth = d;
    };
    switch (n.kind) {
        case Kind::Const: push(Op::Const, 0, n.value, depth + 1); return;
        case Kind::Var: push(Op::Var, n.slot, 0.0, depth + 1); return;
        case Kind::Add:
        case Kind::Sub:
        case Kind::Mul:
        case Kind::Div:
            emit(*n.a, p, depth);
            emit(*n.b, p, depth + 1);
            push(static_cast<Op>(static_cast<int>(n.kind)), 0, 0.0, depth + 1);
            return;
        case Kind::Pow:
            emit(*n.a, p, depth);
            push(Op::Pow, n.exponent, 0.0, depth + 1);
            return;
        default:
            emit(*n.a, p, depth);
            push(static_cast<Op>(static_cast<int>(n.kind)), 0, 0.0, depth + 1);
            return;
    }
}

double run(const Program& p, const double* slots, const Env* env) {
    constexpr int kInline = 32;
    double inline_stack[kInline] = {};
    std::vector<double> heap;
    double* st = inline_stack;
    if (p.max_depth > kInline) {
        heap.resize(p.max_depth);
        st = heap.data();
    }
    int sp = 0;
    for (const Instr& in : p.code) {
        switch (in.op) {
            case Op::Const: st[sp++] = in.value; break;
            case Op::Var:
                if (env && !env->has(in.arg))
                    throw Error(ErrorCode::UnboundVariable, "variable '" + var::name(in.arg) + "' is not bound");
                st[sp++] = slots[in.arg];
                break;
            case Op::Neg: st[sp - 1] = -st[sp - 1]; break;
            case Op::Add: --sp; st[sp - 1] += st[sp]; break;
            case Op::Sub: --sp; st[sp - 1] -= st[sp]; break;
            case Op::Mul: --sp; st[sp - 1] *= st[sp]; break;
            case Op::Div:
                --sp;
                if (st[sp] == 0.0) throw Error(ErrorCode::DivisionByZero, "division by zero");
                st[sp - 1] /= st[sp];
                break;
            case Op::Pow: {
                double b = st[sp - 1];
                int e = in.arg;
                if (e < 0 && b == 0.0) throw Error(ErrorCode::DivisionByZero, "zero raised to a negative power");
                double r = 1.0;
                double f = e < 0 ? 1.0 / b : b;
                for (unsigned k = static_cast<unsigned>(e < 0 ? -e : e); k; k >>= 1) {
                    if (k & 1u) r *= f;
                    f *= f;
                }
                st[sp - 1] = r;
                break;
            }
            case Op::Sin: st[sp - 1] = std::sin(st[sp - 1]); break;
            case Op::Cos: st[sp - 1] = std::cos(st[sp - 1]); break;
            case Op::Exp: st[sp - 1] = std::exp(st[sp - 1]); break;
            case Op::Log:
                if (!(st[sp - 1] > 0.0)) throw Error(ErrorCode::DomainError, "log of a nonpositive argument");
                st[sp - 1] = std::log(st[sp - 1]);
                break;
            case Op::Sqrt:
                if (!(st[sp - 1] >= 0.0)) throw Error(ErrorCode::DomainError, "sqrt of a negative argument");
                st[sp - 1] = std::sqrt(st[sp - 1]);
                break;
            case Op::Abs: st[sp - 1] = std::fabs(st[sp - 1]); break;
        }
    }
    return st[0];
}

}  // namespace

// ---------------------------------------------------------------- Expr

Expr::Expr() : Expr(make_const(0.0)) {}
Expr::Expr(double value) : Expr(make_const(value)) {}

Expr::Expr(std::shared_ptr<const Node> root) : root_(std::move(root)) {
    auto p = std::make_shared<Program>();
    emit(*root_, *p, 0);
    program_ = std::move(p);
    free_ = collect_vars(*root_);
}

Expr Expr::parse(std::string_view text, VarMask allowed) { return Expr(Parser(text, allowed).parse_all()); }

Expr Expr::variable(int slot) { return Expr(make_var(slot)); }

double Expr::eval(const Env& env) const {
    double slots[var::count];
    for (int i = 0; i < var::count; ++i) slots[i] = env.get(i);
    return run(*program_, slots, &env);
}

double Expr::eval_unchecked(const double* slots) const { return run(*program_, slots, nullptr); }

Expr Expr::derivative(int slot) const { return Expr(diff(root_, slot)); }

Expr Expr::substitute(int slot, const Expr& with) const { return Expr(subst(root_, slot, with.root_)); }

std::string Expr::render() const {
    std::string out;
    render_to(*root_, out);
    return out;
}

bool Expr::is_constant() const { return root_->kind == Kind::Const; }
double Expr::constant_value() const { return root_->value; }

Expr operator+(const Expr& a, const Expr& b) { return Expr(make_binary(Kind::Add, a.root_, b.root_)); }
Expr operator-(const Expr& a, const Expr& b) { return Expr(make_binary(Kind::Sub, a.root_, b.root_)); }
Expr operator*(const Expr& a, const Expr& b) { return Expr(make_binary(Kind::Mul, a.root_, b.root_)); }
Expr operator/(const Expr& a, const Expr& b) { return Expr(make_binary(Kind::Div, a.root_, b.root_)); }
Expr operator-(const Expr& a) { return Expr(make_unary(Kind::Neg, a.root_)); }
Expr sin(const Expr& a) { return Expr(make_unary(Kind::Sin, a.root_)); }
Expr cos(const Expr& a) { return Expr(make_unary(Kind::Cos, a.root_)); }

}  // namespace charstrip
