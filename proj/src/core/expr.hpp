#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace charstrip {

/// Variable slots. V1..Vn map to slot 2+i.
namespace var {
inline constexpr int x = 0;
inline constexpr int t = 1;
inline constexpr int tau = 2;
inline constexpr int max_state = 32;
inline constexpr int count = 3 + max_state;
constexpr int V(int i) { return 2 + i; }
std::string name(int slot);
}  // namespace var

using VarMask = std::uint64_t;

constexpr VarMask mask_of(int slot) { return VarMask{1} << slot; }
inline constexpr VarMask kAllVars = (VarMask{1} << var::count) - 1;
inline constexpr VarMask kMaskXT = mask_of(var::x) | mask_of(var::t);
inline constexpr VarMask kMaskT = mask_of(var::t);
inline constexpr VarMask kMaskTTau = mask_of(var::t) | mask_of(var::tau);
VarMask state_mask(int n);

/// Variable bindings for evaluation.
class Env {
public:
    Env& set(int slot, double value) {
        values_[slot] = value;
        bound_ |= mask_of(slot);
        return *this;
    }
    double get(int slot) const { return values_[slot]; }
    bool has(int slot) const { return (bound_ >> slot) & 1u; }
    VarMask bound() const { return bound_; }

private:
    double values_[var::count] = {};
    VarMask bound_ = 0;
};

struct Node;
struct Program;

/// Immutable expression handle. Copies share the tree.
class Expr {
public:
    Expr();
    explicit Expr(double value);

    /// Throws SyntaxError (with byte offset) or UnknownIdentifier. Variables outside
    /// `allowed` count as unknown identifiers.
    static Expr parse(std::string_view text, VarMask allowed = kAllVars);
    static Expr variable(int slot);

    double eval(const Env& env) const;
    /// Evaluation on raw slot values, skipping the bound check. Callers guarantee
    /// that every free variable has a meaningful value.
    double eval_unchecked(const double* slots) const;

    Expr derivative(int slot) const;
    /// Replaces every occurrence of the variable `slot` with `with`.
    Expr substitute(int slot, const Expr& with) const;
    std::string render() const;
    VarMask free_vars() const { return free_; }
    bool depends_on(int slot) const { return (free_ >> slot) & 1u; }
    /// True when the tree is a single constant node.
    bool is_constant() const;
    double constant_value() const;

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a);
    friend Expr sin(const Expr& a);
    friend Expr cos(const Expr& a);

    const Node& node() const { return *root_; }

private:
    explicit Expr(std::shared_ptr<const Node> root);
    std::shared_ptr<const Node> root_;
    std::shared_ptr<const Program> program_;
    VarMask free_ = 0;
};

}  // namespace charstrip
