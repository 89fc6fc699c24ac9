#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <vector>

namespace sforge {

/// Reverse-mode differentiation over a scalar operation record.
///
/// The tape stores one node per elementary operation of an unrolled
/// computation. Each node keeps its primal value, its parents and the local
/// partials, so a single backward sweep yields gradients with respect to all
/// inputs. Nodes also keep their opcode, which lets `replay_matches` rerun
/// the forward pass and confirm it reproduces the recorded primal values
/// bit-for-bit.

enum class TapeOp : std::uint8_t {
    Input, Const,
    Add, Sub, Mul, Div, Neg,
    AddC, RSubC, MulC, RDivC,   // one operand is a compile-time constant (aux)
    Exp, Log, Sqrt, Sin, Cos, Tanh,
};

struct TapeNode {
    double val;
    double d1, d2;      // partials w.r.t. parents
    std::int32_t p1, p2;
    TapeOp op;
    double aux;         // constant operand for *C ops
};

class Tape;

struct Var {
    Tape* tape = nullptr;
    std::int32_t idx = -1;
    double v = 0.0;
};

inline double primal(double x) { return x; }
inline double primal(const Var& x) { return x.v; }

class Tape {
public:
    void clear() { nodes_.clear(); }
    std::size_t size() const { return nodes_.size(); }

    Var input(double v) {
        return wrap(emit({v, 0, 0, -1, -1, TapeOp::Input, 0}), v);
    }
    Var constant(double v) {
        return wrap(emit({v, 0, 0, -1, -1, TapeOp::Const, 0}), v);
    }

    // The caller's `val` is advisory: the node value is recomputed through
    // eval_node, the same path replay uses, so replay_matches cannot be
    // broken by call sites whose math was constant-folded at compile time
    // (folded libm results can differ from the runtime library by 1 ulp).
    Var binary(TapeOp op, const Var& a, const Var& b, double val, double d1, double d2) {
        (void)val;
        std::int32_t idx = emit({0, d1, d2, a.idx, b.idx, op, 0});
        nodes_[static_cast<std::size_t>(idx)].val = eval_node(nodes_[static_cast<std::size_t>(idx)]);
        return wrap(idx, nodes_[static_cast<std::size_t>(idx)].val);
    }
    Var unary(TapeOp op, const Var& a, double val, double d1, double aux = 0.0) {
        (void)val;
        std::int32_t idx = emit({0, d1, 0, a.idx, -1, op, aux});
        nodes_[static_cast<std::size_t>(idx)].val = eval_node(nodes_[static_cast<std::size_t>(idx)]);
        return wrap(idx, nodes_[static_cast<std::size_t>(idx)].val);
    }

    /// Adjoints of every node, seeded at `out`. Inputs that never feed the
    /// output get an adjoint of exactly 0.
    std::vector<double> backward(const Var& out) const {
        std::vector<double> adj(nodes_.size(), 0.0);
        adj[static_cast<std::size_t>(out.idx)] = 1.0;
        for (std::size_t k = nodes_.size(); k-- > 0;) {
            const TapeNode& n = nodes_[k];
            double a = adj[k];
            if (a == 0.0) continue;
            if (n.p1 >= 0) adj[static_cast<std::size_t>(n.p1)] += n.d1 * a;
            if (n.p2 >= 0) adj[static_cast<std::size_t>(n.p2)] += n.d2 * a;
        }
        return adj;
    }

    /// Recompute every node from its parents and compare bit-for-bit.
    bool replay_matches() const {
        for (std::size_t k = 0; k < nodes_.size(); ++k) {
            double r = eval_node(nodes_[k]);
            if (std::memcmp(&r, &nodes_[k].val, sizeof r) != 0) return false;
        }
        return true;
    }

private:
    std::vector<TapeNode> nodes_;

#if defined(__GNUC__)
    __attribute__((noinline))
#endif
    double eval_node(const TapeNode& n) const {
        // never inlined: both recording and replay must go through the
        // exact same code, not a copy the compiler may constant-fold
        double a = n.p1 >= 0 ? nodes_[static_cast<std::size_t>(n.p1)].val : 0.0;
        double b = n.p2 >= 0 ? nodes_[static_cast<std::size_t>(n.p2)].val : 0.0;
        switch (n.op) {
            case TapeOp::Add:   return a + b;
            case TapeOp::Sub:   return a - b;
            case TapeOp::Mul:   return a * b;
            case TapeOp::Div:   return a / b;
            case TapeOp::Neg:   return -a;
            case TapeOp::AddC:  return a + n.aux;
            case TapeOp::RSubC: return n.aux - a;
            case TapeOp::MulC:  return a * n.aux;
            case TapeOp::RDivC: return n.aux / a;
            case TapeOp::Exp:   return std::exp(a);
            case TapeOp::Log:   return std::log(a);
            case TapeOp::Sqrt:  return std::sqrt(a);
            case TapeOp::Sin:   return std::sin(a);
            case TapeOp::Cos:   return std::cos(a);
            case TapeOp::Tanh:  return std::tanh(a);
            case TapeOp::Input:
            case TapeOp::Const:
            default:            return n.val;
        }
    }

    std::int32_t emit(TapeNode n) {
        nodes_.push_back(n);
        return static_cast<std::int32_t>(nodes_.size() - 1);
    }
    Var wrap(std::int32_t idx, double v) { return Var{this, idx, v}; }
};

// --- arithmetic -----------------------------------------------------------

inline Var operator+(const Var& a, const Var& b) {
    return a.tape->binary(TapeOp::Add, a, b, a.v + b.v, 1.0, 1.0);
}
inline Var operator-(const Var& a, const Var& b) {
    return a.tape->binary(TapeOp::Sub, a, b, a.v - b.v, 1.0, -1.0);
}
inline Var operator*(const Var& a, const Var& b) {
    return a.tape->binary(TapeOp::Mul, a, b, a.v * b.v, b.v, a.v);
}
inline Var operator/(const Var& a, const Var& b) {
    double r = a.v / b.v;
    return a.tape->binary(TapeOp::Div, a, b, r, 1.0 / b.v, -r / b.v);
}
inline Var operator-(const Var& a) {
    return a.tape->unary(TapeOp::Neg, a, -a.v, -1.0);
}

inline Var operator+(const Var& a, double c) {
    return a.tape->unary(TapeOp::AddC, a, a.v + c, 1.0, c);
}
inline Var operator+(double c, const Var& a) { return a + c; }
inline Var operator-(const Var& a, double c) { return a + (-c); }
inline Var operator-(double c, const Var& a) {
    return a.tape->unary(TapeOp::RSubC, a, c - a.v, -1.0, c);
}
inline Var operator*(const Var& a, double c) {
    return a.tape->unary(TapeOp::MulC, a, a.v * c, c, c);
}
inline Var operator*(double c, const Var& a) { return a * c; }
inline Var operator/(const Var& a, double c) { return a * (1.0 / c); }
inline Var operator/(double c, const Var& a) {
    double r = c / a.v;
    return a.tape->unary(TapeOp::RDivC, a, r, -r / a.v, c);
}

inline Var& operator+=(Var& a, const Var& b) { a = a + b; return a; }
inline Var& operator-=(Var& a, const Var& b) { a = a - b; return a; }
inline Var& operator*=(Var& a, const Var& b) { a = a * b; return a; }

inline Var exp(const Var& a) {
    double r = std::exp(a.v);
    return a.tape->unary(TapeOp::Exp, a, r, r);
}
inline Var log(const Var& a) {
    return a.tape->unary(TapeOp::Log, a, std::log(a.v), 1.0 / a.v);
}
inline Var sqrt(const Var& a) {
    double r = std::sqrt(a.v);
    return a.tape->unary(TapeOp::Sqrt, a, r, 0.5 / r);
}
inline Var sin(const Var& a) {
    return a.tape->unary(TapeOp::Sin, a, std::sin(a.v), std::cos(a.v));
}
inline Var cos(const Var& a) {
    return a.tape->unary(TapeOp::Cos, a, std::cos(a.v), -std::sin(a.v));
}
inline Var tanh(const Var& a) {
    double r = std::tanh(a.v);
    return a.tape->unary(TapeOp::Tanh, a, r, 1.0 - r * r);
}

} // namespace sforge
