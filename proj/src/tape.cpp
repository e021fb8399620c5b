#include "eden/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace eden::num {

void Tape::check(Id id) const {
  if (id < 0 || static_cast<size_t>(id) >= nodes_.size())
    throw std::invalid_argument("Tape: node id not on tape");
}

Tape::Id Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

Tape::Id Tape::input(Matrix m, bool requires_grad) {
  Node n;
  n.op = Op::kInput;
  n.requires_grad = requires_grad;
  n.val = std::move(m);
  return push(std::move(n));
}

Tape::Id Tape::matmul(Id a, Id b) {
  check(a);
  check(b);
  Node n;
  n.op = Op::kMatmul;
  n.a = a;
  n.b = b;
  n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;
  n.val = num::matmul(nodes_[a].val, nodes_[b].val);
  return push(std::move(n));
}

#define EDEN_BINOP(NAME, OP, KERNEL)                                         \
  Tape::Id Tape::NAME(Id a, Id b) {                                         \
    check(a);                                                               \
    check(b);                                                               \
    Node n;                                                                 \
    n.op = Op::OP;                                                          \
    n.a = a;                                                                \
    n.b = b;                                                                \
    n.requires_grad = nodes_[a].requires_grad || nodes_[b].requires_grad;   \
    n.val = num::KERNEL(nodes_[a].val, nodes_[b].val);                      \
    return push(std::move(n));                                              \
  }

EDEN_BINOP(add, kAdd, add)
EDEN_BINOP(sub, kSub, sub)
EDEN_BINOP(mul, kMul, mul)
EDEN_BINOP(concat_rows, kConcatRows, concat_rows)
#undef EDEN_BINOP

#define EDEN_UNOP(NAME, OP, VALUE_EXPR)                     \
  Tape::Id Tape::NAME {                                     \
    check(a);                                               \
    Node n;                                                 \
    n.op = Op::OP;                                          \
    n.a = a;                                                \
    n.requires_grad = nodes_[a].requires_grad;              \
    n.val = VALUE_EXPR;                                     \
    return push(std::move(n));                              \
  }

EDEN_UNOP(sigmoid(Id a), kSigmoid, num::sigmoid(nodes_[a].val))
EDEN_UNOP(tanh(Id a), kTanh, num::tanh_m(nodes_[a].val))
EDEN_UNOP(log(Id a), kLog, num::log_m(nodes_[a].val))
#undef EDEN_UNOP

Tape::Id Tape::scale(Id a, double c) {
  check(a);
  Node n;
  n.op = Op::kScale;
  n.a = a;
  n.c0 = c;
  n.requires_grad = nodes_[a].requires_grad;
  n.val = num::scale(nodes_[a].val, c);
  return push(std::move(n));
}

Tape::Id Tape::add_const(Id a, double c) {
  check(a);
  Node n;
  n.op = Op::kAddConst;
  n.a = a;
  n.c0 = c;
  n.requires_grad = nodes_[a].requires_grad;
  n.val = num::add_const(nodes_[a].val, c);
  return push(std::move(n));
}

Tape::Id Tape::rsub_const(double c, Id a) {
  check(a);
  Node n;
  n.op = Op::kRsubConst;
  n.a = a;
  n.c0 = c;
  n.requires_grad = nodes_[a].requires_grad;
  n.val = num::rsub_const(c, nodes_[a].val);
  return push(std::move(n));
}

Tape::Id Tape::clamp(Id a, double lo, double hi) {
  check(a);
  Node n;
  n.op = Op::kClamp;
  n.a = a;
  n.c0 = lo;
  n.c1 = hi;
  n.requires_grad = nodes_[a].requires_grad;
  n.val = num::clamp(nodes_[a].val, lo, hi);
  return push(std::move(n));
}

Tape::Id Tape::entry(Id a, int r, int c) {
  check(a);
  const Matrix& m = nodes_[a].val;
  if (r < 0 || r >= m.rows || c < 0 || c >= m.cols)
    throw std::invalid_argument("Tape::entry: index out of range");
  Node n;
  n.op = Op::kEntry;
  n.a = a;
  n.c0 = r;
  n.c1 = c;
  n.requires_grad = nodes_[a].requires_grad;
  n.val = Matrix::of(1, 1, {m(r, c)});
  return push(std::move(n));
}

Tape::Id Tape::sum(Id a) {
  check(a);
  Node n;
  n.op = Op::kSum;
  n.a = a;
  n.requires_grad = nodes_[a].requires_grad;
  n.val = Matrix::of(1, 1, {num::sum(nodes_[a].val)});
  return push(std::move(n));
}

Matrix& Tape::grad_of(Id id) {
  Node& n = nodes_[id];
  if (n.grad.rows != n.val.rows || n.grad.cols != n.val.cols)
    n.grad = Matrix::zeros(n.val.rows, n.val.cols);
  return n.grad;
}

const Matrix& Tape::grad(Id id) const {
  check(id);
  const Node& n = nodes_[id];
  if (n.grad.rows != n.val.rows || n.grad.cols != n.val.cols) {
    // not reached by backward(); expose a zero gradient of matching shape
    const_cast<Node&>(n).grad = Matrix::zeros(n.val.rows, n.val.cols);
  }
  return n.grad;
}

void Tape::backward(Id output) {
  check(output);
  if (nodes_[output].val.rows != 1 || nodes_[output].val.cols != 1)
    throw std::invalid_argument("Tape::backward: output is not a scalar");
  if (has_grads_) {
    for (auto& n : nodes_) n.grad = Matrix();
  }
  has_grads_ = true;
  grad_of(output).v[0] = 1.0;

  for (Id id = output; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad) continue;
    if (n.grad.v.empty()) continue;  // not reachable from output
    const Matrix& g = n.grad;
    switch (n.op) {
      case Op::kInput:
        break;
      case Op::kMatmul: {
        const Matrix& a = nodes_[n.a].val;
        const Matrix& b = nodes_[n.b].val;
        if (nodes_[n.a].requires_grad) {
          Matrix& da = grad_of(n.a);
          // da += g * b^T
          for (int i = 0; i < a.rows; ++i)
            for (int j = 0; j < b.cols; ++j) {
              const double gij = g(i, j);
              if (gij == 0.0) continue;
              for (int k = 0; k < a.cols; ++k) da(i, k) += gij * b(k, j);
            }
        }
        if (nodes_[n.b].requires_grad) {
          Matrix& db = grad_of(n.b);
          // db += a^T * g
          for (int i = 0; i < a.rows; ++i)
            for (int k = 0; k < a.cols; ++k) {
              const double aik = a(i, k);
              if (aik == 0.0) continue;
              for (int j = 0; j < b.cols; ++j) db(k, j) += aik * g(i, j);
            }
        }
        break;
      }
      case Op::kAdd: {
        if (nodes_[n.a].requires_grad) {
          Matrix& da = grad_of(n.a);
          for (size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i];
        }
        if (nodes_[n.b].requires_grad) {
          Matrix& db = grad_of(n.b);
          for (size_t i = 0; i < g.v.size(); ++i) db.v[i] += g.v[i];
        }
        break;
      }
      case Op::kSub: {
        if (nodes_[n.a].requires_grad) {
          Matrix& da = grad_of(n.a);
          for (size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i];
        }
        if (nodes_[n.b].requires_grad) {
          Matrix& db = grad_of(n.b);
          for (size_t i = 0; i < g.v.size(); ++i) db.v[i] -= g.v[i];
        }
        break;
      }
      case Op::kMul: {
        const Matrix& a = nodes_[n.a].val;
        const Matrix& b = nodes_[n.b].val;
        if (nodes_[n.a].requires_grad) {
          Matrix& da = grad_of(n.a);
          for (size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i] * b.v[i];
        }
        if (nodes_[n.b].requires_grad) {
          Matrix& db = grad_of(n.b);
          for (size_t i = 0; i < g.v.size(); ++i) db.v[i] += g.v[i] * a.v[i];
        }
        break;
      }
      case Op::kScale: {
        Matrix& da = grad_of(n.a);
        for (size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i] * n.c0;
        break;
      }
      case Op::kAddConst: {
        Matrix& da = grad_of(n.a);
        for (size_t i = 0; i < g.v.size(); ++i) da.v[i] += g.v[i];
        break;
      }
      case Op::kRsubConst: {
        Matrix& da = grad_of(n.a);
        for (size_t i = 0; i < g.v.size(); ++i) da.v[i] -= g.v[i];
        break;
      }
      case Op::kSigmoid: {
        Matrix& da = grad_of(n.a);
        for (size_t i = 0; i < g.v.size(); ++i) {
          const double s = n.val.v[i];
          da.v[i] += g.v[i] * s * (1.0 - s);
        }
        break;
      }
      case Op::kTanh: {
        Matrix& da = grad_of(n.a);
        for (size_t i = 0; i < g.v.size(); ++i) {
          const double t = n.val.v[i];
          da.v[i] += g.v[i] * (1.0 - t * t);
        }
        break;
      }
      case Op::kLog: {
        const Matrix& a = nodes_[n.a].val;
        Matrix& da = grad_of(n.a);
        for (size_t i = 0; i < g.v.size(); ++i) {
          const double x = a.v[i] < kLogFloor ? kLogFloor : a.v[i];
          da.v[i] += g.v[i] / x;
        }
        break;
      }
      case Op::kClamp: {
        const Matrix& a = nodes_[n.a].val;
        Matrix& da = grad_of(n.a);
        for (size_t i = 0; i < g.v.size(); ++i)
          if (a.v[i] > n.c0 && a.v[i] < n.c1) da.v[i] += g.v[i];
        break;
      }
      case Op::kConcatRows: {
        const size_t na = nodes_[n.a].val.size();
        if (nodes_[n.a].requires_grad) {
          Matrix& da = grad_of(n.a);
          for (size_t i = 0; i < na; ++i) da.v[i] += g.v[i];
        }
        if (nodes_[n.b].requires_grad) {
          Matrix& db = grad_of(n.b);
          for (size_t i = 0; i < db.v.size(); ++i) db.v[i] += g.v[na + i];
        }
        break;
      }
      case Op::kEntry: {
        Matrix& da = grad_of(n.a);
        da(static_cast<int>(n.c0), static_cast<int>(n.c1)) += g.v[0];
        break;
      }
      case Op::kSum: {
        Matrix& da = grad_of(n.a);
        for (auto& x : da.v) x += g.v[0];
        break;
      }
    }
  }
}

}  // namespace eden::num
