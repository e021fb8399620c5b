#pragma once

#include <cstdint>
#include <vector>

#include "eden/matrix.hpp"

namespace eden::num {

/// Reverse-mode gradient tape over matrix-valued primitives.
///
/// Every operation records its output as a new node; backward() replays the
/// node list in reverse, visiting each recorded op exactly once and
/// accumulating gradients into the nodes that asked for them. Forward values
/// are produced by the same eager kernels as untaped evaluation.
class Tape {
 public:
  using Id = std::int32_t;

  /// Leaf node. Parameters pass requires_grad=true, data inputs false.
  Id input(Matrix m, bool requires_grad = false);

  Id matmul(Id a, Id b);
  Id add(Id a, Id b);
  Id sub(Id a, Id b);
  Id mul(Id a, Id b);
  Id scale(Id a, double c);
  Id add_const(Id a, double c);
  Id rsub_const(double c, Id a);  // c - x
  Id sigmoid(Id a);
  Id tanh(Id a);
  Id log(Id a);
  Id clamp(Id a, double lo, double hi);
  Id concat_rows(Id a, Id b);
  Id entry(Id a, int r, int c);  // 1x1 gather
  Id sum(Id a);                  // 1x1 total

  const Matrix& value(Id id) const { return nodes_[id].val; }
  int rows(Id id) const { return nodes_[id].val.rows; }
  int cols(Id id) const { return nodes_[id].val.cols; }

  /// Accumulates d(output)/d(node) for every grad-requiring node reachable
  /// from `output`, which must be a 1x1 scalar recorded on this tape.
  void backward(Id output);

  /// Gradient of the last backward() output w.r.t. node `id`. Zero matrix of
  /// the node's shape if the node was not reached.
  const Matrix& grad(Id id) const;

  size_t node_count() const { return nodes_.size(); }
  void reserve(size_t n) { nodes_.reserve(n); }

 private:
  enum class Op : std::uint8_t {
    kInput,
    kMatmul,
    kAdd,
    kSub,
    kMul,
    kScale,
    kAddConst,
    kRsubConst,
    kSigmoid,
    kTanh,
    kLog,
    kClamp,
    kConcatRows,
    kEntry,
    kSum,
  };

  struct Node {
    Op op = Op::kInput;
    Id a = -1;
    Id b = -1;
    double c0 = 0.0;  // scalar operand / lower clamp bound / entry row
    double c1 = 0.0;  // upper clamp bound / entry col
    bool requires_grad = false;
    Matrix val;
    Matrix grad;  // allocated by backward()
  };

  Id push(Node n);
  Matrix& grad_of(Id id);
  void check(Id id) const;

  std::vector<Node> nodes_;
  bool has_grads_ = false;
};

}  // namespace eden::num
