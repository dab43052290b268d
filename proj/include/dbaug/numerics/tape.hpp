#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "dbaug/numerics/tensor.hpp"

namespace dbaug::nx {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid while the
/// tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const { return id_; }
  Tape* tape() const { return tape_; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode recording of executed primitives. Nodes are appended in
/// execution order, so the node list is already topologically sorted.
///
/// A tape is single-threaded; independent tapes may be used concurrently.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that receives a gradient on backward().
  Var variable(Tensor value);
  /// Leaf that never receives a gradient.
  Var constant(Tensor value);

  /// Appends an op result. `backward` receives the output gradient and must
  /// route it to the inputs via accumulate().
  Var record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward);

  /// Seeds d(output)/d(output) = 1 and sweeps the tape in reverse. `output`
  /// must hold exactly one element. Gradients of earlier calls are cleared.
  void backward(Var output);

  /// Gradient of the last backward() output w.r.t. `v`. Values with no path
  /// to the output get a zero tensor of matching shape.
  Tensor grad(Var v) const;

  void accumulate(std::size_t id, const Tensor& delta);
  /// In-place access for ops whose gradient is sparse (embedding rows).
  Tensor& grad_buffer(std::size_t id);
  bool wants_grad(std::size_t id) const { return nodes_[id].wants_grad; }

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool wants_grad = false;
  };
  std::vector<Node> nodes_;
};

// Primitives. All take and return Vars on the same tape; shapes are checked
// and a ShapeError names the op and both shapes. Outputs are checked finite.

Var matmul(Var a, Var b);                 // [m,k] x [k,n] -> [m,n]
Var transpose(Var a);                     // [m,n] -> [n,m]
Var add(Var a, Var b);                    // same shape
Var sub(Var a, Var b);                    // same shape
Var mul(Var a, Var b);                    // elementwise, same shape
Var scale(Var a, double c);
Var add_row(Var a, Var bias);             // [m,n] + [n] broadcast over rows
Var tanh(Var a);
Var concat(std::span<const Var> parts, std::size_t axis);  // rank-2 inputs
Var mean(Var a, std::size_t axis);        // rank 2, keeps the reduced axis as 1
Var sum(Var a);                           // -> shape {1}
Var embedding(Var table, std::span<const std::size_t> ids);  // [V,d] -> [n,d]
Var softmax(Var a);                       // over the last axis
Var log_softmax(Var a);                   // over the last axis

// Plain (non-recording) kernels used by inference paths and oracles.
std::vector<double> softmax(std::span<const double> logits);
std::vector<double> log_softmax(std::span<const double> logits);

}  // namespace dbaug::nx
