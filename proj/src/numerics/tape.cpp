#include "dbaug/numerics/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dbaug/error.hpp"

namespace dbaug::nx {

const Tensor& Var::value() const { return tape_->value(id_); }

namespace {

void require_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) {
    throw NumericError(std::string(op) + ": non-finite value in tensor of shape " +
                       shape_str(t.shape()));
  }
}

[[noreturn]] void shape_fail(const char* op, const Shape& a, const Shape& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                   shape_str(b));
}

void require_rank2(const char* op, const Tensor& t) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected rank-2 operand, got " + shape_str(t.shape()));
  }
}

Tape& same_tape(const char* op, Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) {
    throw Error(std::string(op) + ": operands are not on the same tape");
  }
  return *a.tape();
}

void softmax_row(const double* in, double* out, std::size_t n) {
  const double mx = *std::max_element(in, in + n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    out[j] = std::exp(in[j] - mx);
    total += out[j];
  }
  for (std::size_t j = 0; j < n; ++j) out[j] /= total;
}

void log_softmax_row(const double* in, double* out, std::size_t n) {
  const double mx = *std::max_element(in, in + n);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) total += std::exp(in[j] - mx);
  const double lse = mx + std::log(total);
  for (std::size_t j = 0; j < n; ++j) out[j] = in[j] - lse;
}

}  // namespace

// ---------------------------------------------------------------------------
// Tape

Var Tape::variable(Tensor value) {
  require_finite(value, "variable");
  nodes_.push_back(Node{std::move(value), Tensor{}, {}, nullptr, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  require_finite(value, "constant");
  nodes_.push_back(Node{std::move(value), Tensor{}, {}, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::vector<std::size_t> inputs, BackwardFn backward) {
  bool wants = false;
  for (auto id : inputs) wants = wants || nodes_[id].wants_grad;
  if (!wants) backward = nullptr;
  nodes_.push_back(Node{std::move(value), Tensor{}, std::move(inputs), std::move(backward), wants});
  return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var output) {
  if (output.tape() != this) throw Error("backward: output belongs to another tape");
  if (output.value().size() != 1) {
    throw ShapeError("backward: output must be a single element, got shape " +
                     shape_str(output.shape()));
  }
  for (auto& n : nodes_) n.grad = Tensor{};
  nodes_[output.id()].grad = Tensor(output.shape(), 1.0);
  for (std::size_t i = output.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.empty()) continue;
    n.backward(*this, n.grad);
  }
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id());
  if (n.grad.empty()) return Tensor(n.value.shape(), 0.0);
  return n.grad;
}

Tensor& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = Tensor(n.value.shape(), 0.0);
  return n.grad;
}

void Tape::accumulate(std::size_t id, const Tensor& delta) {
  if (!nodes_[id].wants_grad) return;
  Tensor& g = grad_buffer(id);
  auto dst = g.values();
  auto src = delta.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

// ---------------------------------------------------------------------------
// Primitives

Var matmul(Var a, Var b) {
  Tape& tape = same_tape("matmul", a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require_rank2("matmul", A);
  require_rank2("matmul", B);
  const std::size_t m = A.shape()[0], k = A.shape()[1], n = B.shape()[1];
  if (B.shape()[0] != k) shape_fail("matmul", A.shape(), B.shape());

  Tensor C({m, n}, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = &C.at(i, 0);
    for (std::size_t p = 0; p < k; ++p) {
      const double av = A.at(i, p);
      if (av == 0.0) continue;
      const double* brow = &B.at(p, 0);
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  require_finite(C, "matmul");

  const auto ia = a.id(), ib = b.id();
  return tape.record(std::move(C), {ia, ib}, [ia, ib, m, k, n](Tape& t, const Tensor& G) {
    const Tensor& A = t.value(ia);
    const Tensor& B = t.value(ib);
    if (t.wants_grad(ia)) {
      Tensor& dA = t.grad_buffer(ia);
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = &G.at(i, 0);
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = &B.at(p, 0);
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          dA.at(i, p) += acc;
        }
      }
    }
    if (t.wants_grad(ib)) {
      Tensor& dB = t.grad_buffer(ib);
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = &G.at(i, 0);
        for (std::size_t p = 0; p < k; ++p) {
          const double av = A.at(i, p);
          if (av == 0.0) continue;
          double* drow = &dB.at(p, 0);
          for (std::size_t j = 0; j < n; ++j) drow[j] += av * grow[j];
        }
      }
    }
  });
}

Var transpose(Var a) {
  Tape& tape = *a.tape();
  const Tensor& A = a.value();
  require_rank2("transpose", A);
  const std::size_t m = A.shape()[0], n = A.shape()[1];
  Tensor T({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) T.at(j, i) = A.at(i, j);
  const auto ia = a.id();
  return tape.record(std::move(T), {ia}, [ia, m, n](Tape& t, const Tensor& G) {
    Tensor& dA = t.grad_buffer(ia);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) dA.at(i, j) += G.at(j, i);
  });
}

namespace {

template <class Fwd, class BwdA, class BwdB>
Var binary_elementwise(const char* op, Var a, Var b, Fwd fwd, BwdA bwd_a, BwdB bwd_b) {
  Tape& tape = same_tape(op, a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.shape() != B.shape()) shape_fail(op, A.shape(), B.shape());
  Tensor C(A.shape());
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = fwd(A[i], B[i]);
  require_finite(C, op);
  const auto ia = a.id(), ib = b.id();
  return tape.record(std::move(C), {ia, ib}, [ia, ib, bwd_a, bwd_b](Tape& t, const Tensor& G) {
    const Tensor& A = t.value(ia);
    const Tensor& B = t.value(ib);
    if (t.wants_grad(ia)) {
      Tensor& dA = t.grad_buffer(ia);
      for (std::size_t i = 0; i < G.size(); ++i) dA[i] += bwd_a(G[i], A[i], B[i]);
    }
    if (t.wants_grad(ib)) {
      Tensor& dB = t.grad_buffer(ib);
      for (std::size_t i = 0; i < G.size(); ++i) dB[i] += bwd_b(G[i], A[i], B[i]);
    }
  });
}

}  // namespace

Var add(Var a, Var b) {
  return binary_elementwise(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double g, double, double) { return g; }, [](double g, double, double) { return g; });
}

Var sub(Var a, Var b) {
  return binary_elementwise(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double g, double, double) { return g; }, [](double g, double, double) { return -g; });
}

Var mul(Var a, Var b) {
  return binary_elementwise(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double g, double, double y) { return g * y; },
      [](double g, double x, double) { return g * x; });
}

Var scale(Var a, double c) {
  Tape& tape = *a.tape();
  Tensor C = a.value();
  for (auto& v : C.values()) v *= c;
  require_finite(C, "scale");
  const auto ia = a.id();
  return tape.record(std::move(C), {ia}, [ia, c](Tape& t, const Tensor& G) {
    Tensor& dA = t.grad_buffer(ia);
    for (std::size_t i = 0; i < G.size(); ++i) dA[i] += c * G[i];
  });
}

Var add_row(Var a, Var bias) {
  Tape& tape = same_tape("add_row", a, bias);
  const Tensor& A = a.value();
  const Tensor& B = bias.value();
  require_rank2("add_row", A);
  const std::size_t m = A.shape()[0], n = A.shape()[1];
  if (B.size() != n || B.rows() != 1) shape_fail("add_row", A.shape(), B.shape());
  Tensor C = A;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) C.at(i, j) += B[j];
  require_finite(C, "add_row");
  const auto ia = a.id(), ib = bias.id();
  return tape.record(std::move(C), {ia, ib}, [ia, ib, m, n](Tape& t, const Tensor& G) {
    if (t.wants_grad(ia)) t.accumulate(ia, G);
    if (t.wants_grad(ib)) {
      Tensor& dB = t.grad_buffer(ib);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) dB[j] += G.at(i, j);
    }
  });
}

Var tanh(Var a) {
  Tape& tape = *a.tape();
  Tensor Y = a.value();
  for (auto& v : Y.values()) v = std::tanh(v);
  require_finite(Y, "tanh");
  const auto ia = a.id();
  const auto out_id = tape.size();
  return tape.record(std::move(Y), {ia}, [ia, out_id](Tape& t, const Tensor& G) {
    const Tensor& Y = t.value(out_id);
    Tensor& dA = t.grad_buffer(ia);
    for (std::size_t i = 0; i < G.size(); ++i) dA[i] += G[i] * (1.0 - Y[i] * Y[i]);
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  if (axis > 1) throw ShapeError("concat: axis must be 0 or 1");
  Tape& tape = *parts.front().tape();
  const Tensor& first = parts.front().value();
  require_rank2("concat", first);
  std::size_t rows = first.shape()[0], cols = first.shape()[1];
  std::vector<std::size_t> ids;
  std::vector<std::size_t> extents;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& T = parts[p].value();
    require_rank2("concat", T);
    if (parts[p].tape() != &tape) throw Error("concat: operands are not on the same tape");
    const std::size_t other = axis == 0 ? T.shape()[1] : T.shape()[0];
    const std::size_t ref = axis == 0 ? cols : rows;
    if (other != ref) shape_fail("concat", first.shape(), T.shape());
    ids.push_back(parts[p].id());
    extents.push_back(T.shape()[axis]);
  }
  std::size_t total = 0;
  for (auto e : extents) total += e;
  if (axis == 0) rows = total; else cols = total;

  Tensor C({rows, cols});
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& T = parts[p].value();
    for (std::size_t i = 0; i < T.shape()[0]; ++i)
      for (std::size_t j = 0; j < T.shape()[1]; ++j) {
        if (axis == 0) C.at(offset + i, j) = T.at(i, j);
        else C.at(i, offset + j) = T.at(i, j);
      }
    offset += extents[p];
  }
  auto inputs = ids;
  return tape.record(std::move(C), std::move(inputs), [ids, extents, axis](Tape& t, const Tensor& G) {
    std::size_t offset = 0;
    for (std::size_t p = 0; p < ids.size(); ++p) {
      if (t.wants_grad(ids[p])) {
        Tensor& dP = t.grad_buffer(ids[p]);
        const std::size_t r = dP.shape()[0], c = dP.shape()[1];
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < c; ++j)
            dP.at(i, j) += axis == 0 ? G.at(offset + i, j) : G.at(i, offset + j);
      }
      offset += extents[p];
    }
  });
}

Var mean(Var a, std::size_t axis) {
  Tape& tape = *a.tape();
  const Tensor& A = a.value();
  require_rank2("mean", A);
  if (axis > 1) throw ShapeError("mean: axis must be 0 or 1");
  const std::size_t m = A.shape()[0], n = A.shape()[1];
  Tensor M = axis == 0 ? Tensor({1, n}, 0.0) : Tensor({m, 1}, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) M[axis == 0 ? j : i] += A.at(i, j);
  const double denom = static_cast<double>(axis == 0 ? m : n);
  for (auto& v : M.values()) v /= denom;
  const auto ia = a.id();
  return tape.record(std::move(M), {ia}, [ia, axis, m, n, denom](Tape& t, const Tensor& G) {
    Tensor& dA = t.grad_buffer(ia);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) dA.at(i, j) += G[axis == 0 ? j : i] / denom;
  });
}

Var sum(Var a) {
  Tape& tape = *a.tape();
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  Tensor S({1}, total);
  require_finite(S, "sum");
  const auto ia = a.id();
  return tape.record(std::move(S), {ia}, [ia](Tape& t, const Tensor& G) {
    Tensor& dA = t.grad_buffer(ia);
    for (auto& v : dA.values()) v += G[0];
  });
}

Var embedding(Var table, std::span<const std::size_t> ids) {
  Tape& tape = *table.tape();
  const Tensor& W = table.value();
  require_rank2("embedding", W);
  if (ids.empty()) throw ShapeError("embedding: empty id list");
  const std::size_t vocab = W.shape()[0], d = W.shape()[1];
  Tensor out({ids.size(), d});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= vocab) {
      throw ValueError("embedding: id " + std::to_string(ids[r]) + " out of range for table " +
                       shape_str(W.shape()));
    }
    std::copy_n(&W.at(ids[r], 0), d, &out.at(r, 0));
  }
  const auto it = table.id();
  std::vector<std::size_t> rows(ids.begin(), ids.end());
  return tape.record(std::move(out), {it}, [it, rows = std::move(rows), d](Tape& t, const Tensor& G) {
    Tensor& dW = t.grad_buffer(it);
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t j = 0; j < d; ++j) dW.at(rows[r], j) += G.at(r, j);
  });
}

Var softmax(Var a) {
  Tape& tape = *a.tape();
  const Tensor& A = a.value();
  Tensor Y(A.shape());
  const std::size_t m = A.rows(), n = A.cols();
  for (std::size_t i = 0; i < m; ++i) softmax_row(&A[i * n], &Y[i * n], n);
  require_finite(Y, "softmax");
  const auto ia = a.id();
  const auto out_id = tape.size();
  return tape.record(std::move(Y), {ia}, [ia, out_id, m, n](Tape& t, const Tensor& G) {
    const Tensor& Y = t.value(out_id);
    Tensor& dA = t.grad_buffer(ia);
    for (std::size_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += G[i * n + j] * Y[i * n + j];
      for (std::size_t j = 0; j < n; ++j) dA[i * n + j] += Y[i * n + j] * (G[i * n + j] - dot);
    }
  });
}

Var log_softmax(Var a) {
  Tape& tape = *a.tape();
  const Tensor& A = a.value();
  Tensor Y(A.shape());
  const std::size_t m = A.rows(), n = A.cols();
  for (std::size_t i = 0; i < m; ++i) log_softmax_row(&A[i * n], &Y[i * n], n);
  require_finite(Y, "log_softmax");
  const auto ia = a.id();
  const auto out_id = tape.size();
  return tape.record(std::move(Y), {ia}, [ia, out_id, m, n](Tape& t, const Tensor& G) {
    const Tensor& Y = t.value(out_id);
    Tensor& dA = t.grad_buffer(ia);
    for (std::size_t i = 0; i < m; ++i) {
      double gsum = 0.0;
      for (std::size_t j = 0; j < n; ++j) gsum += G[i * n + j];
      for (std::size_t j = 0; j < n; ++j)
        dA[i * n + j] += G[i * n + j] - std::exp(Y[i * n + j]) * gsum;
    }
  });
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw ShapeError("softmax: empty input");
  for (double v : logits) {
    if (!std::isfinite(v)) throw NumericError("softmax: non-finite input");
  }
  std::vector<double> out(logits.size());
  softmax_row(logits.data(), out.data(), logits.size());
  return out;
}

std::vector<double> log_softmax(std::span<const double> logits) {
  if (logits.empty()) throw ShapeError("log_softmax: empty input");
  for (double v : logits) {
    if (!std::isfinite(v)) throw NumericError("log_softmax: non-finite input");
  }
  std::vector<double> out(logits.size());
  log_softmax_row(logits.data(), out.data(), logits.size());
  return out;
}

}  // namespace dbaug::nx
