#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mvkt/errors.hpp"

namespace mvkt {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

// Dense row-major array of doubles. Rank 0 is a scalar, rank 2 a matrix;
// column vectors are n x 1 matrices.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value);
  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor identity(std::size_t n);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty() && shape_.empty(); }

  // Matrix views; throw DimensionError when the tensor is not rank 2.
  std::size_t rows() const;
  std::size_t cols() const;

  double& operator()(std::size_t r, std::size_t c) { return values_[r * shape_[1] + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * shape_[1] + c]; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  // Value of a one-element tensor.
  double item() const;

  bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }
  bool all_finite() const;

  Tensor& operator+=(const Tensor& other);
  void fill(double value);

 private:
  Shape shape_;
  std::vector<double> values_;
};

// Row-major boolean matrix; used for attention masks and graph edges.
class BoolMatrix {
 public:
  BoolMatrix() = default;
  BoolMatrix(std::size_t rows, std::size_t cols, bool fill = false)
      : rows_(rows), cols_(cols), bits_(rows * cols, fill ? 1 : 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool operator()(std::size_t r, std::size_t c) const { return bits_[r * cols_ + c] != 0; }
  void set(std::size_t r, std::size_t c, bool v) { bits_[r * cols_ + c] = v ? 1 : 0; }
  std::size_t count() const;
  bool operator==(const BoolMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Dense kernels shared by the tape and by test oracles. Row blocks are split
// across at most MVKT_THREADS workers; each output element is summed in the
// same order regardless of the thread count.
namespace kernels {
Tensor matmul(const Tensor& a, const Tensor& b);     // a * b
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // a * b^T
Tensor matmul_tn(const Tensor& a, const Tensor& b);  // a^T * b
Tensor transpose(const Tensor& a);
std::size_t thread_cap();
}  // namespace kernels

class Tape;

// Handle to a node on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool tracked() const;
};

// Records operations in execution order. Node ids increase monotonically, so
// every input id precedes its output id and a reverse sweep is a valid
// topological order for backpropagation.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape& tape, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var variable(Tensor value);

  // Adds a derived node. It is tracked iff any input is tracked; the backward
  // rule is kept only for tracked nodes.
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and propagates to every reachable tracked node.
  // Gradients from earlier backward calls are cleared first.
  void backward(Var loss);

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  bool tracked(std::size_t id) const { return nodes_[id].tracked; }
  bool has_grad(Var v) const;
  // Gradient of the last backward pass; throws if the node has none.
  const Tensor& grad(Var v) const;

  // Used by backward rules.
  const Tensor& grad_of(std::size_t id) const { return nodes_[id].grad; }
  void accumulate(std::size_t id, const Tensor& g);
  const std::vector<std::size_t>& inputs_of(std::size_t id) const { return nodes_[id].inputs; }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool tracked = false;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

// Maps parameter tensors (owned elsewhere) onto tape nodes. Each parameter is
// bound at most once per tape; untracked bindings become constants.
class ParamBinding {
 public:
  explicit ParamBinding(Tape& tape, bool track = true) : tape_(&tape), track_(track) {}

  Var operator()(const Tensor& param);
  Tape& tape() const { return *tape_; }
  bool tracking() const { return track_; }

  // Gradient for `param` after tape.backward(); zeros when the loss does not
  // depend on it.
  Tensor gradient(const Tensor& param) const;

 private:
  Tape* tape_;
  bool track_;
  std::unordered_map<const Tensor*, Var> vars_;
};

// Differentiable operations. All inputs must live on the same tape.
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
// a (n x k) + bias (1 x k), broadcast over rows.
Var add_row(Var a, Var bias);
// col (n x 1) and row (1 x m) -> n x m with out(i,j) = col(i) + row(j).
Var outer_add(Var col, Var row);
Var leaky_relu(Var a, double slope);
Var elu(Var a, double alpha = 1.0);
Var sigmoid(Var a);
// Softmax of each row over the unmasked entries; masked entries are exactly 0.
Var row_softmax(Var a, const BoolMatrix* mask = nullptr);
// log(sum(exp(row))) over unmasked entries -> n x 1.
Var row_logsumexp(Var a, const BoolMatrix* mask = nullptr);
Var row_l2_normalize(Var a);
// Main diagonal of a square matrix -> n x 1.
Var diagonal(Var a);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var concat_cols(const std::vector<Var>& parts);
Var select_rows(Var a, std::span<const std::size_t> rows);
Var sum(Var a);
Var mean(Var a);
// Sum of absolute differences; subgradient 0 at ties.
Var l1_distance(Var a, Var b);
// Per-row L1 distance -> n x 1; subgradient 0 at ties.
Var row_l1_distance(Var a, Var b);
// Mean over rows of -log softmax(logits)[label].
Var cross_entropy_logits(Var logits, std::span<const int> labels);
// Constant copy; blocks gradient flow.
Var detach(Var a);

}  // namespace mvkt
