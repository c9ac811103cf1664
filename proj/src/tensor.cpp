#include "mvkt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <thread>

namespace mvkt {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

[[noreturn]] void throw_dims(const char* op, const Shape& a, const Shape& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a) + " and " +
                       shape_string(b));
}

void require_matrix(const char* op, const Tensor& t) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got shape " +
                         shape_string(t.shape()));
  }
}

}  // namespace

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  values_.assign(shape_numel(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (shape_numel(shape_) != values_.size()) {
    throw DimensionError("tensor: shape " + shape_string(shape_) + " does not hold " +
                         std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, std::vector<double>{value}); }

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, double fill) {
  return Tensor(Shape{rows, cols}, fill);
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> v;
  v.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("from_rows: ragged initializer");
    v.insert(v.end(), row.begin(), row.end());
  }
  return Tensor(Shape{r, c}, std::move(v));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t = matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

std::size_t Tensor::rows() const {
  require_matrix("rows", *this);
  return shape_[0];
}

std::size_t Tensor::cols() const {
  require_matrix("cols", *this);
  return shape_[1];
}

double Tensor::item() const {
  if (values_.size() != 1) {
    throw DimensionError("item: tensor of shape " + shape_string(shape_) + " is not a scalar");
  }
  return values_[0];
}

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (values_.size() != other.values_.size()) throw_dims("+=", shape_, other.shape_);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

void Tensor::fill(double value) { std::fill(values_.begin(), values_.end(), value); }

std::size_t BoolMatrix::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

// ---------------------------------------------------------------------------
// kernels

namespace kernels {

std::size_t thread_cap() {
  static const std::size_t cap = [] {
    std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MVKT_THREADS")) {
      long v = std::strtol(env, nullptr, 10);
      if (v >= 1) return std::min<std::size_t>(static_cast<std::size_t>(v), hw);
    }
    return hw;
  }();
  return cap;
}

namespace {

// Runs fn(row_begin, row_end) over [0, rows), split into contiguous blocks.
template <typename Fn>
void for_row_blocks(std::size_t rows, double flops, Fn&& fn) {
  std::size_t workers = thread_cap();
  if (workers <= 1 || flops < 4e6 || rows < 2 * workers) {
    fn(std::size_t{0}, rows);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t block = (rows + workers - 1) / workers;
  for (std::size_t b = block; b < rows; b += block) {
    pool.emplace_back([&fn, b, block, rows] { fn(b, std::min(rows, b + block)); });
  }
  fn(std::size_t{0}, std::min(rows, block));
  for (auto& t : pool) t.join();
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  if (a.cols() != b.rows()) throw_dims("matmul", a.shape(), b.shape());
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Tensor c = Tensor::matrix(n, m);
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  for_row_blocks(n, double(n) * k * m, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      double* crow = pc + i * m;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = pa[i * k + p];
        if (av == 0.0) continue;
        const double* brow = pb + p * m;
        for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
      }
    }
  });
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_matrix("matmul_nt", a);
  require_matrix("matmul_nt", b);
  if (a.cols() != b.cols()) throw_dims("matmul_nt", a.shape(), b.shape());
  const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
  Tensor c = Tensor::matrix(n, m);
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  for_row_blocks(n, double(n) * k * m, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const double* arow = pa + i * k;
      for (std::size_t j = 0; j < m; ++j) {
        const double* brow = pb + j * k;
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
        pc[i * m + j] = s;
      }
    }
  });
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_matrix("matmul_tn", a);
  require_matrix("matmul_tn", b);
  if (a.rows() != b.rows()) throw_dims("matmul_tn", a.shape(), b.shape());
  const std::size_t r = a.rows(), n = a.cols(), m = b.cols();
  Tensor c = Tensor::matrix(n, m);
  const double* pa = a.data();
  const double* pb = b.data();
  double* pc = c.data();
  for_row_blocks(n, double(n) * r * m, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = 0; p < r; ++p) {
      const double* brow = pb + p * m;
      for (std::size_t i = lo; i < hi; ++i) {
        const double av = pa[p * n + i];
        if (av == 0.0) continue;
        double* crow = pc + i * m;
        for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
      }
    }
  });
  return c;
}

Tensor transpose(const Tensor& a) {
  require_matrix("transpose", a);
  Tensor t = Tensor::matrix(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

}  // namespace kernels

// ---------------------------------------------------------------------------
// tape

const Tensor& Var::value() const { return tape->value(id); }
bool Var::tracked() const { return tape->tracked(id); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::variable(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, true, {}, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, BackwardFn backward) {
  Node node;
  node.value = std::move(value);
  for (const Var& v : inputs) {
    if (v.tape != this) throw DomainError("tape: operand recorded on a different tape");
    node.inputs.push_back(v.id);
    node.tracked = node.tracked || nodes_[v.id].tracked;
  }
  if (node.tracked) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

void Tape::accumulate(std::size_t id, const Tensor& g) {
  Node& node = nodes_[id];
  if (!node.tracked) return;
  if (node.grad.size() == 0) {
    node.grad = g;
  } else {
    node.grad += g;
  }
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw DomainError("backward: loss belongs to another tape");
  if (nodes_[loss.id].value.size() != 1) {
    throw DimensionError("backward: loss must be a scalar, got shape " +
                         shape_string(nodes_[loss.id].value.shape()));
  }
  for (auto& node : nodes_) node.grad = Tensor();
  if (!nodes_[loss.id].tracked) return;
  nodes_[loss.id].grad = Tensor(nodes_[loss.id].value.shape(), 1.0);
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& node = nodes_[id];
    if (node.grad.size() == 0 || !node.backward) continue;
    node.backward(*this, id);
  }
}

bool Tape::has_grad(Var v) const { return nodes_[v.id].grad.size() != 0; }

const Tensor& Tape::grad(Var v) const {
  if (!has_grad(v)) throw DomainError("grad: node " + std::to_string(v.id) + " has no gradient");
  return nodes_[v.id].grad;
}

Var ParamBinding::operator()(const Tensor& param) {
  auto it = vars_.find(&param);
  if (it != vars_.end()) return it->second;
  Var v = track_ ? tape_->variable(param) : tape_->constant(param);
  vars_.emplace(&param, v);
  return v;
}

Tensor ParamBinding::gradient(const Tensor& param) const {
  auto it = vars_.find(&param);
  if (it == vars_.end() || !tape_->has_grad(it->second)) return Tensor(param.shape(), 0.0);
  return tape_->grad(it->second);
}

// ---------------------------------------------------------------------------
// operations

namespace {

Tape& tape_of(Var a) { return *a.tape; }

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw_dims(op, a.shape(), b.shape());
}

// Applies f elementwise; df(x, y) is the derivative given input x and output y.
template <typename F, typename DF>
Var unary(Var a, F f, DF df) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return tape_of(a).record(std::move(y), {a}, [df](Tape& t, std::size_t self) {
    const std::size_t in = t.inputs_of(self)[0];
    const Tensor& xv = t.value(in);
    const Tensor& yv = t.value(self);
    const Tensor& g = t.grad_of(self);
    Tensor gx(xv.shape());
    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] = g[i] * df(xv[i], yv[i]);
    t.accumulate(in, gx);
  });
}

void check_mask(const char* op, const Tensor& a, const BoolMatrix* mask) {
  require_matrix(op, a);
  if (mask && (mask->rows() != a.rows() || mask->cols() != a.cols())) {
    throw DimensionError(std::string(op) + ": mask " + std::to_string(mask->rows()) + "x" +
                         std::to_string(mask->cols()) + " does not match " +
                         shape_string(a.shape()));
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  Tensor c = kernels::matmul(a.value(), b.value());
  return tape_of(a).record(std::move(c), {a, b}, [](Tape& t, std::size_t self) {
    const auto& in = t.inputs_of(self);
    const Tensor& g = t.grad_of(self);
    if (t.tracked(in[0])) t.accumulate(in[0], kernels::matmul_nt(g, t.value(in[1])));
    if (t.tracked(in[1])) t.accumulate(in[1], kernels::matmul_tn(t.value(in[0]), g));
  });
}

Var transpose(Var a) {
  return tape_of(a).record(kernels::transpose(a.value()), {a}, [](Tape& t, std::size_t self) {
    t.accumulate(t.inputs_of(self)[0], kernels::transpose(t.grad_of(self)));
  });
}

Var add(Var a, Var b) {
  require_same_shape("add", a.value(), b.value());
  Tensor c = a.value();
  c += b.value();
  return tape_of(a).record(std::move(c), {a, b}, [](Tape& t, std::size_t self) {
    for (auto in : t.inputs_of(self)) t.accumulate(in, t.grad_of(self));
  });
}

Var sub(Var a, Var b) {
  require_same_shape("sub", a.value(), b.value());
  Tensor c = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= bv[i];
  return tape_of(a).record(std::move(c), {a, b}, [](Tape& t, std::size_t self) {
    const auto& in = t.inputs_of(self);
    const Tensor& g = t.grad_of(self);
    t.accumulate(in[0], g);
    if (t.tracked(in[1])) {
      Tensor neg = g;
      for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -neg[i];
      t.accumulate(in[1], neg);
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape("mul", a.value(), b.value());
  Tensor c = a.value();
  const Tensor& bv = b.value();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= bv[i];
  return tape_of(a).record(std::move(c), {a, b}, [](Tape& t, std::size_t self) {
    const auto& in = t.inputs_of(self);
    const Tensor& g = t.grad_of(self);
    for (int k = 0; k < 2; ++k) {
      if (!t.tracked(in[k])) continue;
      const Tensor& other = t.value(in[1 - k]);
      Tensor gk(g.shape());
      for (std::size_t i = 0; i < g.size(); ++i) gk[i] = g[i] * other[i];
      t.accumulate(in[k], gk);
    }
  });
}

Var scale(Var a, double factor) {
  Tensor c = a.value();
  for (auto& v : c.values()) v *= factor;
  return tape_of(a).record(std::move(c), {a}, [factor](Tape& t, std::size_t self) {
    Tensor g = t.grad_of(self);
    for (auto& v : g.values()) v *= factor;
    t.accumulate(t.inputs_of(self)[0], g);
  });
}

Var add_row(Var a, Var bias) {
  const Tensor& av = a.value();
  const Tensor& bv = bias.value();
  require_matrix("add_row", av);
  require_matrix("add_row", bv);
  if (bv.rows() != 1 || bv.cols() != av.cols()) throw_dims("add_row", av.shape(), bv.shape());
  Tensor c = av;
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < c.cols(); ++j) c(i, j) += bv(0, j);
  return tape_of(a).record(std::move(c), {a, bias}, [](Tape& t, std::size_t self) {
    const auto& in = t.inputs_of(self);
    const Tensor& g = t.grad_of(self);
    t.accumulate(in[0], g);
    if (t.tracked(in[1])) {
      Tensor gb = Tensor::matrix(1, g.cols());
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
      t.accumulate(in[1], gb);
    }
  });
}

Var outer_add(Var col, Var row) {
  const Tensor& cv = col.value();
  const Tensor& rv = row.value();
  require_matrix("outer_add", cv);
  require_matrix("outer_add", rv);
  if (cv.cols() != 1 || rv.rows() != 1) throw_dims("outer_add", cv.shape(), rv.shape());
  const std::size_t n = cv.rows(), m = rv.cols();
  Tensor c = Tensor::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) c(i, j) = cv(i, 0) + rv(0, j);
  return tape_of(col).record(std::move(c), {col, row}, [](Tape& t, std::size_t self) {
    const auto& in = t.inputs_of(self);
    const Tensor& g = t.grad_of(self);
    const std::size_t n = g.rows(), m = g.cols();
    if (t.tracked(in[0])) {
      Tensor gc = Tensor::matrix(n, 1);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) gc(i, 0) += g(i, j);
      t.accumulate(in[0], gc);
    }
    if (t.tracked(in[1])) {
      Tensor gr = Tensor::matrix(1, m);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < m; ++j) gr(0, j) += g(i, j);
      t.accumulate(in[1], gr);
    }
  });
}

Var leaky_relu(Var a, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) throw DomainError("leaky_relu: slope must lie in (0, 1)");
  return unary(
      a, [slope](double x) { return x >= 0.0 ? x : slope * x; },
      [slope](double x, double) { return x >= 0.0 ? 1.0 : slope; });
}

Var elu(Var a, double alpha) {
  return unary(
      a, [alpha](double x) { return x >= 0.0 ? x : alpha * std::expm1(x); },
      [alpha](double x, double y) { return x >= 0.0 ? 1.0 : y + alpha; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

namespace {

// Like std::max but lets NaN through so it reaches the loss checks.
double nan_max(double a, double b) { return std::isnan(a) || std::isnan(b) ? std::nan("") : std::max(a, b); }

}  // namespace

Var row_softmax(Var a, const BoolMatrix* mask) {
  const Tensor& x = a.value();
  check_mask("row_softmax", x, mask);
  const std::size_t n = x.rows(), m = x.cols();
  Tensor y = Tensor::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j)
      if (!mask || (*mask)(i, j)) mx = nan_max(mx, x(i, j));
    if (mx == -std::numeric_limits<double>::infinity()) {
      throw DomainError("row_softmax: row " + std::to_string(i) + " is fully masked");
    }
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (mask && !(*mask)(i, j)) continue;
      y(i, j) = std::exp(x(i, j) - mx);
      z += y(i, j);
    }
    for (std::size_t j = 0; j < m; ++j) y(i, j) /= z;
  }
  return tape_of(a).record(std::move(y), {a}, [](Tape& t, std::size_t self) {
    // dx = y * (g - <g, y>) per row; masked entries have y = 0.
    const Tensor& yv = t.value(self);
    const Tensor& g = t.grad_of(self);
    Tensor gx = Tensor::matrix(yv.rows(), yv.cols());
    for (std::size_t i = 0; i < yv.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < yv.cols(); ++j) dot += g(i, j) * yv(i, j);
      for (std::size_t j = 0; j < yv.cols(); ++j) gx(i, j) = yv(i, j) * (g(i, j) - dot);
    }
    t.accumulate(t.inputs_of(self)[0], gx);
  });
}

Var row_logsumexp(Var a, const BoolMatrix* mask) {
  const Tensor& x = a.value();
  check_mask("row_logsumexp", x, mask);
  const std::size_t n = x.rows(), m = x.cols();
  Tensor y = Tensor::matrix(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j)
      if (!mask || (*mask)(i, j)) mx = nan_max(mx, x(i, j));
    if (mx == -std::numeric_limits<double>::infinity()) {
      throw DomainError("row_logsumexp: row " + std::to_string(i) + " is fully masked");
    }
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      if (!mask || (*mask)(i, j)) z += std::exp(x(i, j) - mx);
    y(i, 0) = mx + std::log(z);
  }
  std::optional<BoolMatrix> kept;
  if (mask) kept = *mask;
  return tape_of(a).record(std::move(y), {a}, [kept](Tape& t, std::size_t self) {
    const std::size_t in = t.inputs_of(self)[0];
    const Tensor& xv = t.value(in);
    const Tensor& yv = t.value(self);
    const Tensor& g = t.grad_of(self);
    Tensor gx = Tensor::matrix(xv.rows(), xv.cols());
    for (std::size_t i = 0; i < xv.rows(); ++i)
      for (std::size_t j = 0; j < xv.cols(); ++j)
        if (!kept || (*kept)(i, j)) gx(i, j) = g(i, 0) * std::exp(xv(i, j) - yv(i, 0));
    t.accumulate(in, gx);
  });
}

Var row_l2_normalize(Var a) {
  const Tensor& x = a.value();
  require_matrix("row_l2_normalize", x);
  const std::size_t n = x.rows(), m = x.cols();
  Tensor y = Tensor::matrix(n, m);
  Tensor norms = Tensor::matrix(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += x(i, j) * x(i, j);
    const double nrm = std::sqrt(s);
    if (nrm == 0.0) {
      throw DomainError("row_l2_normalize: row " + std::to_string(i) + " has zero norm");
    }
    norms(i, 0) = nrm;
    for (std::size_t j = 0; j < m; ++j) y(i, j) = x(i, j) / nrm;
  }
  return tape_of(a).record(std::move(y), {a}, [norms](Tape& t, std::size_t self) {
    // d(x/|x|) = (g - y <g, y>) / |x|
    const Tensor& yv = t.value(self);
    const Tensor& g = t.grad_of(self);
    Tensor gx = Tensor::matrix(yv.rows(), yv.cols());
    for (std::size_t i = 0; i < yv.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < yv.cols(); ++j) dot += g(i, j) * yv(i, j);
      for (std::size_t j = 0; j < yv.cols(); ++j)
        gx(i, j) = (g(i, j) - yv(i, j) * dot) / norms(i, 0);
    }
    t.accumulate(t.inputs_of(self)[0], gx);
  });
}

Var diagonal(Var a) {
  const Tensor& x = a.value();
  require_matrix("diagonal", x);
  if (x.rows() != x.cols()) throw DimensionError("diagonal: matrix " + shape_string(x.shape()) + " is not square");
  Tensor d = Tensor::matrix(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i) d(i, 0) = x(i, i);
  return tape_of(a).record(std::move(d), {a}, [](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    Tensor gx = Tensor::matrix(g.rows(), g.rows());
    for (std::size_t i = 0; i < g.rows(); ++i) gx(i, i) = g(i, 0);
    t.accumulate(t.inputs_of(self)[0], gx);
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Tensor& x = a.value();
  require_matrix("slice_cols", x);
  if (begin + count > x.cols()) {
    throw DimensionError("slice_cols: columns [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of range for " +
                         shape_string(x.shape()));
  }
  Tensor y = Tensor::matrix(x.rows(), count);
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < count; ++j) y(i, j) = x(i, begin + j);
  return tape_of(a).record(std::move(y), {a}, [begin](Tape& t, std::size_t self) {
    const std::size_t in = t.inputs_of(self)[0];
    const Tensor& g = t.grad_of(self);
    Tensor gx(t.value(in).shape());
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) gx(i, begin + j) = g(i, j);
    t.accumulate(in, gx);
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no operands");
  const std::size_t n = parts.front().value().rows();
  std::size_t total = 0;
  for (const Var& p : parts) {
    if (p.value().rows() != n) throw_dims("concat_cols", parts.front().shape(), p.shape());
    total += p.value().cols();
  }
  Tensor y = Tensor::matrix(n, total);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& x = p.value();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < x.cols(); ++j) y(i, offset + j) = x(i, j);
    offset += x.cols();
  }
  return tape_of(parts.front()).record(std::move(y), parts, [](Tape& t, std::size_t self) {
    const Tensor& g = t.grad_of(self);
    std::size_t offset = 0;
    for (auto in : t.inputs_of(self)) {
      const std::size_t w = t.value(in).cols();
      if (t.tracked(in)) {
        Tensor gx = Tensor::matrix(g.rows(), w);
        for (std::size_t i = 0; i < g.rows(); ++i)
          for (std::size_t j = 0; j < w; ++j) gx(i, j) = g(i, offset + j);
        t.accumulate(in, gx);
      }
      offset += w;
    }
  });
}

Var select_rows(Var a, std::span<const std::size_t> rows) {
  const Tensor& x = a.value();
  require_matrix("select_rows", x);
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  Tensor y = Tensor::matrix(idx.size(), x.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= x.rows()) {
      throw DimensionError("select_rows: row " + std::to_string(idx[r]) + " out of range for " +
                           shape_string(x.shape()));
    }
    for (std::size_t j = 0; j < x.cols(); ++j) y(r, j) = x(idx[r], j);
  }
  return tape_of(a).record(std::move(y), {a}, [idx](Tape& t, std::size_t self) {
    const std::size_t in = t.inputs_of(self)[0];
    const Tensor& g = t.grad_of(self);
    Tensor gx(t.value(in).shape());
    for (std::size_t r = 0; r < idx.size(); ++r)
      for (std::size_t j = 0; j < g.cols(); ++j) gx(idx[r], j) += g(r, j);
    t.accumulate(in, gx);
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return tape_of(a).record(Tensor::scalar(s), {a}, [](Tape& t, std::size_t self) {
    const std::size_t in = t.inputs_of(self)[0];
    t.accumulate(in, Tensor(t.value(in).shape(), t.grad_of(self).item()));
  });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw DimensionError("mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

namespace {

double sign_or_zero(double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); }

void l1_backward(Tape& t, std::size_t self, bool per_row) {
  const auto& in = t.inputs_of(self);
  const Tensor& av = t.value(in[0]);
  const Tensor& bv = t.value(in[1]);
  const Tensor& g = t.grad_of(self);
  const std::size_t cols = per_row ? av.cols() : 1;
  Tensor ga(av.shape());
  Tensor gb(bv.shape());
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double gi = per_row ? g[i / cols] : g[0];
    const double s = sign_or_zero(av[i] - bv[i]) * gi;
    ga[i] = s;
    gb[i] = -s;
  }
  if (t.tracked(in[0])) t.accumulate(in[0], ga);
  if (t.tracked(in[1])) t.accumulate(in[1], gb);
}

}  // namespace

Var l1_distance(Var a, Var b) {
  require_same_shape("l1_distance", a.value(), b.value());
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += std::abs(av[i] - bv[i]);
  return tape_of(a).record(Tensor::scalar(s), {a, b},
                           [](Tape& t, std::size_t self) { l1_backward(t, self, false); });
}

Var row_l1_distance(Var a, Var b) {
  require_same_shape("row_l1_distance", a.value(), b.value());
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix("row_l1_distance", av);
  Tensor d = Tensor::matrix(av.rows(), 1);
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < av.cols(); ++j) d(i, 0) += std::abs(av(i, j) - bv(i, j));
  return tape_of(a).record(std::move(d), {a, b},
                           [](Tape& t, std::size_t self) { l1_backward(t, self, true); });
}

Var cross_entropy_logits(Var logits, std::span<const int> labels) {
  const Tensor& x = logits.value();
  require_matrix("cross_entropy_logits", x);
  const std::size_t n = x.rows(), c = x.cols();
  if (labels.size() != n) {
    throw DimensionError("cross_entropy_logits: " + std::to_string(labels.size()) +
                         " labels for " + std::to_string(n) + " rows");
  }
  if (n == 0) throw DimensionError("cross_entropy_logits: no rows");
  Tensor probs = Tensor::matrix(n, c);
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c) {
      throw DomainError("cross_entropy_logits: label " + std::to_string(labels[i]) +
                        " out of range [0, " + std::to_string(c) + ")");
    }
    double mx = x(i, 0);
    for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, x(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(x(i, j) - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < c; ++j) probs(i, j) = std::exp(x(i, j) - lse);
    loss += lse - x(i, static_cast<std::size_t>(labels[i]));
  }
  loss /= static_cast<double>(n);
  std::vector<int> lab(labels.begin(), labels.end());
  return tape_of(logits).record(
      Tensor::scalar(loss), {logits}, [probs, lab](Tape& t, std::size_t self) {
        const double g = t.grad_of(self).item();
        const double inv_n = 1.0 / static_cast<double>(probs.rows());
        Tensor gx = probs;
        for (std::size_t i = 0; i < gx.rows(); ++i) {
          gx(i, static_cast<std::size_t>(lab[i])) -= 1.0;
          for (std::size_t j = 0; j < gx.cols(); ++j) gx(i, j) *= g * inv_n;
        }
        t.accumulate(t.inputs_of(self)[0], gx);
      });
}

Var detach(Var a) { return tape_of(a).constant(a.value()); }

}  // namespace mvkt
