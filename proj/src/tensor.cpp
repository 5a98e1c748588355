#include "senticomp/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "senticomp/kernels.hpp"

namespace senticomp {

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (auto d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

Tensor::Tensor(Shape shape) {
  p_ = std::make_shared<Payload>();
  p_->v.assign(shape_numel(shape), 0.0);
  p_->shape = std::move(shape);
}

Tensor::Tensor(Shape shape, std::vector<double> values) {
  if (shape_numel(shape) != values.size())
    throw ShapeError("tensor init: " + shape_str(shape) + " does not hold " +
                     std::to_string(values.size()) + " values");
  p_ = std::make_shared<Payload>();
  p_->shape = std::move(shape);
  p_->v = std::move(values);
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::full(Shape shape, double v) {
  Tensor t(std::move(shape));
  for (auto& x : t.values()) x = v;
  return t;
}

Tensor Tensor::uniform_init(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& x : t.values()) x = rng.uniform(-bound, bound);
  return t;
}

double Tensor::item() const {
  if (size() != 1)
    throw ShapeError("item(): tensor has shape " + shape_str(shape()));
  return p_->v[0];
}

// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " +
                   shape_str(a.shape()) + " and " + shape_str(b.shape()));
}

[[noreturn]] void shape_fail(const char* op, const Tensor& a) {
  throw ShapeError(std::string(op) + ": unsupported shape " +
                   shape_str(a.shape()));
}

// Last-axis length and row count for rank-1/rank-2 tensors.
std::size_t last_dim(const Tensor& t) {
  return t.rank() == 1 ? t.dim(0) : t.dim(t.rank() - 1);
}
std::size_t row_count(const Tensor& t) {
  return t.rank() <= 1 ? 1 : t.dim(0);
}

}  // namespace

std::vector<double>& Graph::grad_buf(const Tensor& t) {
  auto it = grads_.find(t.id());
  if (it == grads_.end())
    it = grads_.emplace(t.id(), std::vector<double>(t.size(), 0.0)).first;
  return it->second;
}

const std::vector<double>* Graph::grad_ptr(const void* id) const {
  auto it = grads_.find(id);
  return it == grads_.end() ? nullptr : &it->second;
}

const std::vector<double>* Graph::grad(const Tensor& t) const {
  return grad_ptr(t.id());
}

std::vector<double> Graph::grad_or_zeros(const Tensor& t) const {
  if (const auto* g = grad(t)) return *g;
  return std::vector<double>(t.size(), 0.0);
}

void Graph::reset() {
  tape_.clear();
  grads_.clear();
  backward_done_ = false;
}

void Graph::backward(const Tensor& loss) {
  if (backward_done_)
    throw StateError("backward() called twice on one graph; reset() first");
  if (loss.size() != 1)
    throw ShapeError("backward(): loss must be scalar, got " +
                     shape_str(loss.shape()));
  backward_done_ = true;
  grad_buf(loss)[0] += 1.0;
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) it->backward();
}

// -- matmul -----------------------------------------------------------------

Tensor Graph::matmul(const Tensor& a, const Tensor& b, bool trans_a,
                     bool trans_b) {
  // Normalize to 2D: A is logically m x k, B is k x n. Rank-1 operands act
  // as a row vector (left) or column vector (right) and drop the axis again
  // in the result.
  std::size_t m, k, k2, n;
  if (a.rank() == 2) {
    m = trans_a ? a.dim(1) : a.dim(0);
    k = trans_a ? a.dim(0) : a.dim(1);
  } else if (a.rank() == 1) {
    m = 1;
    k = a.dim(0);
  } else {
    shape_fail("matmul", a);
  }
  if (b.rank() == 2) {
    k2 = trans_b ? b.dim(1) : b.dim(0);
    n = trans_b ? b.dim(0) : b.dim(1);
  } else if (b.rank() == 1) {
    k2 = b.dim(0);
    n = 1;
  } else {
    shape_fail("matmul", b);
  }
  if (k != k2) shape_fail("matmul", a, b);

  Shape out_shape;
  if (a.rank() == 1 && b.rank() == 1)
    out_shape = {1};
  else if (a.rank() == 1)
    out_shape = {n};
  else if (b.rank() == 1)
    out_shape = {m};
  else
    out_shape = {m, n};

  Tensor out(out_shape);
  kernels::matmul(out.data(), a.data(), b.data(), m, k, n, trans_a, trans_b);

  tape_.push_back({[this, a, b, out, m, k, n, trans_a, trans_b]() {
    const auto* dout = grad_ptr(out.id());
    if (!dout) return;
    auto& da = grad_buf(a);
    auto& db = grad_buf(b);
    const double* dc = dout->data();
    if (!trans_a) {
      // dA += dC * op(B)^T
      kernels::matmul_acc(da.data(), dc, b.data(), m, n, k, false, !trans_b);
    } else {
      // A stored transposed: dA_stored += op(B) * dC^T
      kernels::matmul_acc(da.data(), b.data(), dc, k, n, m, trans_b, true);
    }
    if (!trans_b) {
      // dB += op(A)^T * dC
      kernels::matmul_acc(db.data(), a.data(), dc, k, m, n, !trans_a, false);
    } else {
      // B stored transposed: dB_stored += dC^T * op(A)
      kernels::matmul_acc(db.data(), dc, a.data(), n, m, k, true, trans_a);
    }
  }});
  return out;
}

// -- elementwise --------------------------------------------------------------

Tensor Graph::add(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("add", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i)
    out.data()[i] = a.data()[i] + b.data()[i];
  tape_.push_back({[this, a, b, out]() {
    const auto* dout = grad_ptr(out.id());
    if (!dout) return;
    auto& da = grad_buf(a);
    auto& db = grad_buf(b);
    for (std::size_t i = 0; i < dout->size(); ++i) {
      da[i] += (*dout)[i];
      db[i] += (*dout)[i];
    }
  }});
  return out;
}

Tensor Graph::add_rowwise(const Tensor& mat, const Tensor& vec) {
  if (mat.rank() != 2 || vec.rank() != 1 || mat.dim(1) != vec.dim(0))
    shape_fail("add_rowwise", mat, vec);
  std::size_t rows = mat.dim(0), d = mat.dim(1);
  Tensor out(mat.shape());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < d; ++j)
      out.data()[r * d + j] = mat.data()[r * d + j] + vec.data()[j];
  tape_.push_back({[this, mat, vec, out, rows, d]() {
    const auto* dout = grad_ptr(out.id());
    if (!dout) return;
    auto& dm = grad_buf(mat);
    auto& dv = grad_buf(vec);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < d; ++j) {
        dm[r * d + j] += (*dout)[r * d + j];
        dv[j] += (*dout)[r * d + j];
      }
  }});
  return out;
}

Tensor Graph::scale(const Tensor& a, double c) {
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = c * a.data()[i];
  tape_.push_back({[this, a, out, c]() {
    const auto* dout = grad_ptr(out.id());
    if (!dout) return;
    auto& da = grad_buf(a);
    for (std::size_t i = 0; i < dout->size(); ++i) da[i] += c * (*dout)[i];
  }});
  return out;
}

Tensor Graph::mul(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) shape_fail("mul", a, b);
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i)
    out.data()[i] = a.data()[i] * b.data()[i];
  tape_.push_back({[this, a, b, out]() {
    const auto* dout = grad_ptr(out.id());
    if (!dout) return;
    auto& da = grad_buf(a);
    auto& db = grad_buf(b);
    for (std::size_t i = 0; i < dout->size(); ++i) {
      da[i] += (*dout)[i] * b.data()[i];
      db[i] += (*dout)[i] * a.data()[i];
    }
  }});
  return out;
}

Tensor Graph::mul_scalar(const Tensor& a, const Tensor& s) {
  if (s.size() != 1) shape_fail("mul_scalar", a, s);
  double sv = s.data()[0];
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = sv * a.data()[i];
  tape_.push_back({[this, a, s, out, sv]() {
    const auto* dout = grad_ptr(out.id());
    if (!dout) return;
    auto& da = grad_buf(a);
    auto& ds = grad_buf(s);
    double acc = 0.0;
    for (std::size_t i = 0; i < dout->size(); ++i) {
      da[i] += sv * (*dout)[i];
      acc += (*dout)[i] * a.data()[i];
    }
    ds[0] += acc;
  }});
  return out;
}

Tensor Graph::sum(const Tensor& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.data()[i];
  Tensor out = Tensor::scalar(acc);
  tape_.push_back({[this, a, out]() {
    const auto* dout = grad_ptr(out.id());
    if (!dout) return;
    auto& da = grad_buf(a);
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += (*dout)[0];
  }});
  return out;
}

Tensor Graph::tanh(const Tensor& a) {
  Tensor out(a.shape());
  kernels::tanh_fwd(out.data(), a.data(), a.size());
  tape_.push_back({[this, a, out]() {
    const auto* dout = grad_ptr(out.id());
    if (!dout) return;
    kernels::tanh_backward(grad_buf(a).data(), out.data(), dout->data(),
                           a.size());
  }});
  return out;
}

Tensor Graph::selu(const Tensor& a) {
  Tensor out(a.shape());
  kernels::selu(out.data(), a.data(), a.size());
  tape_.push_back({[this, a, out]() {
    const auto* dout = grad_ptr(out.id());
    if (!dout) return;
    kernels::selu_backward(grad_buf(a).data(), a.data(), dout->data(),
                           a.size());
  }});
  return out;
}

Tensor Graph::gelu(const Tensor& a) {
  Tensor out(a.shape());
  kernels::gelu(out.data(), a.data(), a.size());
  tape_.push_back({[this, a, out]() {
    const auto* dout = grad_ptr(out.id());
    if (!dout) return;
    kernels::gelu_backward(grad_buf(a).data(), a.data(), dout->data(),
                           a.size());
  }});
  return out;
}

// -- structure ops ------------------------------------------------------------

Tensor Graph::concat(const Tensor& a, const Tensor& b) {
  if (a.rank() == 1 && b.rank() == 1) {
    Tensor out({a.dim(0) + b.dim(0)});
    std::memcpy(out.data(), a.data(), a.size() * sizeof(double));
    std::memcpy(out.data() + a.size(), b.data(), b.size() * sizeof(double));
    tape_.push_back({[this, a, b, out]() {
      const auto* dout = grad_ptr(out.id());
      if (!dout) return;
      auto& da = grad_buf(a);
      auto& db = grad_buf(b);
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += (*dout)[i];
      for (std::size_t i = 0; i < db.size(); ++i)
        db[i] += (*dout)[da.size() + i];
    }});
    return out;
  }
  if (a.rank() == 2 && b.rank() == 2 && a.dim(0) == b.dim(0)) {
    std::size_t rows = a.dim(0), ca = a.dim(1), cb = b.dim(1);
    Tensor out({rows, ca + cb});
    for (std::size_t r = 0; r < rows; ++r) {
      std::memcpy(out.data() + r * (ca + cb), a.data() + r * ca,
                  ca * sizeof(double));
      std::memcpy(out.data() + r * (ca + cb) + ca, b.data() + r * cb,
                  cb * sizeof(double));
    }
    tape_.push_back({[this, a, b, out, rows, ca, cb]() {
      const auto* dout = grad_ptr(out.id());
      if (!dout) return;
      auto& da = grad_buf(a);
      auto& db = grad_buf(b);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < ca; ++j)
          da[r * ca + j] += (*dout)[r * (ca + cb) + j];
        for (std::size_t j = 0; j < cb; ++j)
          db[r * cb + j] += (*dout)[r * (ca + cb) + ca + j];
      }
    }});
    return out;
  }
  shape_fail("concat", a, b);
}

Tensor Graph::mean_rows(const Tensor& a) {
  if (a.rank() == 1) {
    // mean over the only axis
    std::size_t n = a.dim(0);
    if (n == 0) shape_fail("mean_rows", a);
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a.data()[i];
    Tensor out = Tensor::scalar(acc / static_cast<double>(n));
    tape_.push_back({[this, a, out, n]() {
      const auto* dout = grad_ptr(out.id());
      if (!dout) return;
      auto& da = grad_buf(a);
      double g = (*dout)[0] / static_cast<double>(n);
      for (std::size_t i = 0; i < n; ++i) da[i] += g;
    }});
    return out;
  }
  if (a.rank() != 2 || a.dim(0) == 0) shape_fail("mean_rows", a);
  std::size_t rows = a.dim(0), d = a.dim(1);
  Tensor out({d});
  for (std::size_t j = 0; j < d; ++j) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) acc += a.data()[r * d + j];
    out.data()[j] = acc / static_cast<double>(rows);
  }
  tape_.push_back({[this, a, out, rows, d]() {
    const auto* dout = grad_ptr(out.id());
    if (!dout) return;
    auto& da = grad_buf(a);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < d; ++j)
        da[r * d + j] += (*dout)[j] / static_cast<double>(rows);
  }});
  return out;
}

Tensor Graph::softmax(const Tensor& a) {
  std::size_t rows = row_count(a), cols = last_dim(a);
  if (cols == 0) shape_fail("softmax", a);
  Tensor out(a.shape());
  kernels::softmax_rows(out.data(), a.data(), rows, cols);
  tape_.push_back({[this, a, out, rows, cols]() {
    const auto* dout = grad_ptr(out.id());
    if (!dout) return;
    auto& da = grad_buf(a);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* y = out.data() + r * cols;
      const double* dy = dout->data() + r * cols;
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += dy[j] * y[j];
      for (std::size_t j = 0; j < cols; ++j)
        da[r * cols + j] += y[j] * (dy[j] - dot);
    }
  }});
  return out;
}

Tensor Graph::layer_norm(const Tensor& x, const Tensor& gain,
                         const Tensor& bias) {
  std::size_t rows = row_count(x), d = last_dim(x);
  if (gain.rank() != 1 || bias.rank() != 1 || gain.dim(0) != d ||
      bias.dim(0) != d)
    shape_fail("layer_norm", x, gain);
  constexpr double eps = 1e-5;
  Tensor out(x.shape());
  // Keep per-row inv-std and normalized values for the backward pass.
  auto istd = std::make_shared<std::vector<double>>(rows);
  auto xhat = std::make_shared<std::vector<double>>(rows * d);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += xr[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      double c = xr[j] - mu;
      var += c * c;
    }
    var /= static_cast<double>(d);
    double is = 1.0 / std::sqrt(var + eps);
    (*istd)[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      double xh = (xr[j] - mu) * is;
      (*xhat)[r * d + j] = xh;
      out.data()[r * d + j] = gain.data()[j] * xh + bias.data()[j];
    }
  }
  tape_.push_back({[this, x, gain, bias, out, rows, d, istd, xhat]() {
    const auto* dout = grad_ptr(out.id());
    if (!dout) return;
    auto& dx = grad_buf(x);
    auto& dg = grad_buf(gain);
    auto& db = grad_buf(bias);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* dy = dout->data() + r * d;
      const double* xh = xhat->data() + r * d;
      double is = (*istd)[r];
      double mean_dxhat = 0.0, mean_dxhat_xhat = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        double dxh = dy[j] * gain.data()[j];
        mean_dxhat += dxh;
        mean_dxhat_xhat += dxh * xh[j];
        dg[j] += dy[j] * xh[j];
        db[j] += dy[j];
      }
      mean_dxhat /= static_cast<double>(d);
      mean_dxhat_xhat /= static_cast<double>(d);
      for (std::size_t j = 0; j < d; ++j) {
        double dxh = dy[j] * gain.data()[j];
        dx[r * d + j] += is * (dxh - mean_dxhat - xh[j] * mean_dxhat_xhat);
      }
    }
  }});
  return out;
}

Tensor Graph::cross_entropy(const Tensor& logits,
                            const std::vector<int>& targets) {
  std::size_t rows = row_count(logits), c = last_dim(logits);
  if (targets.size() != rows)
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) +
                     " targets for " + std::to_string(rows) + " rows");
  for (int t : targets)
    if (t < 0 || static_cast<std::size_t>(t) >= c)
      throw DomainError("cross_entropy: target " + std::to_string(t) +
                        " outside " + std::to_string(c) + " classes");
  auto probs = std::make_shared<std::vector<double>>(rows * c);
  kernels::softmax_rows_serial(probs->data(), logits.data(), rows, c);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    // -log p[target], computed stably from the logits directly.
    const double* x = logits.data() + r * c;
    double mx = x[0];
    for (std::size_t j = 1; j < c; ++j) mx = x[j] > mx ? x[j] : mx;
    double z = 0.0;
    for (std::size_t j = 0; j < c; ++j) z += std::exp(x[j] - mx);
    loss += std::log(z) + mx - x[targets[r]];
  }
  loss /= static_cast<double>(rows);
  Tensor out = Tensor::scalar(loss);
  tape_.push_back({[this, logits, out, probs, targets, rows, c]() {
    const auto* dout = grad_ptr(out.id());
    if (!dout) return;
    auto& dl = grad_buf(logits);
    double g = (*dout)[0] / static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < c; ++j)
        dl[r * c + j] += g * (*probs)[r * c + j];
      dl[r * c + targets[r]] -= g;
    }
  }});
  return out;
}

Tensor Graph::cross_entropy(const Tensor& logits, int target) {
  if (logits.rank() != 1) shape_fail("cross_entropy", logits);
  return cross_entropy(logits, std::vector<int>{target});
}

Tensor Graph::gather_rows(const Tensor& a, std::vector<std::size_t> rows) {
  if (a.rank() != 2) shape_fail("gather_rows", a);
  std::size_t d = a.dim(1);
  for (auto r : rows)
    if (r >= a.dim(0))
      throw ShapeError("gather_rows: row " + std::to_string(r) +
                       " outside " + shape_str(a.shape()));
  Tensor out({rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::memcpy(out.data() + i * d, a.data() + rows[i] * d,
                d * sizeof(double));
  tape_.push_back({[this, a, out, rows = std::move(rows), d]() {
    const auto* dout = grad_ptr(out.id());
    if (!dout) return;
    auto& da = grad_buf(a);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < d; ++j)
        da[rows[i] * d + j] += (*dout)[i * d + j];
  }});
  return out;
}

Tensor Graph::slice_cols(const Tensor& a, std::size_t start, std::size_t len) {
  if (a.rank() != 2 || start + len > a.dim(1)) shape_fail("slice_cols", a);
  std::size_t rows = a.dim(0), d = a.dim(1);
  Tensor out({rows, len});
  for (std::size_t r = 0; r < rows; ++r)
    std::memcpy(out.data() + r * len, a.data() + r * d + start,
                len * sizeof(double));
  tape_.push_back({[this, a, out, start, len, rows, d]() {
    const auto* dout = grad_ptr(out.id());
    if (!dout) return;
    auto& da = grad_buf(a);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t j = 0; j < len; ++j)
        da[r * d + start + j] += (*dout)[r * len + j];
  }});
  return out;
}

Tensor Graph::slice(const Tensor& a, std::size_t start, std::size_t len) {
  if (a.rank() != 1 || start + len > a.dim(0)) shape_fail("slice", a);
  Tensor out({len});
  std::memcpy(out.data(), a.data() + start, len * sizeof(double));
  tape_.push_back({[this, a, out, start, len]() {
    const auto* dout = grad_ptr(out.id());
    if (!dout) return;
    auto& da = grad_buf(a);
    for (std::size_t j = 0; j < len; ++j) da[start + j] += (*dout)[j];
  }});
  return out;
}

Tensor Graph::stack(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw ShapeError("stack: empty input");
  std::size_t d = rows[0].size();
  for (const auto& r : rows)
    if (r.rank() != 1 || r.size() != d) shape_fail("stack", rows[0], r);
  Tensor out({rows.size(), d});
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::memcpy(out.data() + i * d, rows[i].data(), d * sizeof(double));
  tape_.push_back({[this, rows, out, d]() {
    const auto* dout = grad_ptr(out.id());
    if (!dout) return;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto& dr = grad_buf(rows[i]);
      for (std::size_t j = 0; j < d; ++j) dr[j] += (*dout)[i * d + j];
    }
  }});
  return out;
}

Tensor Graph::stack_scalars(const std::vector<Tensor>& xs) {
  if (xs.empty()) throw ShapeError("stack_scalars: empty input");
  Tensor out({xs.size()});
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i].size() != 1) shape_fail("stack_scalars", xs[i]);
    out.data()[i] = xs[i].data()[0];
  }
  tape_.push_back({[this, xs, out]() {
    const auto* dout = grad_ptr(out.id());
    if (!dout) return;
    for (std::size_t i = 0; i < xs.size(); ++i) grad_buf(xs[i])[0] += (*dout)[i];
  }});
  return out;
}

Tensor Graph::dropout(const Tensor& a, double rate, Rng& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw DomainError("dropout: rate must be < 1");
  double keep = 1.0 - rate;
  auto mask = std::make_shared<std::vector<double>>(a.size());
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) {
    (*mask)[i] = rng.bernoulli(keep) ? 1.0 / keep : 0.0;
    out.data()[i] = a.data()[i] * (*mask)[i];
  }
  tape_.push_back({[this, a, out, mask]() {
    const auto* dout = grad_ptr(out.id());
    if (!dout) return;
    auto& da = grad_buf(a);
    for (std::size_t i = 0; i < da.size(); ++i)
      da[i] += (*dout)[i] * (*mask)[i];
  }});
  return out;
}

// -- finite differences -------------------------------------------------------

FdReport finite_difference_check(
    const std::function<Tensor(Graph&)>& f,
    const std::vector<std::pair<std::string, Tensor>>& inputs,
    const std::vector<double>& steps) {
  if (steps.empty())
    throw DomainError("finite_difference_check: no steps given");
  Graph g;
  Tensor y = f(g);
  if (y.size() != 1)
    throw ShapeError("finite_difference_check: f must return a scalar");
  g.backward(y);

  FdReport report;
  for (const auto& [name, x] : inputs) {
    std::vector<double> analytic = g.grad_or_zeros(x);
    Tensor xt = x;  // shared storage: perturb in place, restore after
    for (std::size_t i = 0; i < xt.size(); ++i) {
      const double saved = xt.data()[i];
      double best_rel = -1.0;
      double best_numeric = 0.0;
      for (double step : steps) {
        xt.data()[i] = saved + step;
        Graph gp;
        double fp = f(gp).item();
        xt.data()[i] = saved - step;
        Graph gm;
        double fm = f(gm).item();
        xt.data()[i] = saved;
        double numeric = (fp - fm) / (2.0 * step);
        double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric),
                                 1e-8});
        double rel = std::fabs(analytic[i] - numeric) / denom;
        if (best_rel < 0.0 || rel < best_rel) {
          best_rel = rel;
          best_numeric = numeric;
        }
      }
      if (best_rel > report.max_rel_err) {
        report.max_rel_err = best_rel;
        report.worst_tensor = name;
        report.worst_index = i;
        report.analytic = analytic[i];
        report.numeric = best_numeric;
      }
    }
  }
  return report;
}

FdReport finite_difference_check(
    const std::function<Tensor(Graph&)>& f,
    const std::vector<std::pair<std::string, Tensor>>& inputs, double step) {
  return finite_difference_check(f, inputs, std::vector<double>{step});
}

FdReport finite_difference_check(
    const std::function<Tensor(Graph&, const Tensor&)>& f, const Tensor& x,
    double step) {
  return finite_difference_check(
      [&](Graph& g) { return f(g, x); }, {{"x", x}}, step);
}

// -- parameters ---------------------------------------------------------------

Tensor ParamStore::insert(const std::string& name, Tensor t) {
  if (has(name)) throw StateError("parameter '" + name + "' already exists");
  index_[name] = entries_.size();
  entries_.emplace_back(name, t);
  return t;
}

Tensor ParamStore::create_uniform(const std::string& name, Shape shape,
                                  std::size_t fan_in, Rng& rng) {
  return insert(name, Tensor::uniform_init(std::move(shape), fan_in, rng));
}

Tensor ParamStore::create_zeros(const std::string& name, Shape shape) {
  return insert(name, Tensor(std::move(shape)));
}

Tensor ParamStore::create_ones(const std::string& name, Shape shape) {
  return insert(name, Tensor::full(std::move(shape), 1.0));
}

bool ParamStore::has(const std::string& name) const {
  return index_.count(name) != 0;
}

Tensor ParamStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw StateError("unknown parameter '" + name + "'");
  return entries_[it->second].second;
}

std::size_t ParamStore::total_values() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.size();
  return n;
}

void ParamStore::save(const std::string& path) const {
  nlohmann::json header;
  header["format"] = "senticomp-checkpoint-v1";
  auto& params = header["params"];
  params = nlohmann::json::array();
  for (const auto& [name, t] : entries_) {
    params.push_back({{"name", name}, {"shape", t.shape()}});
  }
  std::string htext = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  std::uint64_t hlen = htext.size();
  char lenbuf[8];
  for (int i = 0; i < 8; ++i) lenbuf[i] = static_cast<char>((hlen >> (8 * i)) & 0xff);
  out.write(lenbuf, 8);
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  for (const auto& [name, t] : entries_) {
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) throw IoError("short write on checkpoint: " + path);
}

ParamStore ParamStore::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint: " + path);
  char lenbuf[8];
  in.read(lenbuf, 8);
  if (in.gcount() != 8) throw IoError("truncated checkpoint header: " + path);
  std::uint64_t hlen = 0;
  for (int i = 0; i < 8; ++i)
    hlen |= static_cast<std::uint64_t>(static_cast<unsigned char>(lenbuf[i]))
            << (8 * i);
  std::string htext(hlen, '\0');
  in.read(htext.data(), static_cast<std::streamsize>(hlen));
  if (static_cast<std::uint64_t>(in.gcount()) != hlen)
    throw IoError("truncated checkpoint header: " + path);
  nlohmann::json header = nlohmann::json::parse(htext, nullptr, false);
  if (header.is_discarded() || !header.contains("params"))
    throw IoError("malformed checkpoint header: " + path);
  ParamStore store;
  for (const auto& p : header["params"]) {
    std::string name = p.at("name").get<std::string>();
    Shape shape = p.at("shape").get<Shape>();
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != t.size() * sizeof(double))
      throw IoError("checkpoint truncated while reading parameter '" + name +
                    "'");
    store.insert(name, t);
  }
  return store;
}

void ParamStore::check_layout_matches(const ParamStore& other) const {
  if (entries_.size() != other.entries_.size())
    throw IoError("checkpoint layout mismatch: " +
                  std::to_string(other.entries_.size()) + " parameters where " +
                  std::to_string(entries_.size()) + " expected");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& [name, t] = entries_[i];
    const auto& [oname, ot] = other.entries_[i];
    if (name != oname)
      throw IoError("checkpoint layout mismatch at parameter '" + oname +
                    "' (expected '" + name + "')");
    if (t.shape() != ot.shape())
      throw IoError("checkpoint shape mismatch for parameter '" + name +
                    "': " + shape_str(ot.shape()) + " vs expected " +
                    shape_str(t.shape()));
  }
}

}  // namespace senticomp
