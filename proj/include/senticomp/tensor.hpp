#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "senticomp/error.hpp"
#include "senticomp/rng.hpp"

namespace senticomp {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

/// Dense 64-bit tensor handle with shared storage. Values live in row-major
/// order; gradients are owned by the Graph that consumed the tensor, so the
/// same parameter can participate in many concurrent graphs.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double v);
  static Tensor full(Shape shape, double v);
  /// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
  static Tensor uniform_init(Shape shape, std::size_t fan_in, Rng& rng);

  bool defined() const { return static_cast<bool>(p_); }
  const Shape& shape() const { return p_->shape; }
  std::size_t rank() const { return p_->shape.size(); }
  std::size_t size() const { return p_->v.size(); }
  std::size_t dim(std::size_t i) const { return p_->shape.at(i); }

  double* data() { return p_->v.data(); }
  const double* data() const { return p_->v.data(); }
  std::vector<double>& values() { return p_->v; }
  const std::vector<double>& values() const { return p_->v; }

  double item() const;
  double at(std::size_t i) const { return p_->v.at(i); }

  /// Storage identity; the Graph keys gradients on this.
  const void* id() const { return p_.get(); }
  bool same_storage(const Tensor& o) const { return p_ == o.p_; }

 private:
  struct Payload {
    Shape shape;
    std::vector<double> v;
  };
  std::shared_ptr<Payload> p_;
};

/// Reverse-mode tape. Every op appends a backward record; backward() walks
/// the records once in reverse. A graph is confined to one thread; distinct
/// graphs over shared parameter values may run concurrently because each
/// graph owns its own gradient buffers.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // -- primitives --------------------------------------------------------
  Tensor matmul(const Tensor& a, const Tensor& b, bool trans_a = false,
                bool trans_b = false);
  Tensor add(const Tensor& a, const Tensor& b);
  /// mat {n,d} + row vector {d} broadcast over rows.
  Tensor add_rowwise(const Tensor& mat, const Tensor& vec);
  Tensor scale(const Tensor& a, double c);
  Tensor concat(const Tensor& a, const Tensor& b);  // last axis
  Tensor mean_rows(const Tensor& a);                // axis 0
  Tensor softmax(const Tensor& a);                  // last axis
  Tensor tanh(const Tensor& a);
  Tensor selu(const Tensor& a);
  Tensor gelu(const Tensor& a);
  Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias);
  Tensor cross_entropy(const Tensor& logits, const std::vector<int>& targets);
  Tensor cross_entropy(const Tensor& logits, int target);

  // -- plumbing ----------------------------------------------------------
  Tensor gather_rows(const Tensor& a, std::vector<std::size_t> rows);
  Tensor slice_cols(const Tensor& a, std::size_t start, std::size_t len);
  Tensor slice(const Tensor& a, std::size_t start, std::size_t len);  // 1D
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor mul_scalar(const Tensor& a, const Tensor& s);  // s has size 1
  Tensor sum(const Tensor& a);
  Tensor stack(const std::vector<Tensor>& rows);          // k x {d} -> {k,d}
  Tensor stack_scalars(const std::vector<Tensor>& xs);    // k x {1} -> {k}
  Tensor dropout(const Tensor& a, double rate, Rng& rng);

  /// Fills gradient buffers for every tensor reachable from loss.
  /// loss must be scalar. Calling twice without reset() raises StateError.
  void backward(const Tensor& loss);

  /// Gradient buffer of t, or nullptr if t never received gradient.
  const std::vector<double>* grad(const Tensor& t) const;
  std::vector<double> grad_or_zeros(const Tensor& t) const;

  std::size_t num_ops() const { return tape_.size(); }
  void reset();

 private:
  struct Record {
    std::function<void()> backward;
  };

  std::vector<double>& grad_buf(const Tensor& t);
  const std::vector<double>* grad_ptr(const void* id) const;

  std::vector<Record> tape_;
  std::unordered_map<const void*, std::vector<double>> grads_;
  bool backward_done_ = false;
};

// -- gradient validation ---------------------------------------------------

struct FdReport {
  double max_rel_err = 0.0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  bool pass(double tol) const { return max_rel_err < tol; }
};

/// Central-difference check of d(f)/d(inputs): (f(x+h)-f(x-h))/2h against
/// the analytic gradients from one backward pass. Relative error uses
/// denominator max(|analytic|, |numeric|, 1e-8). f must be deterministic.
FdReport finite_difference_check(
    const std::function<Tensor(Graph&)>& f,
    const std::vector<std::pair<std::string, Tensor>>& inputs, double step);

/// Multi-step variant: each element keeps its smallest relative error over
/// the steps before the max-reduction. Central differences have two failure
/// modes that depend on the step — roundoff swamps near-zero derivatives at
/// small steps, and activation kinks (selu) inside the step window corrupt
/// large ones — while a wrong analytic gradient disagrees at every step.
FdReport finite_difference_check(
    const std::function<Tensor(Graph&)>& f,
    const std::vector<std::pair<std::string, Tensor>>& inputs,
    const std::vector<double>& steps);

/// Single-input convenience form.
FdReport finite_difference_check(
    const std::function<Tensor(Graph&, const Tensor&)>& f, const Tensor& x,
    double step);

// -- parameters and checkpoints ---------------------------------------------

/// Named parameter registry with insertion order preserved. Checkpoints are
/// an 8-byte little-endian header-length prefix, a JSON header listing
/// parameter names and shapes, then the flat little-endian f64 payload in
/// header order.
class ParamStore {
 public:
  Tensor create_uniform(const std::string& name, Shape shape,
                        std::size_t fan_in, Rng& rng);
  Tensor create_zeros(const std::string& name, Shape shape);
  Tensor create_ones(const std::string& name, Shape shape);

  bool has(const std::string& name) const;
  Tensor get(const std::string& name) const;
  const std::vector<std::pair<std::string, Tensor>>& entries() const {
    return entries_;
  }
  std::size_t total_values() const;

  void save(const std::string& path) const;
  static ParamStore load(const std::string& path);

  /// IoError when names/shapes differ from this store's layout.
  void check_layout_matches(const ParamStore& other) const;

 private:
  Tensor insert(const std::string& name, Tensor t);
  std::vector<std::pair<std::string, Tensor>> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace senticomp
