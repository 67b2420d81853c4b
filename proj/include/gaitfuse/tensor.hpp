#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gaitfuse/random.hpp"

namespace gaitfuse {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Shared handle to an n-dimensional double array and its gradient.
///
/// Copies alias the same storage. A tensor "tracks" when it requires a
/// gradient itself or was produced by a recorded operation from a tracking
/// input; only tracking tensors receive gradients during backward.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0, bool requires_grad = false);
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  bool defined() const { return storage_ != nullptr; }
  const Shape& shape() const { return storage_->shape; }
  std::size_t rank() const { return storage_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return storage_->shape.at(axis); }
  std::size_t numel() const { return storage_->values.size(); }

  std::span<double> values() { return storage_->values; }
  std::span<const double> values() const { return storage_->values; }
  double item() const;

  // Allocates a zero gradient on first access. Gradients belong to the
  // shared storage, so a const handle may still accumulate into them.
  std::span<double> grad() const;
  bool has_grad() const { return !storage_->grad.empty(); }
  void zero_grad();

  bool requires_grad() const { return storage_->requires_grad; }
  void set_requires_grad(bool on);
  bool tracks() const { return storage_->requires_grad || storage_->recorded; }

  bool same_storage(const Tensor& other) const { return storage_ == other.storage_; }
  Tensor clone() const;  // deep copy of values, no gradient, not tracking

 private:
  friend class Tape;
  struct Storage {
    Shape shape;
    std::vector<double> values;
    mutable std::vector<double> grad;
    bool requires_grad = false;
    bool recorded = false;
  };
  std::shared_ptr<Storage> storage_;
};

/// Records operations in execution order for reverse-mode differentiation.
///
/// A tape is a single-threaded unit of work. Operations whose inputs do not
/// track are evaluated but not recorded.
class Tape {
 public:
  struct Node {
    std::string_view op;
    std::vector<Tensor> inputs;
    Tensor output;
    std::function<void()> backward;
  };

  void record(std::string_view op, std::vector<Tensor> inputs, Tensor& output,
              std::function<void()> backward);
  std::span<const Node> nodes() const { return nodes_; }
  void clear() { nodes_.clear(); }

 private:
  std::vector<Node> nodes_;
};

/// Seeds d(loss)/d(loss) = 1 and runs every recorded backward rule in reverse
/// order. Gradients accumulate; zero parameter gradients beforehand.
/// Throws ShapeError when `loss` is not a single value.
void backward(const Tensor& loss, Tape& tape);

// ---- operations -----------------------------------------------------------

// x [N x D_in], w [D_in x D_out], b [D_out] -> xw + b.
Tensor affine(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b);

// Cross-correlation. x [N x C_in x H x W], kernel [C_out x C_in x k x k].
Tensor conv2d(Tape& tape, const Tensor& x, const Tensor& kernel, std::size_t stride,
              std::size_t padding);

Tensor relu(Tape& tape, const Tensor& x);
Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);

// Elementwise product of equal shapes, or an [N x C] factor broadcast over the
// trailing axes of an [N x C x ...] map (either argument order).
Tensor hadamard(Tape& tape, const Tensor& a, const Tensor& b);

Tensor concat(Tape& tape, std::span<const Tensor> parts, std::size_t axis);

// [N x C x H x W] -> [N x C]
Tensor global_avg_pool(Tape& tape, const Tensor& x);

// Inverted dropout. Identity when !training or rate == 0.
Tensor dropout(Tape& tape, const Tensor& x, double rate, bool training, Rng& rng);

// Mean over the batch of -log softmax(logits)[label].
Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits,
                             std::span<const std::size_t> labels);

Tensor sum(Tape& tape, const Tensor& x);
Tensor mean(Tape& tape, const Tensor& x);

// Row-wise max-stabilized softmax of a [N x K] tensor (not recorded).
std::vector<double> softmax_rows(const Tensor& logits);

// ---- parameters and optimization -----------------------------------------

struct Parameter {
  std::string name;
  Tensor tensor;
};

/// Ordered, uniquely named collection of learnable tensors.
class ParameterSet {
 public:
  // Throws ConfigError on a duplicate name. Marks the tensor requires_grad.
  Tensor add(std::string name, Tensor tensor);

  const Parameter* find(std::string_view name) const;
  Tensor get(std::string_view name) const;  // throws DataError when absent

  std::span<const Parameter> items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  std::size_t scalar_count() const;
  void zero_grad();

 private:
  std::vector<Parameter> items_;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t step = 0;
};

// One bias-corrected Adam update in place. Throws ShapeError on size mismatch.
void adam_step(std::span<double> param, std::span<const double> grad, AdamState& state,
               double lr, const AdamConfig& cfg);

class Adam {
 public:
  Adam(const ParameterSet& params, AdamConfig cfg = {});
  void step(double lr);

 private:
  std::vector<Tensor> params_;
  std::vector<AdamState> states_;
  AdamConfig cfg_;
};

// base * exp(-decay * epoch)
double decayed_learning_rate(double base, double decay, std::size_t epoch);

}  // namespace gaitfuse
