// Copyright 2026 The GRIP Engine Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef GRIP__TENSOR_HPP_
#define GRIP__TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace grip
{
class Rng;

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape & shape) noexcept;
std::string shape_to_string(const Shape & shape);

/// Dense row-major float64 array with an optional gradient slot.
///
/// Tensor is a shared handle: copies alias the same storage, which is how the
/// tape keeps intermediates alive for the backward pass. Use clone() for a
/// deep copy.
class Tensor
{
public:
  Tensor();
  explicit Tensor(Shape shape, bool requires_grad = false);
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const noexcept { return static_cast<bool>(impl_); }
  bool same_storage(const Tensor & other) const noexcept { return impl_ == other.impl_; }

  const Shape & shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<double> values();
  std::span<const double> values() const;
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);

  bool has_grad() const;
  std::span<const double> grad() const;
  /// Allocates a zero gradient on first use. Handle semantics: the gradient
  /// slot is reachable through const handles, like the pointee of a
  /// shared_ptr.
  std::span<double> grad_mut() const;
  void zero_grad() const;
  void drop_grad() const;

  /// Deep copy of the values; the copy carries no gradient.
  Tensor clone() const;

private:
  struct Impl
  {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
  };

  std::shared_ptr<Impl> impl_;
};

enum class Mode { train, eval };

/// Running statistics carried by a batch-norm layer between calls.
struct BatchNormStats
{
  std::vector<double> mean;
  std::vector<double> var;

  explicit BatchNormStats(std::size_t channels = 0) : mean(channels, 0.0), var(channels, 1.0) {}
};

struct BatchNormOptions
{
  double momentum = 0.1;
  double eps = 1e-5;
};

/// Dynamic compute tape. Ops execute eagerly and, when any input requires a
/// gradient, append a backward closure. backward() replays the closures in
/// exact reverse execution order.
class Tape
{
public:
  using BackwardFn = std::function<void()>;

  explicit Tape(bool recording = true) : recording_(recording) {}

  Tape(const Tape &) = delete;
  Tape & operator=(const Tape &) = delete;
  Tape(Tape &&) = default;
  Tape & operator=(Tape &&) = default;

  bool recording() const noexcept { return recording_; }
  void set_recording(bool flag) noexcept { recording_ = flag; }

  // ---- linear algebra -------------------------------------------------
  Tensor matmul(const Tensor & a, const Tensor & b);
  /// x[rows x in] * w^T + bias, w is [out x in].
  Tensor linear(const Tensor & x, const Tensor & w, const Tensor & bias);
  /// (1x1) convolution: per (node, time) channel mix of x[n x t x c_in].
  Tensor conv_channel_mix(const Tensor & x, const Tensor & w, const Tensor & bias);
  /// (1x3) convolution along the time axis of x[n x t x c], w is [c_out x c x 3].
  Tensor conv_temporal(
    const Tensor & x, const Tensor & w, const Tensor & bias, std::size_t stride = 1,
    std::size_t padding = 1);

  // ---- normalization / regularization --------------------------------
  /// Per-channel normalization over every axis except the last.
  Tensor batch_norm(
    const Tensor & x, const Tensor & scale, const Tensor & shift, BatchNormStats & stats, Mode mode,
    const BatchNormOptions & options = {});
  Tensor dropout(const Tensor & x, double p, Mode mode, Rng & rng);

  // ---- elementwise ----------------------------------------------------
  Tensor add(const Tensor & a, const Tensor & b);
  Tensor sub(const Tensor & a, const Tensor & b);
  Tensor mul(const Tensor & a, const Tensor & b);
  Tensor scale(const Tensor & x, double factor);
  Tensor tanh(const Tensor & x);
  Tensor sigmoid(const Tensor & x);
  Tensor relu(const Tensor & x);

  // ---- layout ---------------------------------------------------------
  /// Columns [begin, begin + count) of a rank-2 tensor.
  Tensor slice_cols(const Tensor & x, std::size_t begin, std::size_t count);
  /// x[n x t x c] -> [n x c] at time index t.
  Tensor time_slice(const Tensor & x, std::size_t t);
  /// k tensors of [n x c] -> [n x k x c].
  Tensor stack_time(std::span<const Tensor> steps);
  /// Running sum along axis 1 of x[n x t x c].
  Tensor cumsum_time(const Tensor & x);
  Tensor reshape(const Tensor & x, Shape shape);

  // ---- reductions -----------------------------------------------------
  Tensor sum(const Tensor & x);
  /// Euclidean norm over the last axis. The subgradient at a zero vector is 0.
  Tensor row_norm(const Tensor & x);
  /// Sum of x[i] * weights[i], weights are constants.
  Tensor weighted_sum(const Tensor & x, std::span<const double> weights);

  // ---- tape control ---------------------------------------------------
  /// Registers a custom op. `output` must already hold the forward result.
  /// The closure should read output.grad() and accumulate into its inputs.
  Tensor record(
    std::string_view op, std::vector<Tensor> inputs, Tensor output, BackwardFn backward);

  void backward(const Tensor & loss);
  void clear() { entries_.clear(); }

  std::size_t size() const noexcept { return entries_.size(); }
  std::string_view op_name(std::size_t index) const { return entries_.at(index).op; }
  /// Entry indices in the order the last backward() visited them.
  const std::vector<std::size_t> & last_backward_order() const noexcept { return visit_order_; }

  /// True if any input requires a gradient and the tape is recording.
  bool needs_grad(std::initializer_list<const Tensor *> inputs) const;

private:
  struct Entry
  {
    std::string_view op;
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;
  };

  std::vector<Entry> entries_;
  std::vector<std::size_t> visit_order_;
  bool recording_;
};

/// Adds `delta` into t's gradient if t requires one.
void accumulate_grad(const Tensor & t, std::span<const double> delta);
}  // namespace grip

#endif  // GRIP__TENSOR_HPP_
