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

#include "grip/tensor.hpp"

#include "grip/error.hpp"
#include "grip/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

namespace grip
{
namespace
{
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

ConstMatMap as_matrix(std::span<const double> v, std::size_t rows, std::size_t cols)
{
  return ConstMatMap(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

MatMap as_matrix(std::span<double> v, std::size_t rows, std::size_t cols)
{
  return MatMap(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void require_rank(const Tensor & t, std::size_t rank, const char * op, const char * arg)
{
  if (t.rank() != rank) {
    std::ostringstream os;
    os << op << ": " << arg << " must have rank " << rank << ", got shape " << shape_to_string(t.shape());
    throw DimensionError(os.str());
  }
}

void require_same_shape(const Tensor & a, const Tensor & b, const char * op)
{
  if (a.shape() != b.shape()) {
    throw DimensionError(
      std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) + " vs " +
      shape_to_string(b.shape()));
  }
}

// Shared kernel for linear and conv_channel_mix.
Tensor linear_rows(
  Tape & tape, std::string_view op, const Tensor & x, std::size_t rows, std::size_t in,
  const Tensor & w, const Tensor & bias, Shape out_shape)
{
  const std::size_t out = w.dim(0);
  Tensor y(std::move(out_shape));
  auto Y = as_matrix(y.values(), rows, out);
  Y.noalias() = as_matrix(x.values(), rows, in) * as_matrix(w.values(), out, in).transpose();
  if (bias.defined()) {
    Y.rowwise() += ConstVecMap(bias.values().data(), static_cast<Eigen::Index>(out)).transpose();
  }
  std::vector<Tensor> inputs{x, w};
  if (bias.defined()) inputs.push_back(bias);
  return tape.record(op, std::move(inputs), y, [x, w, bias, y, rows, in, out]() {
    const auto G = as_matrix(y.grad(), rows, out);
    if (x.requires_grad()) {
      as_matrix(x.grad_mut(), rows, in).noalias() += G * as_matrix(w.values(), out, in);
    }
    if (w.requires_grad()) {
      as_matrix(w.grad_mut(), out, in).noalias() += G.transpose() * as_matrix(x.values(), rows, in);
    }
    if (bias.defined() && bias.requires_grad()) {
      VecMap(bias.grad_mut().data(), static_cast<Eigen::Index>(out)) += G.colwise().sum().transpose();
    }
  });
}

template <class Fwd, class Deriv>
Tensor unary(Tape & tape, std::string_view op, const Tensor & x, Fwd fwd, Deriv deriv)
{
  Tensor y(x.shape());
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < xv.size(); ++i) yv[i] = fwd(xv[i]);
  return tape.record(op, {x}, y, [x, y, deriv]() {
    if (!x.requires_grad()) return;
    auto g = y.grad();
    auto xv = x.values();
    auto yv = y.values();
    auto dx = x.grad_mut();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[i] * deriv(xv[i], yv[i]);
  });
}
}  // namespace

// ---------------------------------------------------------------------------
// Tensor

std::size_t shape_numel(const Shape & shape) noexcept
{
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape & shape)
{
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor() = default;

Tensor::Tensor(Shape shape, bool requires_grad) : impl_(std::make_shared<Impl>())
{
  impl_->data.assign(shape_numel(shape), 0.0);
  impl_->shape = std::move(shape);
  impl_->requires_grad = requires_grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad)
: impl_(std::make_shared<Impl>())
{
  if (shape_numel(shape) != values.size()) {
    throw DimensionError(
      "tensor shape " + shape_to_string(shape) + " needs " + std::to_string(shape_numel(shape)) +
      " values, got " + std::to_string(values.size()));
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(values);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return Tensor(std::move(shape), requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad)
{
  Tensor t(std::move(shape), requires_grad);
  std::fill(t.impl_->data.begin(), t.impl_->data.end(), value);
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) { return full({1}, value, requires_grad); }

const Shape & Tensor::shape() const
{
  if (!impl_) throw UsageError("access to an undefined tensor");
  return impl_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const
{
  const auto & s = shape();
  if (axis >= s.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + shape_to_string(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return shape_numel(shape()); }

std::span<double> Tensor::values()
{
  shape();
  return impl_->data;
}

std::span<const double> Tensor::values() const
{
  shape();
  return impl_->data;
}

double Tensor::item() const
{
  if (numel() != 1) throw DimensionError("item() on non-scalar tensor " + shape_to_string(shape()));
  return impl_->data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }

void Tensor::set_requires_grad(bool flag)
{
  shape();
  impl_->requires_grad = flag;
}

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::span<const double> Tensor::grad() const
{
  shape();
  return impl_->grad;
}

std::span<double> Tensor::grad_mut() const
{
  shape();
  if (impl_->grad.size() != impl_->data.size()) impl_->grad.assign(impl_->data.size(), 0.0);
  return impl_->grad;
}

void Tensor::zero_grad() const
{
  if (has_grad()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

void Tensor::drop_grad() const
{
  if (impl_) impl_->grad.clear();
}

Tensor Tensor::clone() const { return Tensor(shape(), impl_->data, false); }

void accumulate_grad(const Tensor & t, std::span<const double> delta)
{
  if (!t.requires_grad()) return;
  auto g = t.grad_mut();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += delta[i];
}

// ---------------------------------------------------------------------------
// Tape bookkeeping

bool Tape::needs_grad(std::initializer_list<const Tensor *> inputs) const
{
  if (!recording_) return false;
  return std::any_of(inputs.begin(), inputs.end(), [](const Tensor * t) {
    return t && t->requires_grad();
  });
}

Tensor Tape::record(std::string_view op, std::vector<Tensor> inputs, Tensor output, BackwardFn backward)
{
  const bool any = std::any_of(inputs.begin(), inputs.end(), [](const Tensor & t) {
    return t.requires_grad();
  });
  if (!recording_ || !any) return output;
  output.set_requires_grad(true);
  entries_.push_back(Entry{op, std::move(inputs), output, std::move(backward)});
  return output;
}

void Tape::backward(const Tensor & loss)
{
  if (loss.numel() != 1) {
    throw UsageError("backward() needs a scalar loss, got shape " + shape_to_string(loss.shape()));
  }
  if (!loss.requires_grad()) {
    throw UsageError("backward() on a loss that is not connected to any trainable tensor");
  }
  for (auto & e : entries_) e.output.zero_grad();
  loss.grad_mut()[0] += 1.0;

  visit_order_.clear();
  visit_order_.reserve(entries_.size());
  for (std::size_t i = entries_.size(); i-- > 0;) {
    visit_order_.push_back(i);
    if (entries_[i].output.has_grad()) entries_[i].backward();
  }
}

// ---------------------------------------------------------------------------
// Linear algebra

Tensor Tape::matmul(const Tensor & a, const Tensor & b)
{
  require_rank(a, 2, "matmul", "a");
  require_rank(b, 2, "matmul", "b");
  if (a.dim(1) != b.dim(0)) {
    throw DimensionError(
      "matmul: inner dimensions disagree, " + shape_to_string(a.shape()) + " x " +
      shape_to_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), p = b.dim(1);
  Tensor y({m, p});
  as_matrix(y.values(), m, p).noalias() = as_matrix(a.values(), m, k) * as_matrix(b.values(), k, p);
  return record("matmul", {a, b}, y, [a, b, y, m, k, p]() {
    const auto G = as_matrix(y.grad(), m, p);
    if (a.requires_grad()) {
      as_matrix(a.grad_mut(), m, k).noalias() += G * as_matrix(b.values(), k, p).transpose();
    }
    if (b.requires_grad()) {
      as_matrix(b.grad_mut(), k, p).noalias() += as_matrix(a.values(), m, k).transpose() * G;
    }
  });
}

Tensor Tape::linear(const Tensor & x, const Tensor & w, const Tensor & bias)
{
  require_rank(x, 2, "linear", "x");
  require_rank(w, 2, "linear", "w");
  if (x.dim(1) != w.dim(1)) {
    throw DimensionError(
      "linear: input width " + shape_to_string(x.shape()) + " does not match weight " +
      shape_to_string(w.shape()));
  }
  if (bias.defined() && bias.numel() != w.dim(0)) {
    throw DimensionError("linear: bias " + shape_to_string(bias.shape()) + " vs weight " + shape_to_string(w.shape()));
  }
  return linear_rows(*this, "linear", x, x.dim(0), x.dim(1), w, bias, {x.dim(0), w.dim(0)});
}

Tensor Tape::conv_channel_mix(const Tensor & x, const Tensor & w, const Tensor & bias)
{
  require_rank(x, 3, "conv_channel_mix", "x");
  require_rank(w, 2, "conv_channel_mix", "w");
  if (x.dim(2) != w.dim(1)) {
    throw DimensionError(
      "conv_channel_mix: input channels of " + shape_to_string(x.shape()) + " do not match kernel " +
      shape_to_string(w.shape()));
  }
  if (bias.defined() && bias.numel() != w.dim(0)) {
    throw DimensionError("conv_channel_mix: bias " + shape_to_string(bias.shape()) + " vs kernel " + shape_to_string(w.shape()));
  }
  const std::size_t n = x.dim(0), t = x.dim(1);
  return linear_rows(*this, "conv_channel_mix", x, n * t, x.dim(2), w, bias, {n, t, w.dim(0)});
}

Tensor Tape::conv_temporal(
  const Tensor & x, const Tensor & w, const Tensor & bias, std::size_t stride, std::size_t padding)
{
  require_rank(x, 3, "conv_temporal", "x");
  require_rank(w, 3, "conv_temporal", "w");
  constexpr std::size_t kernel = 3;
  const std::size_t n = x.dim(0), t = x.dim(1), c = x.dim(2);
  const std::size_t c_out = w.dim(0);
  if (w.dim(1) != c || w.dim(2) != kernel) {
    throw DimensionError(
      "conv_temporal: kernel " + shape_to_string(w.shape()) + " does not fit input " + shape_to_string(x.shape()));
  }
  if (stride == 0) throw ParameterError("conv_temporal: stride must be >= 1");
  if (t + 2 * padding < kernel) {
    throw DimensionError(
      "conv_temporal: sequence length " + std::to_string(t) + " with padding " + std::to_string(padding) +
      " is shorter than the kernel");
  }
  if (bias.defined() && bias.numel() != c_out) {
    throw DimensionError("conv_temporal: bias " + shape_to_string(bias.shape()) + " vs kernel " + shape_to_string(w.shape()));
  }
  const std::size_t t_out = (t + 2 * padding - kernel) / stride + 1;
  const std::size_t rows = n * t_out;
  const std::size_t width = kernel * c;

  // im2col: column block k holds x at time tau*stride + k - padding.
  auto cols = std::make_shared<std::vector<double>>(rows * width, 0.0);
  auto xv = x.values();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t tau = 0; tau < t_out; ++tau) {
      for (std::size_t k = 0; k < kernel; ++k) {
        const std::ptrdiff_t s = static_cast<std::ptrdiff_t>(tau * stride + k) - static_cast<std::ptrdiff_t>(padding);
        if (s < 0 || s >= static_cast<std::ptrdiff_t>(t)) continue;
        std::copy_n(
          xv.begin() + static_cast<std::ptrdiff_t>((i * t + static_cast<std::size_t>(s)) * c), c,
          cols->begin() + static_cast<std::ptrdiff_t>((i * t_out + tau) * width + k * c));
      }
    }
  }
  // Kernel rearranged to [c_out x (k, c)].
  auto wcol = std::make_shared<RowMat>(c_out, width);
  auto wv = w.values();
  for (std::size_t o = 0; o < c_out; ++o)
    for (std::size_t ci = 0; ci < c; ++ci)
      for (std::size_t k = 0; k < kernel; ++k) (*wcol)(o, k * c + ci) = wv[(o * c + ci) * kernel + k];

  Tensor y({n, t_out, c_out});
  auto Y = as_matrix(y.values(), rows, c_out);
  Y.noalias() = as_matrix(std::span<const double>(*cols), rows, width) * wcol->transpose();
  if (bias.defined()) {
    Y.rowwise() += ConstVecMap(bias.values().data(), static_cast<Eigen::Index>(c_out)).transpose();
  }

  std::vector<Tensor> inputs{x, w};
  if (bias.defined()) inputs.push_back(bias);
  return record(
    "conv_temporal", std::move(inputs), y,
    [x, w, bias, y, cols, wcol, n, t, c, c_out, t_out, rows, width, stride, padding]() {
      const auto G = as_matrix(y.grad(), rows, c_out);
      if (x.requires_grad()) {
        RowMat dcols = G * (*wcol);
        auto dx = x.grad_mut();
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t tau = 0; tau < t_out; ++tau) {
            for (std::size_t k = 0; k < kernel; ++k) {
              const std::ptrdiff_t s =
                static_cast<std::ptrdiff_t>(tau * stride + k) - static_cast<std::ptrdiff_t>(padding);
              if (s < 0 || s >= static_cast<std::ptrdiff_t>(t)) continue;
              const double * src = dcols.data() + (i * t_out + tau) * width + k * c;
              double * dst = dx.data() + (i * t + static_cast<std::size_t>(s)) * c;
              for (std::size_t ci = 0; ci < c; ++ci) dst[ci] += src[ci];
            }
          }
        }
      }
      if (w.requires_grad()) {
        RowMat dwcol = G.transpose() * as_matrix(std::span<const double>(*cols), rows, width);
        auto dw = w.grad_mut();
        for (std::size_t o = 0; o < c_out; ++o)
          for (std::size_t ci = 0; ci < c; ++ci)
            for (std::size_t k = 0; k < kernel; ++k) dw[(o * c + ci) * kernel + k] += dwcol(o, k * c + ci);
      }
      if (bias.defined() && bias.requires_grad()) {
        VecMap(bias.grad_mut().data(), static_cast<Eigen::Index>(c_out)) += G.colwise().sum().transpose();
      }
    });
}

// ---------------------------------------------------------------------------
// Normalization and regularization

Tensor Tape::batch_norm(
  const Tensor & x, const Tensor & scale, const Tensor & shift, BatchNormStats & stats, Mode mode,
  const BatchNormOptions & options)
{
  if (x.rank() < 2) throw DimensionError("batch_norm: input needs a channel axis, got " + shape_to_string(x.shape()));
  const std::size_t c = x.shape().back();
  const std::size_t rows = x.numel() / c;
  if (scale.numel() != c || shift.numel() != c) {
    throw DimensionError(
      "batch_norm: scale/shift lengths " + std::to_string(scale.numel()) + "/" + std::to_string(shift.numel()) +
      " do not match channel count " + std::to_string(c));
  }
  if (stats.mean.size() != c || stats.var.size() != c) {
    throw DimensionError("batch_norm: running statistics sized for a different channel count");
  }
  if (rows == 0) throw DimensionError("batch_norm: empty input");

  const auto X = as_matrix(x.values(), rows, c);
  Eigen::VectorXd mean(c), inv_std(c);
  if (mode == Mode::train) {
    mean = X.colwise().mean().transpose();
    Eigen::VectorXd var = (X.rowwise() - mean.transpose()).array().square().colwise().mean().transpose();
    inv_std = (var.array() + options.eps).rsqrt();
    const double unbias = rows > 1 ? static_cast<double>(rows) / static_cast<double>(rows - 1) : 1.0;
    for (std::size_t j = 0; j < c; ++j) {
      stats.mean[j] = (1.0 - options.momentum) * stats.mean[j] + options.momentum * mean(j);
      stats.var[j] = (1.0 - options.momentum) * stats.var[j] + options.momentum * var(j) * unbias;
    }
  } else {
    for (std::size_t j = 0; j < c; ++j) {
      mean(j) = stats.mean[j];
      inv_std(j) = 1.0 / std::sqrt(stats.var[j] + options.eps);
    }
  }

  auto xhat = std::make_shared<RowMat>((X.rowwise() - mean.transpose()) * inv_std.asDiagonal());
  Tensor y(x.shape());
  const ConstVecMap gamma(scale.values().data(), static_cast<Eigen::Index>(c));
  const ConstVecMap beta(shift.values().data(), static_cast<Eigen::Index>(c));
  as_matrix(y.values(), rows, c) = ((*xhat) * gamma.asDiagonal()).rowwise() + beta.transpose();

  const bool batch_stats = mode == Mode::train;
  return record("batch_norm", {x, scale, shift}, y, [x, scale, shift, y, xhat, inv_std, rows, c, batch_stats]() {
    const auto G = as_matrix(y.grad(), rows, c);
    if (scale.requires_grad()) {
      VecMap(scale.grad_mut().data(), static_cast<Eigen::Index>(c)) +=
        (G.array() * xhat->array()).colwise().sum().matrix().transpose();
    }
    if (shift.requires_grad()) {
      VecMap(shift.grad_mut().data(), static_cast<Eigen::Index>(c)) += G.colwise().sum().transpose();
    }
    if (!x.requires_grad()) return;
    const ConstVecMap gamma(scale.values().data(), static_cast<Eigen::Index>(c));
    RowMat dxhat = G * gamma.asDiagonal();
    auto DX = as_matrix(x.grad_mut(), rows, c);
    if (batch_stats) {
      const double r = static_cast<double>(rows);
      Eigen::RowVectorXd sum_d = dxhat.colwise().sum();
      Eigen::RowVectorXd sum_dx = (dxhat.array() * xhat->array()).colwise().sum();
      RowMat centered = (dxhat * r).rowwise() - sum_d;
      centered -= (*xhat) * sum_dx.asDiagonal();
      DX += (centered * inv_std.asDiagonal()) / r;
    } else {
      DX += dxhat * inv_std.asDiagonal();
    }
  });
}

Tensor Tape::dropout(const Tensor & x, double p, Mode mode, Rng & rng)
{
  if (!(p >= 0.0 && p < 1.0)) {
    throw ParameterError("dropout: probability must lie in [0, 1), got " + std::to_string(p));
  }
  if (mode == Mode::eval || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  auto keep = std::make_shared<std::vector<double>>(x.numel());
  for (auto & k : *keep) k = rng.bernoulli(p) ? 0.0 : keep_scale;
  Tensor y(x.shape());
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = xv[i] * (*keep)[i];
  return record("dropout", {x}, y, [x, y, keep]() {
    if (!x.requires_grad()) return;
    auto g = y.grad();
    auto dx = x.grad_mut();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g[i] * (*keep)[i];
  });
}

// ---------------------------------------------------------------------------
// Elementwise

Tensor Tape::add(const Tensor & a, const Tensor & b)
{
  require_same_shape(a, b, "add");
  Tensor y(a.shape());
  auto av = a.values(), bv = b.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = av[i] + bv[i];
  return record("add", {a, b}, y, [a, b, y]() {
    accumulate_grad(a, y.grad());
    accumulate_grad(b, y.grad());
  });
}

Tensor Tape::sub(const Tensor & a, const Tensor & b)
{
  require_same_shape(a, b, "sub");
  Tensor y(a.shape());
  auto av = a.values(), bv = b.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = av[i] - bv[i];
  return record("sub", {a, b}, y, [a, b, y]() {
    accumulate_grad(a, y.grad());
    if (b.requires_grad()) {
      auto g = y.grad();
      auto db = b.grad_mut();
      for (std::size_t i = 0; i < db.size(); ++i) db[i] -= g[i];
    }
  });
}

Tensor Tape::mul(const Tensor & a, const Tensor & b)
{
  require_same_shape(a, b, "mul");
  Tensor y(a.shape());
  auto av = a.values(), bv = b.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = av[i] * bv[i];
  return record("mul", {a, b}, y, [a, b, y]() {
    auto g = y.grad();
    if (a.requires_grad()) {
      auto bv = b.values();
      auto da = a.grad_mut();
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[i] * bv[i];
    }
    if (b.requires_grad()) {
      auto av = a.values();
      auto db = b.grad_mut();
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += g[i] * av[i];
    }
  });
}

Tensor Tape::scale(const Tensor & x, double factor)
{
  return unary(
    *this, "scale", x, [factor](double v) { return v * factor; },
    [factor](double, double) { return factor; });
}

Tensor Tape::tanh(const Tensor & x)
{
  return unary(
    *this, "tanh", x, [](double v) { return std::tanh(v); },
    [](double, double y) { return 1.0 - y * y; });
}

Tensor Tape::sigmoid(const Tensor & x)
{
  return unary(
    *this, "sigmoid", x,
    [](double v) {
      if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
      const double e = std::exp(v);
      return e / (1.0 + e);
    },
    [](double, double y) { return y * (1.0 - y); });
}

Tensor Tape::relu(const Tensor & x)
{
  return unary(
    *this, "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
    [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------
// Layout

Tensor Tape::slice_cols(const Tensor & x, std::size_t begin, std::size_t count)
{
  require_rank(x, 2, "slice_cols", "x");
  const std::size_t rows = x.dim(0), cols = x.dim(1);
  if (begin + count > cols) {
    throw DimensionError(
      "slice_cols: columns [" + std::to_string(begin) + ", " + std::to_string(begin + count) + ") out of range for " +
      shape_to_string(x.shape()));
  }
  Tensor y({rows, count});
  as_matrix(y.values(), rows, count) = as_matrix(x.values(), rows, cols).middleCols(
    static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count));
  return record("slice_cols", {x}, y, [x, y, rows, cols, begin, count]() {
    if (!x.requires_grad()) return;
    as_matrix(x.grad_mut(), rows, cols).middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count)) +=
      as_matrix(y.grad(), rows, count);
  });
}

Tensor Tape::time_slice(const Tensor & x, std::size_t t)
{
  require_rank(x, 3, "time_slice", "x");
  const std::size_t n = x.dim(0), steps = x.dim(1), c = x.dim(2);
  if (t >= steps) {
    throw DimensionError("time_slice: index " + std::to_string(t) + " out of range for " + shape_to_string(x.shape()));
  }
  Tensor y({n, c});
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < n; ++i) std::copy_n(xv.data() + (i * steps + t) * c, c, yv.data() + i * c);
  return record("time_slice", {x}, y, [x, y, n, steps, c, t]() {
    if (!x.requires_grad()) return;
    auto g = y.grad();
    auto dx = x.grad_mut();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) dx[(i * steps + t) * c + j] += g[i * c + j];
  });
}

Tensor Tape::stack_time(std::span<const Tensor> steps)
{
  if (steps.empty()) throw DimensionError("stack_time: no tensors to stack");
  require_rank(steps[0], 2, "stack_time", "steps[0]");
  const std::size_t n = steps[0].dim(0), c = steps[0].dim(1), k = steps.size();
  for (const auto & s : steps) require_same_shape(s, steps[0], "stack_time");
  Tensor y({n, k, c});
  auto yv = y.values();
  for (std::size_t t = 0; t < k; ++t) {
    auto sv = steps[t].values();
    for (std::size_t i = 0; i < n; ++i) std::copy_n(sv.data() + i * c, c, yv.data() + (i * k + t) * c);
  }
  std::vector<Tensor> inputs(steps.begin(), steps.end());
  return record("stack_time", inputs, y, [inputs, y, n, k, c]() {
    auto g = y.grad();
    for (std::size_t t = 0; t < k; ++t) {
      if (!inputs[t].requires_grad()) continue;
      auto ds = inputs[t].grad_mut();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < c; ++j) ds[i * c + j] += g[(i * k + t) * c + j];
    }
  });
}

Tensor Tape::cumsum_time(const Tensor & x)
{
  require_rank(x, 3, "cumsum_time", "x");
  const std::size_t n = x.dim(0), steps = x.dim(1), c = x.dim(2);
  Tensor y(x.shape());
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      double run = 0.0;
      for (std::size_t t = 0; t < steps; ++t) {
        run += xv[(i * steps + t) * c + j];
        yv[(i * steps + t) * c + j] = run;
      }
    }
  }
  return record("cumsum_time", {x}, y, [x, y, n, steps, c]() {
    if (!x.requires_grad()) return;
    auto g = y.grad();
    auto dx = x.grad_mut();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        double run = 0.0;
        for (std::size_t t = steps; t-- > 0;) {
          run += g[(i * steps + t) * c + j];
          dx[(i * steps + t) * c + j] += run;
        }
      }
    }
  });
}

Tensor Tape::reshape(const Tensor & x, Shape shape)
{
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: cannot view " + shape_to_string(x.shape()) + " as " + shape_to_string(shape));
  }
  auto xv = x.values();
  Tensor y(std::move(shape), std::vector<double>(xv.begin(), xv.end()));
  return record("reshape", {x}, y, [x, y]() { accumulate_grad(x, y.grad()); });
}

// ---------------------------------------------------------------------------
// Reductions

Tensor Tape::sum(const Tensor & x)
{
  auto xv = x.values();
  Tensor y = Tensor::scalar(std::accumulate(xv.begin(), xv.end(), 0.0));
  return record("sum", {x}, y, [x, y]() {
    if (!x.requires_grad()) return;
    const double g = y.grad()[0];
    for (auto & d : x.grad_mut()) d += g;
  });
}

Tensor Tape::row_norm(const Tensor & x)
{
  if (x.rank() < 1) throw DimensionError("row_norm: rank-0 input");
  const std::size_t c = x.shape().back();
  const std::size_t rows = x.numel() / c;
  Shape out_shape(x.shape().begin(), x.shape().end() - 1);
  if (out_shape.empty()) out_shape.push_back(1);
  Tensor y(out_shape);
  auto xv = x.values();
  auto yv = y.values();
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += xv[r * c + j] * xv[r * c + j];
    yv[r] = std::sqrt(s);
  }
  return record("row_norm", {x}, y, [x, y, rows, c]() {
    if (!x.requires_grad()) return;
    auto g = y.grad();
    auto xv = x.values();
    auto yv = y.values();
    auto dx = x.grad_mut();
    for (std::size_t r = 0; r < rows; ++r) {
      if (yv[r] == 0.0) continue;
      const double f = g[r] / yv[r];
      for (std::size_t j = 0; j < c; ++j) dx[r * c + j] += f * xv[r * c + j];
    }
  });
}

Tensor Tape::weighted_sum(const Tensor & x, std::span<const double> weights)
{
  if (weights.size() != x.numel()) {
    throw DimensionError(
      "weighted_sum: " + std::to_string(weights.size()) + " weights for tensor " + shape_to_string(x.shape()));
  }
  auto xv = x.values();
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i] * weights[i];
  Tensor y = Tensor::scalar(s);
  auto w = std::make_shared<std::vector<double>>(weights.begin(), weights.end());
  return record("weighted_sum", {x}, y, [x, y, w]() {
    if (!x.requires_grad()) return;
    const double g = y.grad()[0];
    auto dx = x.grad_mut();
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += g * (*w)[i];
  });
}
}  // namespace grip
