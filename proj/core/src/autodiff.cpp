/* Copyright 2026 The SmokeyNet Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "smokeynet/autodiff.hpp"

#include <cmath>

#include <fmt/format.h>

#include "smokeynet/error.hpp"

namespace smokeynet::nn {

Parameter& ParameterSet::add(const std::string& name, Matrix value) {
  if (params_.count(name)) fail(ErrorCode::kInvalidArgument, "duplicate parameter " + name);
  auto& p = params_[name];
  p.value = std::move(value);
  p.zero_grad();
  return p;
}

Parameter& ParameterSet::at(const std::string& name) {
  const auto it = params_.find(name);
  if (it == params_.end()) fail(ErrorCode::kNotFound, "unknown parameter " + name);
  return it->second;
}

const Parameter& ParameterSet::at(const std::string& name) const {
  const auto it = params_.find(name);
  if (it == params_.end()) fail(ErrorCode::kNotFound, "unknown parameter " + name);
  return it->second;
}

size_t ParameterSet::scalar_count() const {
  size_t n = 0;
  for (const auto& [name, p] : params_) n += static_cast<size_t>(p.value.size());
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& [name, p] : params_) p.zero_grad();
}

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

Var Tape::constant(Matrix value) {
  nodes_.push_back({std::move(value), {}, {}, nullptr, false});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(Matrix value) {
  nodes_.push_back({std::move(value), {}, {}, nullptr, record_});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(Parameter& p) {
  if (const auto it = param_nodes_.find(&p); it != param_nodes_.end()) return {this, it->second};
  nodes_.push_back({p.value, {}, {}, &p, record_});
  const int id = static_cast<int>(nodes_.size()) - 1;
  param_nodes_.emplace(&p, id);
  return {this, id};
}

Var Tape::push(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn) {
  bool rg = false;
  if (record_) {
    for (const auto& v : inputs) rg = rg || nodes_[static_cast<size_t>(v.id())].requires_grad;
  }
  nodes_.push_back({std::move(value), {}, rg ? std::move(fn) : BackwardFn{}, nullptr, rg});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::push(Matrix value, const std::vector<Var>& inputs, BackwardFn fn) {
  bool rg = false;
  if (record_) {
    for (const auto& v : inputs) rg = rg || nodes_[static_cast<size_t>(v.id())].requires_grad;
  }
  nodes_.push_back({std::move(value), {}, rg ? std::move(fn) : BackwardFn{}, nullptr, rg});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

void Tape::backward(Var root) {
  if (!record_) fail(ErrorCode::kInvalidArgument, "backward on a non-recording tape");
  if (root.tape() != this || root.rows() != 1 || root.cols() != 1) {
    fail(ErrorCode::kShapeMismatch, "backward needs a 1x1 root on this tape");
  }
  auto& r = nodes_[static_cast<size_t>(root.id())];
  if (!r.requires_grad) return;
  r.grad = Matrix::Ones(1, 1);
  for (int i = root.id(); i >= 0; --i) {
    auto& node = nodes_[static_cast<size_t>(i)];
    if (node.grad.size() == 0) continue;
    if (node.backward) node.backward(*this, node.grad);
    if (node.param != nullptr) {
      if (node.param->grad.size() == 0) node.param->zero_grad();
      node.param->grad += node.grad;
    }
  }
}

namespace {

void check_same_shape(Var a, Var b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    fail(ErrorCode::kShapeMismatch, fmt::format("{}: {}x{} vs {}x{}", op, a.rows(), a.cols(),
                                                b.rows(), b.cols()));
  }
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) {
    fail(ErrorCode::kShapeMismatch, fmt::format("matmul: {}x{} * {}x{}", a.rows(), a.cols(),
                                                b.rows(), b.cols()));
  }
  Tape& t = *a.tape();
  return t.push(a.value() * b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.requires_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

Var matmul_nt(Var a, Var b) {
  if (a.cols() != b.cols()) {
    fail(ErrorCode::kShapeMismatch, fmt::format("matmul_nt: {}x{} * ({}x{})^T", a.rows(),
                                                a.cols(), b.rows(), b.cols()));
  }
  Tape& t = *a.tape();
  return t.push(a.value() * b.value().transpose(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value());
    if (t.requires_grad(b)) t.accumulate(b, g.transpose() * a.value());
  });
}

Var linear(Var x, Var weight, Var bias) {
  if (x.cols() != weight.cols() || bias.rows() != 1 || bias.cols() != weight.rows()) {
    fail(ErrorCode::kShapeMismatch,
         fmt::format("linear: input {}x{}, weight {}x{}, bias {}x{}", x.rows(), x.cols(),
                     weight.rows(), weight.cols(), bias.rows(), bias.cols()));
  }
  Tape& t = *x.tape();
  Matrix y = x.value() * weight.value().transpose();
  y.rowwise() += bias.value().row(0);
  return t.push(std::move(y), {x, weight, bias}, [x, weight, bias](Tape& t, const Matrix& g) {
    if (t.requires_grad(x)) t.accumulate(x, g * weight.value());
    if (t.requires_grad(weight)) t.accumulate(weight, g.transpose() * x.value());
    if (t.requires_grad(bias)) t.accumulate(bias, g.colwise().sum());
  });
}

Var add(Var a, Var b) {
  check_same_shape(a, b, "add");
  Tape& t = *a.tape();
  return t.push(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  check_same_shape(a, b, "sub");
  Tape& t = *a.tape();
  return t.push(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

Var hadamard(Var a, Var b) {
  check_same_shape(a, b, "hadamard");
  Tape& t = *a.tape();
  return t.push(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.requires_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
    if (t.requires_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

Var scale(Var a, double s) {
  Tape& t = *a.tape();
  return t.push(a.value() * s, {a}, [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

Var add_row(Var a, Var row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    fail(ErrorCode::kShapeMismatch, fmt::format("add_row: {}x{} + {}x{}", a.rows(), a.cols(),
                                                row.rows(), row.cols()));
  }
  Tape& t = *a.tape();
  Matrix y = a.value();
  y.rowwise() += row.value().row(0);
  return t.push(std::move(y), {a, row}, [a, row](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (t.requires_grad(row)) t.accumulate(row, g.colwise().sum());
  });
}

Var relu(Var a) {
  Tape& t = *a.tape();
  return t.push(a.value().cwiseMax(0.0), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, (a.value().array() > 0.0).select(g, 0.0));
  });
}

Var sigmoid(Var a) {
  Tape& t = *a.tape();
  Matrix y = a.value().unaryExpr([](double z) { return stable_sigmoid(z); });
  const int out_id = static_cast<int>(t.size());
  return t.push(std::move(y), {a}, [a, out_id](Tape& t, const Matrix& g) {
    const Matrix& s = t.value(out_id);
    t.accumulate(a, g.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix())));
  });
}

Var tanh(Var a) {
  Tape& t = *a.tape();
  Matrix y = a.value().array().tanh().matrix();
  const int out_id = static_cast<int>(t.size());
  return t.push(std::move(y), {a}, [a, out_id](Tape& t, const Matrix& g) {
    const Matrix& y = t.value(out_id);
    t.accumulate(a, g.cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) fail(ErrorCode::kInvalidArgument, "concat_cols: no inputs");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) fail(ErrorCode::kShapeMismatch, "concat_cols: row count mismatch");
    cols += p.cols();
  }
  Matrix y(rows, cols);
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    y.middleCols(offset, p.cols()) = p.value();
    offset += p.cols();
  }
  Tape& t = *parts.front().tape();
  return t.push(std::move(y), parts, [parts](Tape& t, const Matrix& g) {
    Eigen::Index offset = 0;
    for (const auto& p : parts) {
      if (t.requires_grad(p)) t.accumulate(p, g.middleCols(offset, p.cols()));
      offset += p.cols();
    }
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) fail(ErrorCode::kInvalidArgument, "concat_rows: no inputs");
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) fail(ErrorCode::kShapeMismatch, "concat_rows: column count mismatch");
    rows += p.rows();
  }
  Matrix y(rows, cols);
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    y.middleRows(offset, p.rows()) = p.value();
    offset += p.rows();
  }
  Tape& t = *parts.front().tape();
  return t.push(std::move(y), parts, [parts](Tape& t, const Matrix& g) {
    Eigen::Index offset = 0;
    for (const auto& p : parts) {
      if (t.requires_grad(p)) t.accumulate(p, g.middleRows(offset, p.rows()));
      offset += p.rows();
    }
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    fail(ErrorCode::kShapeMismatch, "slice_cols: range out of bounds");
  }
  Tape& t = *a.tape();
  return t.push(a.value().middleCols(start, count), {a},
                [a, start, count](Tape& t, const Matrix& g) {
                  Matrix full = Matrix::Zero(a.rows(), a.cols());
                  full.middleCols(start, count) = g;
                  t.accumulate(a, full);
                });
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    fail(ErrorCode::kShapeMismatch, "slice_rows: range out of bounds");
  }
  Tape& t = *a.tape();
  return t.push(a.value().middleRows(start, count), {a},
                [a, start, count](Tape& t, const Matrix& g) {
                  Matrix full = Matrix::Zero(a.rows(), a.cols());
                  full.middleRows(start, count) = g;
                  t.accumulate(a, full);
                });
}

Var broadcast_rows(Var row, Eigen::Index n) {
  if (row.rows() != 1) fail(ErrorCode::kShapeMismatch, "broadcast_rows: input must be 1 x k");
  Tape& t = *row.tape();
  return t.push(row.value().replicate(n, 1), {row},
                [row](Tape& t, const Matrix& g) { t.accumulate(row, g.colwise().sum()); });
}

Var softmax_rows(Var a) {
  Tape& t = *a.tape();
  Matrix y = a.value();
  for (Eigen::Index r = 0; r < y.rows(); ++r) {
    const double m = y.row(r).maxCoeff();
    y.row(r) = (y.row(r).array() - m).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  const int out_id = static_cast<int>(t.size());
  return t.push(std::move(y), {a}, [a, out_id](Tape& t, const Matrix& g) {
    const Matrix& p = t.value(out_id);
    const Eigen::VectorXd dot = g.cwiseProduct(p).rowwise().sum();
    Matrix dx = g;
    dx.colwise() -= dot;
    t.accumulate(a, dx.cwiseProduct(p));
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const Eigen::Index d = x.cols();
  if (gain.rows() != 1 || gain.cols() != d || bias.rows() != 1 || bias.cols() != d) {
    fail(ErrorCode::kShapeMismatch, "layer_norm: gain/bias must be 1 x features");
  }
  Tape& t = *x.tape();
  const Matrix& xv = x.value();
  Matrix xhat(xv.rows(), d);
  Eigen::VectorXd inv_std(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double mu = xv.row(r).mean();
    const double var = (xv.row(r).array() - mu).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = (xv.row(r).array() - mu) * inv_std(r);
  }
  Matrix y = xhat.array().rowwise() * gain.value().row(0).array();
  y.rowwise() += bias.value().row(0);
  return t.push(std::move(y), {x, gain, bias},
                [x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                    Tape& t, const Matrix& g) {
                  if (t.requires_grad(gain)) t.accumulate(gain, g.cwiseProduct(xhat).colwise().sum());
                  if (t.requires_grad(bias)) t.accumulate(bias, g.colwise().sum());
                  if (!t.requires_grad(x)) return;
                  const double n = static_cast<double>(xhat.cols());
                  Matrix dxhat = g.array().rowwise() * gain.value().row(0).array();
                  Matrix dx(dxhat.rows(), dxhat.cols());
                  for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
                    const double s1 = dxhat.row(r).sum();
                    const double s2 = dxhat.row(r).dot(xhat.row(r));
                    dx.row(r) = (inv_std(r) / n) *
                                (n * dxhat.row(r).array() - s1 - xhat.row(r).array() * s2);
                  }
                  t.accumulate(x, dx);
                });
}

Var sum_all(Var a) {
  Tape& t = *a.tape();
  return t.push(Matrix::Constant(1, 1, a.value().sum()), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Var mean_all(Var a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum_all(a), 1.0 / n);
}

Var bce_with_logits(Var logits, const Matrix& targets, double positive_weight) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols()) {
    fail(ErrorCode::kShapeMismatch, "bce_with_logits: target shape mismatch");
  }
  const Matrix& z = logits.value();
  if (!z.allFinite()) fail(ErrorCode::kNumeric, "bce_with_logits: non-finite logits");
  const double n = static_cast<double>(z.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double y = targets(i);
    total += positive_weight * y * softplus(-z(i)) + (1.0 - y) * softplus(z(i));
  }
  Tape& t = *logits.tape();
  return t.push(Matrix::Constant(1, 1, total / n), {logits},
                [logits, targets, positive_weight, n](Tape& t, const Matrix& g) {
                  const Matrix& z = logits.value();
                  Matrix d(z.rows(), z.cols());
                  for (Eigen::Index i = 0; i < z.size(); ++i) {
                    const double s = stable_sigmoid(z(i));
                    const double y = targets(i);
                    d(i) = positive_weight * y * (s - 1.0) + (1.0 - y) * s;
                  }
                  t.accumulate(logits, d * (g(0, 0) / n));
                });
}

Var conv2d(Var x, const FeatureShape& in, Var weight, Var bias, int kernel, int stride,
           int padding, FeatureShape* out) {
  const Eigen::Index in_rows = static_cast<Eigen::Index>(in.batch) * in.height * in.width;
  if (x.rows() != in_rows || x.cols() != in.channels) {
    fail(ErrorCode::kShapeMismatch,
         fmt::format("conv2d: input {}x{} does not match shape {}x{}x{}x{}", x.rows(), x.cols(),
                     in.batch, in.height, in.width, in.channels));
  }
  const Eigen::Index patch = static_cast<Eigen::Index>(in.channels) * kernel * kernel;
  if (weight.cols() != patch || bias.rows() != 1 || bias.cols() != weight.rows()) {
    fail(ErrorCode::kShapeMismatch, "conv2d: weight/bias shape mismatch");
  }
  FeatureShape os;
  os.batch = in.batch;
  os.height = (in.height + 2 * padding - kernel) / stride + 1;
  os.width = (in.width + 2 * padding - kernel) / stride + 1;
  os.channels = static_cast<int>(weight.rows());
  if (os.height <= 0 || os.width <= 0) fail(ErrorCode::kShapeMismatch, "conv2d: empty output");
  const Eigen::Index out_pixels = static_cast<Eigen::Index>(os.height) * os.width;
  const Eigen::Index out_rows = out_pixels * os.batch;
  const Eigen::Index in_pixels = static_cast<Eigen::Index>(in.height) * in.width;

  Matrix cols = Matrix::Zero(out_rows, patch);
  const Matrix& xv = x.value();
  for (int c = 0; c < in.channels; ++c) {
    for (int ky = 0; ky < kernel; ++ky) {
      for (int kx = 0; kx < kernel; ++kx) {
        const Eigen::Index j = (static_cast<Eigen::Index>(c) * kernel + ky) * kernel + kx;
        double* dst = cols.col(j).data();
        const double* src = xv.col(c).data();
        for (int n = 0; n < in.batch; ++n) {
          for (int oy = 0; oy < os.height; ++oy) {
            const int iy = oy * stride - padding + ky;
            if (iy < 0 || iy >= in.height) continue;
            for (int ox = 0; ox < os.width; ++ox) {
              const int ix = ox * stride - padding + kx;
              if (ix < 0 || ix >= in.width) continue;
              dst[n * out_pixels + oy * os.width + ox] = src[n * in_pixels + iy * in.width + ix];
            }
          }
        }
      }
    }
  }
  Matrix y = cols * weight.value().transpose();
  y.rowwise() += bias.value().row(0);
  if (out) *out = os;

  Tape& t = *x.tape();
  return t.push(
      std::move(y), {x, weight, bias},
      [x, weight, bias, in, os, kernel, stride, padding, cols = std::move(cols)](Tape& t,
                                                                                const Matrix& g) {
        if (t.requires_grad(weight)) t.accumulate(weight, g.transpose() * cols);
        if (t.requires_grad(bias)) t.accumulate(bias, g.colwise().sum());
        if (!t.requires_grad(x)) return;
        const Matrix dcols = g * weight.value();
        Matrix dx = Matrix::Zero(x.rows(), x.cols());
        const Eigen::Index out_pixels = static_cast<Eigen::Index>(os.height) * os.width;
        const Eigen::Index in_pixels = static_cast<Eigen::Index>(in.height) * in.width;
        for (int c = 0; c < in.channels; ++c) {
          double* dst = dx.col(c).data();
          for (int ky = 0; ky < kernel; ++ky) {
            for (int kx = 0; kx < kernel; ++kx) {
              const Eigen::Index j = (static_cast<Eigen::Index>(c) * kernel + ky) * kernel + kx;
              const double* src = dcols.col(j).data();
              for (int n = 0; n < in.batch; ++n) {
                for (int oy = 0; oy < os.height; ++oy) {
                  const int iy = oy * stride - padding + ky;
                  if (iy < 0 || iy >= in.height) continue;
                  for (int ox = 0; ox < os.width; ++ox) {
                    const int ix = ox * stride - padding + kx;
                    if (ix < 0 || ix >= in.width) continue;
                    dst[n * in_pixels + iy * in.width + ix] +=
                        src[n * out_pixels + oy * os.width + ox];
                  }
                }
              }
            }
          }
        }
        t.accumulate(x, dx);
      });
}

Var global_avg_pool(Var x, const FeatureShape& shape) {
  const Eigen::Index pixels = static_cast<Eigen::Index>(shape.height) * shape.width;
  if (x.rows() != pixels * shape.batch || x.cols() != shape.channels) {
    fail(ErrorCode::kShapeMismatch, "global_avg_pool: shape mismatch");
  }
  Matrix y(shape.batch, shape.channels);
  for (int n = 0; n < shape.batch; ++n) {
    y.row(n) = x.value().middleRows(n * pixels, pixels).colwise().mean();
  }
  Tape& t = *x.tape();
  return t.push(std::move(y), {x}, [x, shape, pixels](Tape& t, const Matrix& g) {
    Matrix dx(x.rows(), x.cols());
    const double inv = 1.0 / static_cast<double>(pixels);
    for (int n = 0; n < shape.batch; ++n) {
      dx.middleRows(n * pixels, pixels) = (g.row(n) * inv).replicate(pixels, 1);
    }
    t.accumulate(x, dx);
  });
}

}  // namespace smokeynet::nn
