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

#pragma once

#include <deque>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

// Reverse-mode differentiation over dense double matrices. A Tape records
// every op of one forward pass; backward() walks it in reverse and
// accumulates gradients into the Parameters that were read.
namespace smokeynet::nn {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

struct Parameter {
  Matrix value;
  Matrix grad;

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

// Name-ordered parameter registry. Iteration order is deterministic, which
// the optimizer and checkpoint format rely on.
class ParameterSet {
 public:
  Parameter& add(const std::string& name, Matrix value);
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  size_t size() const { return params_.size(); }
  size_t scalar_count() const;
  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Parameter> params_;
};

class Tape;

class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  // Gradient after Tape::backward; an empty matrix when nothing reached it.
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, const Matrix& grad_out)>;

  // With record = false no backward closures are kept (inference).
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  // A leaf whose gradient is kept and can be read after backward().
  Var input(Matrix value);
  Var param(Parameter& p);

  // Seeds d(root)/d(root) = 1 for a 1x1 root and propagates. Parameter
  // gradients are added to Parameter::grad (which must be sized or empty).
  void backward(Var root);

  bool recording() const { return record_; }
  bool requires_grad(Var v) const { return nodes_[static_cast<size_t>(v.id())].requires_grad; }
  const Matrix& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  const Matrix& grad(int id) const { return nodes_[static_cast<size_t>(id)].grad; }
  size_t size() const { return nodes_.size(); }

  // Op construction. `fn` is only stored when recording and some input
  // requires grad.
  Var push(Matrix value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var push(Matrix value, const std::vector<Var>& inputs, BackwardFn fn);

  template <typename Derived>
  void accumulate(Var v, const Eigen::MatrixBase<Derived>& g) {
    auto& node = nodes_[static_cast<size_t>(v.id())];
    if (!node.requires_grad) return;
    if (node.grad.size() == 0) {
      node.grad = g;
    } else {
      node.grad += g;
    }
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  bool record_;
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
};

// ---- ops ----------------------------------------------------------------

Var matmul(Var a, Var b);
// a * b^T
Var matmul_nt(Var a, Var b);
// x * W^T + b, with W (out x in) and b (1 x out).
Var linear(Var x, Var weight, Var bias);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double s);
// Adds a 1 x n row to every row of a.
Var add_row(Var a, Var row);
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
// Repeats a 1 x k row n times.
Var broadcast_rows(Var row, Eigen::Index n);
Var softmax_rows(Var a);
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
Var sum_all(Var a);
Var mean_all(Var a);

// Mean binary cross entropy over all elements, evaluated from logits in the
// softplus form; positives are weighted by `positive_weight`.
Var bce_with_logits(Var logits, const Matrix& targets, double positive_weight = 1.0);

// Activations of a batch of images are stored as (batch*height*width) x
// channels, one column per channel, each column laid out image by image in
// row-major pixel order.
struct FeatureShape {
  int batch = 0;
  int height = 0;
  int width = 0;
  int channels = 0;
};

// weight: out_channels x (in_channels*k*k), bias: 1 x out_channels.
Var conv2d(Var x, const FeatureShape& in, Var weight, Var bias, int kernel, int stride,
           int padding, FeatureShape* out);
// (batch*h*w) x c -> batch x c
Var global_avg_pool(Var x, const FeatureShape& shape);

}  // namespace smokeynet::nn
