// ----------------------------------------------------------------------------
// Copyright 2026 The PEGO Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ----------------------------------------------------------------------------

#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "pego/numerics/matrix.hpp"

namespace pego::autograd {

using numerics::Matrix;

struct Var {
    std::size_t id = 0;
};

// Reverse-mode tape over a fixed operator vocabulary. Nodes are appended in
// evaluation order, so a single reverse pass over the node list visits every
// consumer before its producers. A tape is confined to one thread.
class Tape {
public:
    struct Options {
        // Multiplier applied to the subgradient of |x|. Anything other than
        // 1.0 produces wrong gradients; it exists so gradient checks can be
        // exercised against a known-bad backward pass.
        double l1_subgradient_scale = 1.0;
    };

    Tape() = default;
    explicit Tape(Options options) : options_(options) {}

    Var constant(Matrix value);
    Var parameter(Matrix value);

    const Matrix& value(Var v) const { return nodes_[v.id].value; }
    // Zero-shaped until backward() has reached the node.
    const Matrix& grad(Var v) const { return nodes_[v.id].grad; }
    bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
    std::size_t size() const noexcept { return nodes_.size(); }

    Var matmul(Var a, Var b);
    Var matmul_tn(Var a, Var b);  // a^T b
    Var matmul_nt(Var a, Var b);  // a b^T
    Var add(Var a, Var b);
    // x + bias broadcast over columns; bias is rows x 1.
    Var add_col_bias(Var x, Var bias);
    Var scale(Var a, double s);
    Var gelu(Var x);
    Var softmax_rows(Var x);
    // Normalizes every column over its rows, then applies gamma/beta (rows x 1).
    Var layernorm_cols(Var x, Var gamma, Var beta, double eps);
    Var slice_rows(Var x, std::size_t offset, std::size_t count);
    Var concat_rows(std::span<const Var> parts);
    Var concat_cols(std::span<const Var> parts);
    Var column(Var x, std::size_t c);
    // Entrywise L1 norm as a 1x1 node; the subgradient at 0 is 0.
    Var l1(Var x);
    // Mean cross-entropy of logits (classes x batch, one column per sample).
    Var cross_entropy_mean(Var logits, std::span<const std::size_t> labels);
    // sum_i w_i * x_i over 1x1 nodes.
    Var weighted_sum(std::span<const Var> scalars, std::span<const double> weights);

    // Seeds d(root)/d(root) = 1 for a 1x1 root and runs the reverse pass.
    void backward(Var root);

private:
    using BackFn = std::function<void(Tape&, const Matrix& grad_out)>;

    struct Node {
        Matrix value;
        Matrix grad;
        bool requires_grad = false;
        BackFn back;
    };

    Var push(Matrix value, std::initializer_list<Var> inputs, BackFn back);
    Var push(Matrix value, bool requires_grad, BackFn back);
    void accumulate(Var v, const Matrix& g);

    std::vector<Node> nodes_;
    Options options_;
};

}  // namespace pego::autograd
