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

#include "pego/autograd/tape.hpp"

#include <cmath>
#include <numbers>

#include "pego/errors.hpp"

namespace pego::autograd {

namespace {
constexpr double kInvSqrt2 = 1.0 / std::numbers::sqrt2;
}  // namespace

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void require_scalar(const Matrix& m, const char* op) {
    if (m.rows() != 1 || m.cols() != 1) {
        throw ShapeError(std::string(op) + ": expected a 1x1 node, got " + m.shape_string());
    }
}

}  // namespace

Var Tape::push(Matrix value, bool requires_grad, BackFn back) {
    nodes_.push_back({std::move(value), Matrix(), requires_grad,
                      requires_grad ? std::move(back) : BackFn()});
    return Var{nodes_.size() - 1};
}

Var Tape::push(Matrix value, std::initializer_list<Var> inputs, BackFn back) {
    bool rg = false;
    for (Var v : inputs) rg = rg || nodes_[v.id].requires_grad;
    return push(std::move(value), rg, std::move(back));
}

void Tape::accumulate(Var v, const Matrix& g) {
    Node& n = nodes_[v.id];
    if (!n.requires_grad) return;
    if (n.grad.empty()) {
        n.grad = g;
    } else {
        n.grad += g;
    }
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, {}); }

Var Tape::parameter(Matrix value) { return push(std::move(value), true, {}); }

Var Tape::matmul(Var a, Var b) {
    return push(numerics::matmul(value(a), value(b)), {a, b}, [a, b](Tape& t, const Matrix& g) {
        if (t.requires_grad(a)) t.accumulate(a, numerics::matmul_nt(g, t.value(b)));
        if (t.requires_grad(b)) t.accumulate(b, numerics::matmul_tn(t.value(a), g));
    });
}

Var Tape::matmul_tn(Var a, Var b) {
    return push(numerics::matmul_tn(value(a), value(b)), {a, b}, [a, b](Tape& t, const Matrix& g) {
        if (t.requires_grad(a)) t.accumulate(a, numerics::matmul_nt(t.value(b), g));
        if (t.requires_grad(b)) t.accumulate(b, numerics::matmul(t.value(a), g));
    });
}

Var Tape::matmul_nt(Var a, Var b) {
    return push(numerics::matmul_nt(value(a), value(b)), {a, b}, [a, b](Tape& t, const Matrix& g) {
        if (t.requires_grad(a)) t.accumulate(a, numerics::matmul(g, t.value(b)));
        if (t.requires_grad(b)) t.accumulate(b, numerics::matmul_tn(g, t.value(a)));
    });
}

Var Tape::add(Var a, Var b) {
    return push(value(a) + value(b), {a, b}, [a, b](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

Var Tape::add_col_bias(Var x, Var bias) {
    const Matrix& xv = value(x);
    const Matrix& bv = value(bias);
    if (bv.rows() != xv.rows() || bv.cols() != 1) {
        throw ShapeError("add_col_bias: bias " + bv.shape_string() + " for input " +
                         xv.shape_string());
    }
    Matrix out = xv;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (double& v : out.row(r)) v += bv[r];
    return push(std::move(out), {x, bias}, [x, bias](Tape& t, const Matrix& g) {
        t.accumulate(x, g);
        if (t.requires_grad(bias)) {
            Matrix gb(g.rows(), 1);
            for (std::size_t r = 0; r < g.rows(); ++r)
                for (double v : g.row(r)) gb[r] += v;
            t.accumulate(bias, gb);
        }
    });
}

Var Tape::scale(Var a, double s) {
    return push(s * value(a), {a}, [a, s](Tape& t, const Matrix& g) { t.accumulate(a, s * g); });
}

Var Tape::gelu(Var x) {
    Matrix out = value(x);
    for (double& v : out.values()) v = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
    return push(std::move(out), {x}, [x](Tape& t, const Matrix& g) {
        const Matrix& xv = t.value(x);
        Matrix gx(xv.rows(), xv.cols());
        const double inv_sqrt_2pi = std::numbers::inv_sqrtpi * kInvSqrt2;
        for (std::size_t i = 0; i < xv.size(); ++i) {
            const double z = xv[i];
            const double cdf = 0.5 * (1.0 + std::erf(z * kInvSqrt2));
            const double pdf = inv_sqrt_2pi * std::exp(-0.5 * z * z);
            gx[i] = g[i] * (cdf + z * pdf);
        }
        t.accumulate(x, gx);
    });
}

Var Tape::softmax_rows(Var x) {
    Var out = push(numerics::softmax_rows(value(x)), {x}, {});
    if (!requires_grad(out)) return out;
    nodes_[out.id].back = [x, out](Tape& t, const Matrix& g) {
        const Matrix& p = t.value(out);
        Matrix gx(p.rows(), p.cols());
        for (std::size_t r = 0; r < p.rows(); ++r) {
            const double inner = numerics::dot(g.row(r), p.row(r));
            for (std::size_t c = 0; c < p.cols(); ++c) gx(r, c) = p(r, c) * (g(r, c) - inner);
        }
        t.accumulate(x, gx);
    };
    return out;
}

Var Tape::layernorm_cols(Var x, Var gamma, Var beta, double eps) {
    const Matrix& xv = value(x);
    const Matrix& gv = value(gamma);
    const Matrix& bv = value(beta);
    const std::size_t d = xv.rows();
    const std::size_t n = xv.cols();
    if (gv.rows() != d || gv.cols() != 1 || !bv.same_shape(gv)) {
        throw ShapeError("layernorm_cols: scale/offset shape mismatch for input " +
                         xv.shape_string());
    }
    Matrix xhat(d, n);
    std::vector<double> inv_std(n);
    Matrix out(d, n);
    for (std::size_t c = 0; c < n; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < d; ++r) mean += xv(r, c);
        mean /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t r = 0; r < d; ++r) var += (xv(r, c) - mean) * (xv(r, c) - mean);
        var /= static_cast<double>(d);
        inv_std[c] = 1.0 / std::sqrt(var + eps);
        for (std::size_t r = 0; r < d; ++r) {
            xhat(r, c) = (xv(r, c) - mean) * inv_std[c];
            out(r, c) = xhat(r, c) * gv[r] + bv[r];
        }
    }
    return push(std::move(out), {x, gamma, beta},
                [x, gamma, beta, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                    Tape& t, const Matrix& g) {
                    const std::size_t d = xhat.rows();
                    const std::size_t n = xhat.cols();
                    const Matrix& gv = t.value(gamma);
                    if (t.requires_grad(gamma) || t.requires_grad(beta)) {
                        Matrix gg(d, 1), gb(d, 1);
                        for (std::size_t r = 0; r < d; ++r)
                            for (std::size_t c = 0; c < n; ++c) {
                                gg[r] += g(r, c) * xhat(r, c);
                                gb[r] += g(r, c);
                            }
                        t.accumulate(gamma, gg);
                        t.accumulate(beta, gb);
                    }
                    if (!t.requires_grad(x)) return;
                    Matrix gx(d, n);
                    const double inv_d = 1.0 / static_cast<double>(d);
                    for (std::size_t c = 0; c < n; ++c) {
                        double mean_g = 0.0, mean_gx = 0.0;
                        for (std::size_t r = 0; r < d; ++r) {
                            const double gh = g(r, c) * gv[r];
                            mean_g += gh;
                            mean_gx += gh * xhat(r, c);
                        }
                        mean_g *= inv_d;
                        mean_gx *= inv_d;
                        for (std::size_t r = 0; r < d; ++r) {
                            const double gh = g(r, c) * gv[r];
                            gx(r, c) = inv_std[c] * (gh - mean_g - xhat(r, c) * mean_gx);
                        }
                    }
                    t.accumulate(x, gx);
                });
}

Var Tape::slice_rows(Var x, std::size_t offset, std::size_t count) {
    const Matrix& xv = value(x);
    if (offset + count > xv.rows()) {
        throw ShapeError("slice_rows: rows [" + std::to_string(offset) + ", " +
                         std::to_string(offset + count) + ") out of range for " +
                         xv.shape_string());
    }
    Matrix out(count, xv.cols());
    for (std::size_t r = 0; r < count; ++r)
        for (std::size_t c = 0; c < xv.cols(); ++c) out(r, c) = xv(offset + r, c);
    return push(std::move(out), {x}, [x, offset](Tape& t, const Matrix& g) {
        const Matrix& xv = t.value(x);
        Matrix gx(xv.rows(), xv.cols());
        for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < g.cols(); ++c) gx(offset + r, c) = g(r, c);
        t.accumulate(x, gx);
    });
}

Var Tape::concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat_rows: no inputs");
    const std::size_t cols = value(parts[0]).cols();
    std::size_t rows = 0;
    bool rg = false;
    for (Var p : parts) {
        if (value(p).cols() != cols) throw ShapeError("concat_rows: column counts differ");
        rows += value(p).rows();
        rg = rg || requires_grad(p);
    }
    Matrix out(rows, cols);
    std::size_t off = 0;
    for (Var p : parts) {
        const Matrix& pv = value(p);
        for (std::size_t r = 0; r < pv.rows(); ++r)
            for (std::size_t c = 0; c < cols; ++c) out(off + r, c) = pv(r, c);
        off += pv.rows();
    }
    std::vector<Var> ins(parts.begin(), parts.end());
    return push(std::move(out), rg, [ins = std::move(ins)](Tape& t, const Matrix& g) {
        std::size_t off = 0;
        for (Var p : ins) {
            const std::size_t pr = t.value(p).rows();
            if (t.requires_grad(p)) {
                Matrix gp(pr, g.cols());
                for (std::size_t r = 0; r < pr; ++r)
                    for (std::size_t c = 0; c < g.cols(); ++c) gp(r, c) = g(off + r, c);
                t.accumulate(p, gp);
            }
            off += pr;
        }
    });
}

Var Tape::concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat_cols: no inputs");
    const std::size_t rows = value(parts[0]).rows();
    std::size_t cols = 0;
    bool rg = false;
    for (Var p : parts) {
        if (value(p).rows() != rows) throw ShapeError("concat_cols: row counts differ");
        cols += value(p).cols();
        rg = rg || requires_grad(p);
    }
    Matrix out(rows, cols);
    std::size_t off = 0;
    for (Var p : parts) {
        const Matrix& pv = value(p);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < pv.cols(); ++c) out(r, off + c) = pv(r, c);
        off += pv.cols();
    }
    std::vector<Var> ins(parts.begin(), parts.end());
    return push(std::move(out), rg, [ins = std::move(ins)](Tape& t, const Matrix& g) {
        std::size_t off = 0;
        for (Var p : ins) {
            const std::size_t pc = t.value(p).cols();
            if (t.requires_grad(p)) {
                Matrix gp(g.rows(), pc);
                for (std::size_t r = 0; r < g.rows(); ++r)
                    for (std::size_t c = 0; c < pc; ++c) gp(r, c) = g(r, off + c);
                t.accumulate(p, gp);
            }
            off += pc;
        }
    });
}

Var Tape::column(Var x, std::size_t c) {
    const Matrix& xv = value(x);
    if (c >= xv.cols()) throw ShapeError("column: index out of range for " + xv.shape_string());
    return push(Matrix::column(xv.col(c)), {x}, [x, c](Tape& t, const Matrix& g) {
        const Matrix& xv = t.value(x);
        Matrix gx(xv.rows(), xv.cols());
        for (std::size_t r = 0; r < xv.rows(); ++r) gx(r, c) = g[r];
        t.accumulate(x, gx);
    });
}

Var Tape::l1(Var x) {
    const double scale = options_.l1_subgradient_scale;
    return push(Matrix(1, 1, numerics::l1_entrywise(value(x))), {x},
                [x, scale](Tape& t, const Matrix& g) {
                    const Matrix& xv = t.value(x);
                    Matrix gx(xv.rows(), xv.cols());
                    for (std::size_t i = 0; i < xv.size(); ++i) gx[i] = scale * g[0] * sign(xv[i]);
                    t.accumulate(x, gx);
                });
}

Var Tape::cross_entropy_mean(Var logits, std::span<const std::size_t> labels) {
    const Matrix& z = value(logits);
    if (labels.size() != z.cols() || labels.empty()) {
        throw ShapeError("cross_entropy_mean: " + std::to_string(labels.size()) +
                         " labels for logits " + z.shape_string());
    }
    const Matrix p = numerics::transpose(numerics::softmax_rows(numerics::transpose(z)));
    double loss = 0.0;
    for (std::size_t c = 0; c < z.cols(); ++c) {
        if (labels[c] >= z.rows()) throw InputError("cross_entropy_mean: label out of range");
        double mx = z(0, c);
        for (std::size_t r = 1; r < z.rows(); ++r) mx = std::max(mx, z(r, c));
        double sum = 0.0;
        for (std::size_t r = 0; r < z.rows(); ++r) sum += std::exp(z(r, c) - mx);
        loss += std::log(sum) + mx - z(labels[c], c);
    }
    const double n = static_cast<double>(z.cols());
    std::vector<std::size_t> lab(labels.begin(), labels.end());
    return push(Matrix(1, 1, loss / n), {logits},
                [logits, p, lab = std::move(lab), n](Tape& t, const Matrix& g) {
                    Matrix gz = p;
                    for (std::size_t c = 0; c < gz.cols(); ++c) gz(lab[c], c) -= 1.0;
                    gz *= g[0] / n;
                    t.accumulate(logits, gz);
                });
}

Var Tape::weighted_sum(std::span<const Var> scalars, std::span<const double> weights) {
    if (scalars.size() != weights.size()) throw ShapeError("weighted_sum: length mismatch");
    double total = 0.0;
    bool rg = false;
    for (std::size_t i = 0; i < scalars.size(); ++i) {
        require_scalar(value(scalars[i]), "weighted_sum");
        total += weights[i] * value(scalars[i])[0];
        rg = rg || requires_grad(scalars[i]);
    }
    std::vector<Var> ins(scalars.begin(), scalars.end());
    std::vector<double> w(weights.begin(), weights.end());
    return push(Matrix(1, 1, total), rg,
                [ins = std::move(ins), w = std::move(w)](Tape& t, const Matrix& g) {
                    for (std::size_t i = 0; i < ins.size(); ++i)
                        t.accumulate(ins[i], Matrix(1, 1, w[i] * g[0]));
                });
}

void Tape::backward(Var root) {
    require_scalar(value(root), "backward");
    for (auto& n : nodes_) n.grad = Matrix();
    if (!nodes_[root.id].requires_grad) return;
    nodes_[root.id].grad = Matrix(1, 1, 1.0);
    for (std::size_t i = root.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.back || n.grad.empty()) continue;
        n.back(*this, n.grad);
    }
}

}  // namespace pego::autograd
