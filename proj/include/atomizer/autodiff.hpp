#pragma once

// Minimal reverse-mode differentiation over dense 2-D arrays, just wide
// enough for attention stacks: matmul, softmax, layer norm, GELU, slicing
// and the stable BCE-with-logits objective. Eigen provides the kernels.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "atomizer/common.hpp"
#include "atomizer/tokenizer.hpp"  // Mat<T>

namespace atomizer::ad {

template <typename T>
struct Node {
    Mat<T> value;
    Mat<T> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node<T>>> parents;
    std::function<void(Node<T>&)> backward_op;  // pushes grad into parents

    explicit Node(Mat<T> v, bool req)
        : value(std::move(v)), requires_grad(req) {
        grad = Mat<T>::Zero(value.rows(), value.cols());
    }
};

template <typename T>
using Var = std::shared_ptr<Node<T>>;

template <typename T>
Var<T> constant(Mat<T> v) {
    return std::make_shared<Node<T>>(std::move(v), false);
}

template <typename T>
Var<T> parameter(Mat<T> v) {
    return std::make_shared<Node<T>>(std::move(v), true);
}

template <typename T>
bool all_finite(const Mat<T>& m) {
    return m.allFinite();
}

namespace detail {
template <typename T>
Var<T> make_op(Mat<T> value, std::vector<Var<T>> parents,
               std::function<void(Node<T>&)> backward_op) {
    bool req = false;
    for (const auto& p : parents) req = req || p->requires_grad;
    auto node = std::make_shared<Node<T>>(std::move(value), req);
    if (req) {
        node->parents = std::move(parents);
        node->backward_op = std::move(backward_op);
    }
    return node;
}
}  // namespace detail

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
    Mat<T> v = a->value * b->value;
    return detail::make_op<T>(std::move(v), {a, b}, [a, b](Node<T>& self) {
        if (a->requires_grad) a->grad.noalias() += self.grad * b->value.transpose();
        if (b->requires_grad) b->grad.noalias() += a->value.transpose() * self.grad;
    });
}

// a * b^T
template <typename T>
Var<T> matmul_nt(const Var<T>& a, const Var<T>& b) {
    Mat<T> v = a->value * b->value.transpose();
    return detail::make_op<T>(std::move(v), {a, b}, [a, b](Node<T>& self) {
        if (a->requires_grad) a->grad.noalias() += self.grad * b->value;
        if (b->requires_grad) b->grad.noalias() += self.grad.transpose() * a->value;
    });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    Mat<T> v = a->value + b->value;
    return detail::make_op<T>(std::move(v), {a, b}, [a, b](Node<T>& self) {
        if (a->requires_grad) a->grad += self.grad;
        if (b->requires_grad) b->grad += self.grad;
    });
}

// x (n x c) plus a broadcast row vector (1 x c).
template <typename T>
Var<T> add_rowvec(const Var<T>& x, const Var<T>& row) {
    Mat<T> v = x->value.rowwise() + row->value.row(0);
    return detail::make_op<T>(std::move(v), {x, row}, [x, row](Node<T>& self) {
        if (x->requires_grad) x->grad += self.grad;
        if (row->requires_grad) row->grad.row(0) += self.grad.colwise().sum();
    });
}

template <typename T>
Var<T> scale(const Var<T>& x, T c) {
    Mat<T> v = x->value * c;
    return detail::make_op<T>(std::move(v), {x}, [x, c](Node<T>& self) {
        if (x->requires_grad) x->grad += self.grad * c;
    });
}

template <typename T>
Var<T> softmax_rows(const Var<T>& x) {
    Mat<T> v = x->value;
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
        auto row = v.row(r);
        row = (row.array() - row.maxCoeff()).exp();
        row /= row.sum();
    }
    return detail::make_op<T>(std::move(v), {x}, [x](Node<T>& self) {
        if (!x->requires_grad) return;
        for (Eigen::Index r = 0; r < self.value.rows(); ++r) {
            const auto s = self.value.row(r).array();
            const auto g = self.grad.row(r).array();
            const T dot = (g * s).sum();
            x->grad.row(r).array() += s * (g - dot);
        }
    });
}

// Row-wise layer norm followed by elementwise affine (gain/bias are 1 x c).
template <typename T>
Var<T> layer_norm_rows(const Var<T>& x, const Var<T>& gain, const Var<T>& bias,
                       T eps = static_cast<T>(1e-5)) {
    const Eigen::Index n = x->value.rows(), c = x->value.cols();
    auto xhat = std::make_shared<Mat<T>>(n, c);
    auto inv_std = std::make_shared<Eigen::Matrix<T, Eigen::Dynamic, 1>>(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto row = x->value.row(r).array();
        const T mu = row.mean();
        const T var = (row - mu).square().mean();
        const T is = T(1) / std::sqrt(var + eps);
        (*inv_std)(r) = is;
        xhat->row(r) = ((row - mu) * is).matrix();
    }
    Mat<T> v(n, c);
    for (Eigen::Index r = 0; r < n; ++r)
        v.row(r) = xhat->row(r).array() * gain->value.row(0).array() +
                   bias->value.row(0).array();
    return detail::make_op<T>(
        std::move(v), {x, gain, bias},
        [x, gain, bias, xhat, inv_std](Node<T>& self) {
            const Eigen::Index n = self.value.rows();
            for (Eigen::Index r = 0; r < n; ++r) {
                const auto g = self.grad.row(r).array();
                const auto xh = xhat->row(r).array();
                if (gain->requires_grad)
                    gain->grad.row(0).array() += g * xh;
                if (bias->requires_grad) bias->grad.row(0).array() += g;
                if (x->requires_grad) {
                    const auto gg = (g * gain->value.row(0).array()).eval();
                    const T m1 = gg.mean();
                    const T m2 = (gg * xh).mean();
                    x->grad.row(r).array() +=
                        (*inv_std)(r) * (gg - m1 - xh * m2);
                }
            }
        });
}

// tanh-form GELU.
template <typename T>
Var<T> gelu(const Var<T>& x) {
    const T c = static_cast<T>(std::sqrt(2.0 / M_PI));
    const T a = static_cast<T>(0.044715);
    Mat<T> v = x->value.unaryExpr([c, a](T t) {
        return static_cast<T>(T(0.5) * t * (T(1) + std::tanh(c * (t + a * t * t * t))));
    });
    return detail::make_op<T>(std::move(v), {x}, [x, c, a](Node<T>& self) {
        if (!x->requires_grad) return;
        x->grad.array() +=
            self.grad.array() *
            x->value.array().unaryExpr([c, a](T t) {
                const T u = c * (t + a * t * t * t);
                const T th = std::tanh(u);
                return static_cast<T>(T(0.5) * (T(1) + th) +
                                      T(0.5) * t * (T(1) - th * th) *
                                          c * (T(1) + T(3) * a * t * t));
            });
    });
}

template <typename T>
Var<T> slice_cols(const Var<T>& x, Eigen::Index start, Eigen::Index len) {
    Mat<T> v = x->value.middleCols(start, len);
    return detail::make_op<T>(std::move(v), {x}, [x, start, len](Node<T>& self) {
        if (x->requires_grad) x->grad.middleCols(start, len) += self.grad;
    });
}

template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
    Eigen::Index cols = 0;
    for (const auto& p : parts) cols += p->value.cols();
    Mat<T> v(parts.front()->value.rows(), cols);
    Eigen::Index off = 0;
    for (const auto& p : parts) {
        v.middleCols(off, p->value.cols()) = p->value;
        off += p->value.cols();
    }
    return detail::make_op<T>(std::move(v), parts, [parts](Node<T>& self) {
        Eigen::Index off = 0;
        for (const auto& p : parts) {
            if (p->requires_grad)
                p->grad += self.grad.middleCols(off, p->value.cols());
            off += p->value.cols();
        }
    });
}

// Mean over all entries of softplus(z) - t*z; the stable form of
// multilabel binary cross-entropy from logits. Returns a 1x1 node.
template <typename T>
Var<T> bce_with_logits_mean(const Var<T>& logits, const Mat<T>& targets) {
    const auto z = logits->value.array();
    const auto t = targets.array();
    Mat<T> loss(1, 1);
    loss(0, 0) =
        (z.max(T(0)) - t * z + (-z.abs()).exp().log1p()).mean();
    const T inv_n = T(1) / static_cast<T>(logits->value.size());
    Mat<T> targets_copy = targets;
    return detail::make_op<T>(
        std::move(loss), {logits},
        [logits, targets_copy, inv_n](Node<T>& self) {
            if (!logits->requires_grad) return;
            const T g = self.grad(0, 0) * inv_n;
            logits->grad.array() +=
                g * (T(1) / (T(1) + (-logits->value.array()).exp()) -
                     targets_copy.array());
        });
}

// Reverse pass from a 1x1 root. Interior grads start at zero on creation;
// parameter grads accumulate across calls until the optimizer clears them.
template <typename T>
void backward(const Var<T>& root) {
    if (root->value.size() != 1)
        throw NumericError("backward: root must be a scalar node");
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    std::vector<std::pair<Node<T>*, size_t>> stack{{root.get(), 0}};
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node<T>* p = node->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second)
                stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    root->grad(0, 0) += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backward_op) (*it)->backward_op(**it);
}

}  // namespace atomizer::ad
