#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "medit/errors.hpp"
#include "medit/rng.hpp"

namespace medit::nn {

using Mat = Eigen::MatrixXd;

// A learnable tensor. Gradients accumulate across backward passes until
// zero_grads(); the buffer is allocated on first touch.
struct Parameter {
    std::string name;
    int index = -1;  // position in the owning ParamStore
    int group = 0;   // model-defined grouping tag
    Mat value;
    Mat grad;

    bool has_grad() const { return grad.size() > 0; }
    void zero_grad() {
        if (has_grad()) grad.setZero();
    }
    void accumulate(const Mat& g) {
        if (!has_grad()) grad = Mat::Zero(value.rows(), value.cols());
        grad += g;
    }
};

// Owns parameters with stable addresses; creation order defines the
// serialization and optimizer-state order.
class ParamStore {
public:
    Parameter& create(std::string name, Eigen::Index rows, Eigen::Index cols, int group = 0);
    Parameter* find(std::string_view name);
    const Parameter* find(std::string_view name) const;

    std::size_t size() const { return items_.size(); }
    Parameter& operator[](std::size_t i) { return *items_[i]; }
    const Parameter& operator[](std::size_t i) const { return *items_[i]; }

    void zero_grads();
    double grad_norm() const;  // global L2 norm over all grads
    std::size_t parameter_count() const;

private:
    std::vector<std::unique_ptr<Parameter>> items_;
};

// Per-item gradient buffer used for deterministic parallel batch reduction:
// each item's backward writes here, and buffers are merged into Parameter
// grads in item order regardless of the worker count.
struct GradSink {
    std::vector<Mat> grads;  // indexed by Parameter::index; empty = untouched

    void accumulate(const Parameter& p, const Mat& g);
    void merge_into(ParamStore& store) const;
    void reset();
};

// Reverse-mode autodiff over dense matrices. One Tape holds one computation
// graph; create a fresh tape per forward pass.
class Tape {
public:
    struct Var {
        int id = -1;
        bool valid() const { return id >= 0; }
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Mat value);
    Var leaf(Parameter& p);  // gradient flows into p (or the active GradSink)

    const Mat& val(Var v) const { return node(v.id).value; }
    bool requires_grad(Var v) const { return node(v.id).needs_grad; }

    // --- elementwise / linear algebra ---
    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var hadamard(Var a, Var b);
    Var scale(Var a, double s);
    Var transpose(Var a);

    // --- row broadcasts (row: 1 x n) ---
    Var add_rows(Var a, Var row);
    Var scale_rows(Var a, Var row);

    // --- shape ---
    Var concat_rows(std::span<const Var> parts);
    Var slice_rows(Var a, Eigen::Index r0, Eigen::Index n);
    Var concat_cols(std::span<const Var> parts);
    Var slice_cols(Var a, Eigen::Index c0, Eigen::Index n);
    Var mean_rows(Var a);  // 1 x n

    // --- nonlinearities ---
    Var softmax_rows(Var a);
    Var gelu(Var a);
    Var silu(Var a);
    Var layer_norm_rows(Var a, double eps = 1e-6);  // non-affine
    Var dropout(Var a, double p, Rng& rng);         // inverted dropout; identity when p <= 0

    // --- losses (1 x 1 outputs) ---
    Var mse(Var pred, const Mat& target);
    Var cross_entropy_rows(Var logits, const std::vector<int>& labels);

    // Backpropagate from a scalar node. Leaf gradients go to `sink` when
    // given, otherwise straight into Parameter::grad.
    void backward(Var loss, GradSink* sink = nullptr);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Mat value;
        Mat grad;  // allocated on first touch during backward
        bool needs_grad = false;
        Parameter* param = nullptr;
        std::function<void(Tape&)> back;
    };

    Node& node(int id) { return nodes_[static_cast<std::size_t>(id)]; }
    const Node& node(int id) const { return nodes_[static_cast<std::size_t>(id)]; }

    Var push(Mat value, bool needs_grad, std::function<void(Tape&)> back);
    Mat& grad_ref(int id);  // ensures a zero buffer

    template <typename Expr>
    void accum(int id, const Expr& g) {
        if (!node(id).needs_grad) return;
        grad_ref(id) += g;
    }

    std::vector<Node> nodes_;
};

using Var = Tape::Var;

}  // namespace medit::nn
