#pragma once

#include "erp/kernels.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

namespace erp::ad {

using Matrix = Eigen::MatrixXd;
using kernels::Activation;

/// Primitive operations known to the tape.
enum class Op : std::uint8_t {
    constant,
    leaf,
    add,
    sub,
    mul,
    div,
    scale,
    exp,
    log,
    tanh,
    sigmoid,
    relu,
    affine,
    sum_rows,
    sum,
    vstack,
    broadcast,
    gather,
};

/// Extra operands of a node. Meaning depends on the op: `scalar` is the factor
/// of `scale`; `row`/`col` address `gather` or give the column count of
/// `broadcast`; `act` and `has_bias` configure `affine`.
struct Attr {
    double scalar = 0.0;
    Eigen::Index row = 0;
    Eigen::Index col = 0;
    Activation act = Activation::identity;
    bool has_bias = false;
};

/// Handle to a node on a tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

/// Reverse-mode tape over dense matrices. Nodes are appended in evaluation
/// order, so inputs always precede outputs.
class Tape {
public:
    Var constant(Matrix value);
    Var constant(double value);
    /// Trainable input; its gradient is available after `backward`.
    Var leaf(Matrix value);

    /// Generic entry point. Validates the op, its arity and operand shapes,
    /// evaluates the node and appends it.
    Var record(Op op, std::span<const Var> inputs, const Attr& attr = {});

    Var add(Var a, Var b) { return rec(Op::add, {a, b}); }
    Var sub(Var a, Var b) { return rec(Op::sub, {a, b}); }
    Var mul(Var a, Var b) { return rec(Op::mul, {a, b}); }
    Var div(Var a, Var b) { return rec(Op::div, {a, b}); }
    Var scale(Var a, double s) { return rec(Op::scale, {a}, Attr{.scalar = s}); }
    Var exp(Var a) { return rec(Op::exp, {a}); }
    Var log(Var a) { return rec(Op::log, {a}); }
    Var tanh(Var a) { return rec(Op::tanh, {a}); }
    Var sigmoid(Var a) { return rec(Op::sigmoid, {a}); }
    /// max(a, 0) elementwise.
    Var relu(Var a) { return rec(Op::relu, {a}); }
    /// act(sum_k W_k x_k + b). `terms` alternates weight and input handles.
    Var affine(std::span<const Var> terms, Var bias, Activation act);
    /// Column sums, a 1 x cols row.
    Var sum_rows(Var a) { return rec(Op::sum_rows, {a}); }
    /// Sum of all entries, 1 x 1.
    Var sum(Var a) { return rec(Op::sum, {a}); }
    Var vstack(std::span<const Var> parts) { return record(Op::vstack, parts); }
    /// Repeats an r x 1 column `cols` times.
    Var broadcast(Var a, Eigen::Index cols) { return rec(Op::broadcast, {a}, Attr{.col = cols}); }
    /// Entry (row, col) of `a` as a 1 x 1 node.
    Var gather(Var a, Eigen::Index row, Eigen::Index col) {
        return rec(Op::gather, {a}, Attr{.row = row, .col = col});
    }

    const Matrix& value(Var v) const;
    double scalar(Var v) const;
    /// Gradient of the last `backward` target with respect to leaf `v`. Zero
    /// when `v` does not influence the target.
    const Matrix& grad(Var v) const;

    /// Reverse sweep from a 1 x 1 node. Throws StateError when nothing was
    /// recorded or `loss` does not belong to this tape.
    void backward(Var loss);

    /// Drops all nodes; buffers are kept for reuse by the next recording.
    void clear();
    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Op op;
        Attr attr;
        int input_begin;
        int input_count;
        bool needs_grad;
    };

    Var rec(Op op, std::initializer_list<Var> inputs, const Attr& attr = {}) {
        return record(op, std::span<const Var>(inputs.begin(), inputs.size()), attr);
    }
    Var push(Op op, std::span<const Var> inputs, const Attr& attr, Matrix&& value, bool needs_grad);
    Matrix acquire(Eigen::Index rows, Eigen::Index cols);
    void release(Matrix& m);
    Matrix& grad_slot(int id);
    void check(Var v) const;

    std::vector<Node> nodes_;
    std::vector<int> inputs_;
    std::vector<Matrix> values_;
    std::vector<Matrix> grads_;
    std::vector<char> has_grad_;
    std::unordered_map<Eigen::Index, std::vector<Matrix>> pool_;
    mutable Matrix zero_;
    bool swept_ = false;
};

}  // namespace erp::ad
