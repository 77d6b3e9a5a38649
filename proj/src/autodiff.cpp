#include "erp/autodiff.hpp"

#include "erp/errors.hpp"

#include <string>

namespace erp::ad {

namespace {

const char* op_name(Op op) {
    switch (op) {
        case Op::constant: return "constant";
        case Op::leaf: return "leaf";
        case Op::add: return "add";
        case Op::sub: return "sub";
        case Op::mul: return "mul";
        case Op::div: return "div";
        case Op::scale: return "scale";
        case Op::exp: return "exp";
        case Op::log: return "log";
        case Op::tanh: return "tanh";
        case Op::sigmoid: return "sigmoid";
        case Op::relu: return "relu";
        case Op::affine: return "affine";
        case Op::sum_rows: return "sum_rows";
        case Op::sum: return "sum";
        case Op::vstack: return "vstack";
        case Op::broadcast: return "broadcast";
        case Op::gather: return "gather";
    }
    return nullptr;
}

std::string shape(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

void same_shape(Op op, const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError(std::string(op_name(op)) + ": operand shapes " + shape(a) + " and " + shape(b) + " differ");
    }
}

void arity(Op op, std::size_t got, std::size_t want) {
    if (got != want) {
        throw ShapeError(std::string(op_name(op)) + ": expected " + std::to_string(want) + " inputs, got " +
                         std::to_string(got));
    }
}

}  // namespace

Var Tape::constant(Matrix value) { return push(Op::constant, {}, {}, std::move(value), false); }

Var Tape::constant(double value) {
    Matrix m = acquire(1, 1);
    m(0, 0) = value;
    return push(Op::constant, {}, {}, std::move(m), false);
}

Var Tape::leaf(Matrix value) { return push(Op::leaf, {}, {}, std::move(value), true); }

Var Tape::affine(std::span<const Var> terms, Var bias, Activation act) {
    std::vector<Var> in(terms.begin(), terms.end());
    if (bias.valid()) in.push_back(bias);
    return record(Op::affine, in, Attr{.act = act, .has_bias = bias.valid()});
}

void Tape::check(Var v) const {
    if (v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
        throw StateError("variable does not belong to this tape");
    }
}

Matrix Tape::acquire(Eigen::Index rows, Eigen::Index cols) {
    auto it = pool_.find(rows * cols);
    if (it != pool_.end() && !it->second.empty()) {
        Matrix m = std::move(it->second.back());
        it->second.pop_back();
        m.resize(rows, cols);
        return m;
    }
    return Matrix(rows, cols);
}

void Tape::release(Matrix& m) {
    if (m.size() > 0) pool_[m.size()].push_back(std::move(m));
    m = Matrix();
}

Var Tape::push(Op op, std::span<const Var> inputs, const Attr& attr, Matrix&& value, bool needs_grad) {
    Node n{op, attr, static_cast<int>(inputs_.size()), static_cast<int>(inputs.size()), needs_grad};
    for (Var v : inputs) inputs_.push_back(v.id);
    nodes_.push_back(n);
    values_.push_back(std::move(value));
    grads_.emplace_back();
    has_grad_.push_back(0);
    swept_ = false;
    return Var{static_cast<int>(nodes_.size() - 1)};
}

Var Tape::record(Op op, std::span<const Var> inputs, const Attr& attr) {
    if (op_name(op) == nullptr) {
        throw ConfigError("unregistered primitive (op code " + std::to_string(static_cast<int>(op)) + ")");
    }
    for (Var v : inputs) check(v);
    bool needs = false;
    for (Var v : inputs) needs = needs || nodes_[v.id].needs_grad;
    auto val = [&](std::size_t k) -> const Matrix& { return values_[inputs[k].id]; };

    Matrix out;
    switch (op) {
        case Op::constant:
        case Op::leaf:
            throw ConfigError(std::string(op_name(op)) + " nodes are created with constant() or leaf()");
        case Op::add:
        case Op::sub:
        case Op::mul:
        case Op::div: {
            arity(op, inputs.size(), 2);
            const Matrix& a = val(0);
            const Matrix& b = val(1);
            same_shape(op, a, b);
            out = acquire(a.rows(), a.cols());
            if (op == Op::add) kernels::add(a, b, out);
            if (op == Op::sub) kernels::sub(a, b, out);
            if (op == Op::mul) kernels::mul(a, b, out);
            if (op == Op::div) kernels::div(a, b, out);
            break;
        }
        case Op::scale:
        case Op::exp:
        case Op::log:
        case Op::tanh:
        case Op::sigmoid:
        case Op::relu: {
            arity(op, inputs.size(), 1);
            const Matrix& a = val(0);
            out = acquire(a.rows(), a.cols());
            if (op == Op::scale) kernels::scale(a, attr.scalar, out);
            if (op == Op::exp) out.array() = a.array().exp();
            if (op == Op::log) {
                if ((a.array() <= 0.0).any()) throw DomainError("log of a non-positive value");
                out.array() = a.array().log();
            }
            if (op == Op::tanh) kernels::tanh(a, out);
            if (op == Op::sigmoid) kernels::sigmoid(a, out);
            if (op == Op::relu) kernels::relu(a, out);
            break;
        }
        case Op::affine: {
            const std::size_t n_terms = inputs.size() - (attr.has_bias ? 1 : 0);
            if (inputs.size() < 2 || n_terms % 2 != 0) {
                throw ShapeError("affine: expects weight/input pairs plus an optional bias");
            }
            std::vector<const Matrix*> ws, xs;
            for (std::size_t k = 0; k < n_terms; k += 2) {
                const Matrix& w = val(k);
                const Matrix& x = val(k + 1);
                if (w.cols() != x.rows()) throw ShapeError("affine: weight " + shape(w) + " vs input " + shape(x));
                if (w.rows() != val(0).rows() || x.cols() != val(1).cols()) {
                    throw ShapeError("affine: terms produce different output shapes");
                }
                ws.push_back(&w);
                xs.push_back(&x);
            }
            const Matrix* bias = nullptr;
            if (attr.has_bias) {
                bias = &val(inputs.size() - 1);
                if (bias->cols() != 1 || bias->rows() != val(0).rows()) {
                    throw ShapeError("affine: bias " + shape(*bias) + " must be a column of " +
                                     std::to_string(val(0).rows()) + " rows");
                }
            }
            out = acquire(val(0).rows(), val(1).cols());
            kernels::affine(ws, xs, bias, attr.act, out);
            break;
        }
        case Op::sum_rows: {
            arity(op, inputs.size(), 1);
            const Matrix& a = val(0);
            out = acquire(1, a.cols());
            kernels::sum_rows(a, out);
            break;
        }
        case Op::sum: {
            arity(op, inputs.size(), 1);
            out = acquire(1, 1);
            out(0, 0) = kernels::sum(val(0));
            break;
        }
        case Op::vstack: {
            if (inputs.empty()) throw ShapeError("vstack: no inputs");
            std::vector<const Matrix*> parts;
            for (std::size_t k = 0; k < inputs.size(); ++k) {
                if (val(k).cols() != val(0).cols()) throw ShapeError("vstack: column counts differ");
                parts.push_back(&val(k));
            }
            Eigen::Index rows = 0;
            for (const Matrix* p : parts) rows += p->rows();
            out = acquire(rows, val(0).cols());
            kernels::vstack(parts, out);
            break;
        }
        case Op::broadcast: {
            arity(op, inputs.size(), 1);
            const Matrix& a = val(0);
            if (a.cols() != 1 || attr.col < 1) throw ShapeError("broadcast: needs a column and a positive width");
            out = acquire(a.rows(), attr.col);
            kernels::broadcast(a, attr.col, out);
            break;
        }
        case Op::gather: {
            arity(op, inputs.size(), 1);
            const Matrix& a = val(0);
            if (attr.row < 0 || attr.row >= a.rows() || attr.col < 0 || attr.col >= a.cols()) {
                throw ShapeError("gather: index out of range for " + shape(a));
            }
            out = acquire(1, 1);
            out(0, 0) = a(attr.row, attr.col);
            break;
        }
    }
    return push(op, inputs, attr, std::move(out), needs);
}

const Matrix& Tape::value(Var v) const {
    check(v);
    return values_[v.id];
}

double Tape::scalar(Var v) const {
    const Matrix& m = value(v);
    if (m.size() != 1) throw ShapeError("scalar: node has shape " + shape(m));
    return m(0, 0);
}

const Matrix& Tape::grad(Var v) const {
    check(v);
    if (!swept_) throw StateError("gradient requested before backward");
    if (nodes_[v.id].op != Op::leaf) throw StateError("gradients are kept for leaf nodes only");
    if (!has_grad_[v.id]) {
        zero_ = Matrix::Zero(values_[v.id].rows(), values_[v.id].cols());
        return zero_;
    }
    return grads_[v.id];
}

Matrix& Tape::grad_slot(int id) {
    if (!has_grad_[id]) {
        grads_[id] = acquire(values_[id].rows(), values_[id].cols());
        grads_[id].setZero();
        has_grad_[id] = 1;
    }
    return grads_[id];
}

void Tape::backward(Var loss) {
    if (nodes_.empty()) throw StateError("backward called before any forward recording");
    check(loss);
    if (values_[loss.id].size() != 1) throw ShapeError("backward target must be 1x1, got " + shape(values_[loss.id]));
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (has_grad_[i]) release(grads_[i]);
        has_grad_[i] = 0;
    }
    swept_ = true;
    if (!nodes_[loss.id].needs_grad) return;
    grad_slot(loss.id)(0, 0) = 1.0;

    Matrix scratch;
    for (int id = loss.id; id >= 0; --id) {
        const Node& node = nodes_[id];
        if (!has_grad_[id] || node.op == Op::leaf || node.op == Op::constant) continue;
        const Matrix& g = grads_[id];
        const Matrix& out = values_[id];
        const int* in = inputs_.data() + node.input_begin;
        auto wants = [&](int k) { return nodes_[in[k]].needs_grad; };
        auto x = [&](int k) -> const Matrix& { return values_[in[k]]; };

        switch (node.op) {
            case Op::add:
                if (wants(0)) grad_slot(in[0]) += g;
                if (wants(1)) grad_slot(in[1]) += g;
                break;
            case Op::sub:
                if (wants(0)) grad_slot(in[0]) += g;
                if (wants(1)) grad_slot(in[1]) -= g;
                break;
            case Op::mul:
                if (wants(0)) grad_slot(in[0]).array() += g.array() * x(1).array();
                if (wants(1)) grad_slot(in[1]).array() += g.array() * x(0).array();
                break;
            case Op::div:
                if (wants(0)) grad_slot(in[0]).array() += g.array() / x(1).array();
                if (wants(1)) grad_slot(in[1]).array() -= g.array() * out.array() / x(1).array();
                break;
            case Op::scale:
                if (wants(0)) grad_slot(in[0]).array() += node.attr.scalar * g.array();
                break;
            case Op::exp:
                if (wants(0)) grad_slot(in[0]).array() += g.array() * out.array();
                break;
            case Op::log:
                if (wants(0)) grad_slot(in[0]).array() += g.array() / x(0).array();
                break;
            case Op::tanh:
                if (wants(0)) grad_slot(in[0]).array() += g.array() * (1.0 - out.array().square());
                break;
            case Op::sigmoid:
                if (wants(0)) grad_slot(in[0]).array() += g.array() * out.array() * (1.0 - out.array());
                break;
            case Op::relu:
                // Subgradient 0 at the kink.
                if (wants(0)) grad_slot(in[0]).array() += (x(0).array() > 0.0).select(g.array(), 0.0);
                break;
            case Op::affine: {
                scratch.resize(g.rows(), g.cols());
                kernels::activation_backward(node.attr.act, out, g, scratch);
                const int n_terms = node.input_count - (node.attr.has_bias ? 1 : 0);
                for (int k = 0; k < n_terms; k += 2) {
                    if (wants(k)) grad_slot(in[k]).noalias() += scratch * x(k + 1).transpose();
                    if (wants(k + 1)) grad_slot(in[k + 1]).noalias() += x(k).transpose() * scratch;
                }
                if (node.attr.has_bias && wants(n_terms)) grad_slot(in[n_terms]) += scratch.rowwise().sum();
                break;
            }
            case Op::sum_rows:
                if (wants(0)) grad_slot(in[0]).rowwise() += g.row(0);
                break;
            case Op::sum:
                if (wants(0)) grad_slot(in[0]).array() += g(0, 0);
                break;
            case Op::vstack: {
                Eigen::Index r = 0;
                for (int k = 0; k < node.input_count; ++k) {
                    const Eigen::Index rows = x(k).rows();
                    if (wants(k)) grad_slot(in[k]) += g.middleRows(r, rows);
                    r += rows;
                }
                break;
            }
            case Op::broadcast:
                if (wants(0)) grad_slot(in[0]) += g.rowwise().sum();
                break;
            case Op::gather:
                if (wants(0)) grad_slot(in[0])(node.attr.row, node.attr.col) += g(0, 0);
                break;
            case Op::constant:
            case Op::leaf:
                break;
        }
        release(grads_[id]);
        has_grad_[id] = 0;
    }
}

void Tape::clear() {
    for (auto& m : values_) release(m);
    for (auto& m : grads_) release(m);
    nodes_.clear();
    inputs_.clear();
    values_.clear();
    grads_.clear();
    has_grad_.clear();
    swept_ = false;
}

}  // namespace erp::ad
