#pragma once

#include <Eigen/Dense>

#include <span>

// Dense kernels shared by the taped and the plain forward pass, so that both
// produce bitwise identical values. Matrices are laid out units x paths.
namespace erp::kernels {

using Matrix = Eigen::MatrixXd;

enum class Activation : unsigned char { identity, sigmoid, tanh };

inline void sigmoid(const Matrix& x, Matrix& out) {
    out.resize(x.rows(), x.cols());
    out.array() = 1.0 / (1.0 + (-x.array()).exp());
}

// tanh(|x|) = (1 - e) / (1 + e) with e = exp(-2|x|); sign restored afterwards.
// Absolute error stays within a few ulps of 1 and the vectorized exp is far
// cheaper than the scalar libm tanh.
inline void tanh(const Matrix& x, Matrix& out) {
    out.resize(x.rows(), x.cols());
    const auto e = (-2.0 * x.array().abs()).exp();
    out.array() = (1.0 - e) / (1.0 + e);
    out.array() = (x.array() < 0.0).select(-out.array(), out.array());
}

inline void activate(Activation act, Matrix& inout) {
    switch (act) {
        case Activation::identity:
            break;
        case Activation::sigmoid:
            inout.array() = 1.0 / (1.0 + (-inout.array()).exp());
            break;
        case Activation::tanh: {
            Matrix t;
            tanh(inout, t);
            inout.swap(t);
            break;
        }
    }
}

/// out = act(sum_k W_k x_k + b), bias broadcast over columns (b may be null).
inline void affine(std::span<const Matrix* const> weights, std::span<const Matrix* const> inputs, const Matrix* bias,
                   Activation act, Matrix& out) {
    out.resize(weights[0]->rows(), inputs[0]->cols());
    out.noalias() = (*weights[0]) * (*inputs[0]);
    for (std::size_t k = 1; k < weights.size(); ++k) out.noalias() += (*weights[k]) * (*inputs[k]);
    if (bias != nullptr) out.colwise() += bias->col(0);
    activate(act, out);
}

/// Derivative of the activation expressed through its output.
inline void activation_backward(Activation act, const Matrix& out, const Matrix& grad_out, Matrix& grad_in) {
    switch (act) {
        case Activation::identity:
            grad_in = grad_out;
            break;
        case Activation::sigmoid:
            grad_in.array() = grad_out.array() * out.array() * (1.0 - out.array());
            break;
        case Activation::tanh:
            grad_in.array() = grad_out.array() * (1.0 - out.array().square());
            break;
    }
}

inline void add(const Matrix& a, const Matrix& b, Matrix& out) {
    out.resize(a.rows(), a.cols());
    out.array() = a.array() + b.array();
}
inline void sub(const Matrix& a, const Matrix& b, Matrix& out) {
    out.resize(a.rows(), a.cols());
    out.array() = a.array() - b.array();
}
inline void mul(const Matrix& a, const Matrix& b, Matrix& out) {
    out.resize(a.rows(), a.cols());
    out.array() = a.array() * b.array();
}
inline void div(const Matrix& a, const Matrix& b, Matrix& out) {
    out.resize(a.rows(), a.cols());
    out.array() = a.array() / b.array();
}
inline void scale(const Matrix& a, double s, Matrix& out) {
    out.resize(a.rows(), a.cols());
    out.array() = s * a.array();
}
inline void relu(const Matrix& a, Matrix& out) {
    out.resize(a.rows(), a.cols());
    out.array() = a.array().max(0.0);
}
inline void sum_rows(const Matrix& a, Matrix& out) { out = a.colwise().sum(); }
inline double sum(const Matrix& a) { return a.sum(); }
inline void broadcast(const Matrix& column, Eigen::Index cols, Matrix& out) { out = column.col(0).replicate(1, cols); }

inline void vstack(std::span<const Matrix* const> parts, Matrix& out) {
    Eigen::Index rows = 0;
    for (const Matrix* p : parts) rows += p->rows();
    out.resize(rows, parts[0]->cols());
    Eigen::Index r = 0;
    for (const Matrix* p : parts) {
        out.middleRows(r, p->rows()) = *p;
        r += p->rows();
    }
}

}  // namespace erp::kernels
