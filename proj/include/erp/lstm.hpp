#pragma once

#include "erp/instruments.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace erp {

/// Gate order used for every per-gate array below.
enum Gate : int { gate_input = 0, gate_forget = 1, gate_output = 2, gate_candidate = 3 };

struct LstmDims {
    int input = 2;
    std::vector<int> hidden{24, 24};
    int output = 1;

    int cells() const { return static_cast<int>(hidden.size()); }
    /// Width of the input fed to cell j (0-based): d_0 for the first cell.
    int cell_input(int j) const { return j == 0 ? input : hidden[j - 1]; }
    void validate() const;
    bool operator==(const LstmDims&) const = default;
};

/// Closed-form number of trainable scalars.
std::size_t parameter_count(const LstmDims& dims);

struct LstmCellParams {
    std::array<Eigen::MatrixXd, 4> U;  // d_j x d_{j-1}
    std::array<Eigen::MatrixXd, 4> W;  // d_j x d_j
    std::array<Eigen::MatrixXd, 4> b;  // d_j x 1
};

struct LstmParams {
    LstmDims dims;
    std::vector<LstmCellParams> cells;
    Eigen::MatrixXd Wy;  // output x d_H
    Eigen::MatrixXd by;  // output x 1
    std::uint64_t seed = 0;

    static LstmParams zeros(const LstmDims& dims);

    /// Every tensor in a fixed order: per cell U, W, b by gate, then Wy, by.
    std::vector<Eigen::MatrixXd*> tensors();
    std::vector<const Eigen::MatrixXd*> tensors() const;
    std::size_t size() const;
    Eigen::VectorXd flatten() const;
    void assign(const Eigen::VectorXd& flat);
};

/// Weights ~ U(-a, a) with a = sqrt(6 / (fan_in + fan_out)); biases zero.
LstmParams glorot_init(const LstmDims& dims, std::uint64_t seed);

/// Hidden and cell state of every cell for a single input sequence.
struct LstmState {
    std::vector<Eigen::VectorXd> h;
    std::vector<Eigen::VectorXd> c;

    static LstmState zeros(const LstmDims& dims);
};

/// One time step for a single feature vector. Updates `state` and returns Y.
Eigen::VectorXd lstm_step(const LstmParams& params, const Eigen::VectorXd& x, LstmState& state);

/// Which optional inputs the policy sees after log-moneyness and wealth.
struct FeatureLayout {
    bool aux = false;
    bool iv = false;

    int size() const { return 2 + (aux ? 1 : 0) + (iv ? 1 : 0); }
};

Eigen::VectorXd make_features(const FeatureLayout& layout, double log_moneyness, double value, double aux,
                              double iv);

/// Maps network output to positions (stock, then each option).
Eigen::VectorXd policy_positions(const Eigen::VectorXd& output, const InstrumentSpec& spec);

void write_checkpoint(const LstmParams& params, std::ostream& out);
LstmParams read_checkpoint(std::istream& in);

}  // namespace erp
