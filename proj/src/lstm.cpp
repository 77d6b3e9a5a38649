#include "erp/lstm.hpp"

#include "erp/errors.hpp"
#include "erp/kernels.hpp"
#include "erp/random.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace erp {

namespace {

constexpr const char* kCheckpointMagic = "erp-lstm-checkpoint";
constexpr int kCheckpointVersion = 1;

}  // namespace

void LstmDims::validate() const {
    if (input < 1 || output < 1 || hidden.empty()) throw ShapeError("LSTM needs input, output and at least one cell");
    for (int d : hidden) {
        if (d < 1) throw ShapeError("LSTM cell width must be positive");
    }
}

std::size_t parameter_count(const LstmDims& dims) {
    dims.validate();
    std::size_t q = 0;
    for (int j = 0; j < dims.cells(); ++j) {
        const std::size_t d = dims.hidden[j];
        const std::size_t d_in = dims.cell_input(j);
        q += 4 * (d * d_in + d * d + d);
    }
    const std::size_t d_h = dims.hidden.back();
    return q + dims.output * d_h + dims.output;
}

LstmParams LstmParams::zeros(const LstmDims& dims) {
    dims.validate();
    LstmParams p;
    p.dims = dims;
    p.cells.resize(dims.cells());
    for (int j = 0; j < dims.cells(); ++j) {
        const int d = dims.hidden[j];
        for (int g = 0; g < 4; ++g) {
            p.cells[j].U[g] = Eigen::MatrixXd::Zero(d, dims.cell_input(j));
            p.cells[j].W[g] = Eigen::MatrixXd::Zero(d, d);
            p.cells[j].b[g] = Eigen::MatrixXd::Zero(d, 1);
        }
    }
    p.Wy = Eigen::MatrixXd::Zero(dims.output, dims.hidden.back());
    p.by = Eigen::MatrixXd::Zero(dims.output, 1);
    if (p.size() != parameter_count(dims)) throw ShapeError("LSTM parameter count mismatch");
    return p;
}

std::vector<Eigen::MatrixXd*> LstmParams::tensors() {
    std::vector<Eigen::MatrixXd*> out;
    for (auto& cell : cells) {
        for (auto& m : cell.U) out.push_back(&m);
        for (auto& m : cell.W) out.push_back(&m);
        for (auto& m : cell.b) out.push_back(&m);
    }
    out.push_back(&Wy);
    out.push_back(&by);
    return out;
}

std::vector<const Eigen::MatrixXd*> LstmParams::tensors() const {
    auto mut = const_cast<LstmParams*>(this)->tensors();
    return {mut.begin(), mut.end()};
}

std::size_t LstmParams::size() const {
    std::size_t n = 0;
    for (const auto* m : tensors()) n += m->size();
    return n;
}

Eigen::VectorXd LstmParams::flatten() const {
    Eigen::VectorXd flat(size());
    Eigen::Index k = 0;
    for (const auto* m : tensors()) {
        for (Eigen::Index r = 0; r < m->rows(); ++r)
            for (Eigen::Index c = 0; c < m->cols(); ++c) flat[k++] = (*m)(r, c);
    }
    return flat;
}

void LstmParams::assign(const Eigen::VectorXd& flat) {
    if (static_cast<std::size_t>(flat.size()) != size()) throw ShapeError("flat parameter vector has wrong length");
    Eigen::Index k = 0;
    for (auto* m : tensors()) {
        for (Eigen::Index r = 0; r < m->rows(); ++r)
            for (Eigen::Index c = 0; c < m->cols(); ++c) (*m)(r, c) = flat[k++];
    }
}

LstmParams glorot_init(const LstmDims& dims, std::uint64_t seed) {
    LstmParams p = LstmParams::zeros(dims);
    p.seed = seed;
    std::uint64_t index = 0;
    auto fill = [&](Eigen::MatrixXd& m) {
        const double bound = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
        PathStream stream(seed, index++, StreamTag::init);
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = bound * (2.0 * stream.uniform() - 1.0);
    };
    for (auto& cell : p.cells) {
        for (auto& m : cell.U) fill(m);
        for (auto& m : cell.W) fill(m);
    }
    fill(p.Wy);
    return p;
}

LstmState LstmState::zeros(const LstmDims& dims) {
    LstmState s;
    for (int d : dims.hidden) {
        s.h.push_back(Eigen::VectorXd::Zero(d));
        s.c.push_back(Eigen::VectorXd::Zero(d));
    }
    return s;
}

Eigen::VectorXd lstm_step(const LstmParams& params, const Eigen::VectorXd& x, LstmState& state) {
    const auto& dims = params.dims;
    if (x.size() != dims.input) {
        throw ShapeError("feature vector has " + std::to_string(x.size()) + " entries, expected " +
                         std::to_string(dims.input));
    }
    if (!x.allFinite()) throw NumericError("non-finite value in LSTM input");
    if (static_cast<int>(state.h.size()) != dims.cells() || static_cast<int>(state.c.size()) != dims.cells()) {
        throw ShapeError("LSTM state does not match the number of cells");
    }
    using kernels::Activation;
    Eigen::MatrixXd input = x;
    for (int j = 0; j < dims.cells(); ++j) {
        const auto& cell = params.cells[j];
        if (state.h[j].size() != dims.hidden[j] || state.c[j].size() != dims.hidden[j]) {
            throw ShapeError("LSTM state width does not match cell " + std::to_string(j));
        }
        const Eigen::MatrixXd h_prev = state.h[j];
        std::array<Eigen::MatrixXd, 4> gate;
        for (int g = 0; g < 4; ++g) {
            const Eigen::MatrixXd* ws[] = {&cell.U[g], &cell.W[g]};
            const Eigen::MatrixXd* xs[] = {&input, &h_prev};
            kernels::affine(ws, xs, &cell.b[g], g == gate_candidate ? Activation::tanh : Activation::sigmoid,
                            gate[g]);
        }
        Eigen::MatrixXd fc, ig, c, tc, h;
        const Eigen::MatrixXd c_prev = state.c[j];
        kernels::mul(gate[gate_forget], c_prev, fc);
        kernels::mul(gate[gate_input], gate[gate_candidate], ig);
        kernels::add(fc, ig, c);
        kernels::tanh(c, tc);
        kernels::mul(gate[gate_output], tc, h);
        state.c[j] = c.col(0);
        state.h[j] = h.col(0);
        input = h;
    }
    Eigen::MatrixXd y;
    const Eigen::MatrixXd* ws[] = {&params.Wy};
    const Eigen::MatrixXd* xs[] = {&input};
    kernels::affine(ws, xs, &params.by, Activation::identity, y);
    return y.col(0);
}

Eigen::VectorXd make_features(const FeatureLayout& layout, double log_moneyness, double value, double aux,
                              double iv) {
    Eigen::VectorXd x(layout.size());
    int k = 0;
    x[k++] = log_moneyness;
    x[k++] = value;
    if (layout.aux) x[k++] = aux;
    if (layout.iv) x[k++] = iv;
    return x;
}

Eigen::VectorXd policy_positions(const Eigen::VectorXd& output, const InstrumentSpec& spec) {
    if (output.size() != spec.traded_count()) {
        throw ShapeError("policy output has " + std::to_string(output.size()) + " entries, instrument menu needs " +
                         std::to_string(spec.traded_count()));
    }
    Eigen::VectorXd pos = Eigen::VectorXd::Zero(1 + spec.option_count());
    if (spec.uses_options()) {
        pos.tail(spec.option_count()) = output;
    } else {
        pos[0] = output[0];
    }
    return pos;
}

void write_checkpoint(const LstmParams& params, std::ostream& out) {
    out << kCheckpointMagic << " v" << kCheckpointVersion << '\n';
    out << "seed " << params.seed << '\n';
    out << "dims " << params.dims.input << ' ' << params.dims.output << ' ' << params.dims.cells();
    for (int d : params.dims.hidden) out << ' ' << d;
    out << '\n';
    char buf[64];
    for (const auto* m : params.tensors()) {
        out << "tensor " << m->rows() << ' ' << m->cols() << '\n';
        for (Eigen::Index r = 0; r < m->rows(); ++r) {
            for (Eigen::Index c = 0; c < m->cols(); ++c) {
                const auto res = std::to_chars(buf, buf + sizeof buf, (*m)(r, c));
                out << (c ? " " : "") << std::string_view(buf, res.ptr - buf);
            }
            out << '\n';
        }
    }
    if (!out) throw IoError("failed to write checkpoint");
}

LstmParams read_checkpoint(std::istream& in) {
    std::string magic, version;
    if (!(in >> magic >> version) || magic != kCheckpointMagic) throw IoError("not an LSTM checkpoint");
    if (version != "v" + std::to_string(kCheckpointVersion)) throw IoError("unsupported checkpoint version " + version);
    std::string key;
    std::uint64_t seed = 0;
    if (!(in >> key >> seed) || key != "seed") throw IoError("checkpoint: missing seed");
    LstmDims dims;
    int n_cells = 0;
    if (!(in >> key >> dims.input >> dims.output >> n_cells) || key != "dims" || n_cells < 1 || n_cells > 1000) {
        throw IoError("checkpoint: malformed dims");
    }
    dims.hidden.assign(n_cells, 0);
    for (int& d : dims.hidden) {
        if (!(in >> d)) throw IoError("checkpoint: malformed dims");
    }
    LstmParams p = LstmParams::zeros(dims);
    p.seed = seed;
    for (auto* m : p.tensors()) {
        Eigen::Index rows = 0, cols = 0;
        if (!(in >> key >> rows >> cols) || key != "tensor" || rows != m->rows() || cols != m->cols()) {
            throw IoError("checkpoint: tensor header does not match dims");
        }
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) {
                std::string tok;
                if (!(in >> tok)) throw IoError("checkpoint: truncated tensor");
                double v = 0.0;
                const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
                if (res.ec != std::errc() || res.ptr != tok.data() + tok.size()) {
                    throw IoError("checkpoint: bad number '" + tok + "'");
                }
                (*m)(r, c) = v;
            }
        }
    }
    return p;
}

}  // namespace erp
