#include "erp/adam.hpp"

#include "erp/errors.hpp"

#include <cmath>

namespace erp {

Adam::Adam(Eigen::Index size, const AdamConfig& config)
    : cfg_(config), m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {
    if (!(cfg_.learning_rate > 0.0) || !(cfg_.beta1 >= 0.0 && cfg_.beta1 < 1.0) ||
        !(cfg_.beta2 >= 0.0 && cfg_.beta2 < 1.0) || !(cfg_.epsilon > 0.0)) {
        throw ParameterError("invalid Adam configuration");
    }
}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) throw ShapeError("Adam: size mismatch");
    ++t_;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
    v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    params.array() -= cfg_.learning_rate * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.epsilon);
}

}  // namespace erp
