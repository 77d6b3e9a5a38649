#pragma once

#include <Eigen/Dense>

namespace erp {

struct AdamConfig {
    double learning_rate = 0.01 / 6.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with bias-corrected moments over a flat parameter vector.
class Adam {
public:
    Adam(Eigen::Index size, const AdamConfig& config);

    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

    long steps() const { return t_; }
    const Eigen::VectorXd& first_moment() const { return m_; }
    const Eigen::VectorXd& second_moment() const { return v_; }

private:
    AdamConfig cfg_;
    Eigen::VectorXd m_;
    Eigen::VectorXd v_;
    long t_ = 0;
};

}  // namespace erp
