#pragma once

#include <Eigen/Core>

#include <cmath>

#include "nsm/mlp.hpp"

namespace nsm {

// Adam with bias correction. Moments are kept in double; parameters are
// rounded to the nearest f32 value after every step so that checkpoints are
// exact round trips.
class Adam {
public:
    Adam(Eigen::Index count, double lr, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
          m_(Eigen::VectorXd::Zero(count)), v_(Eigen::VectorXd::Zero(count)) {}

    double learning_rate() const { return lr_; }
    void set_learning_rate(double lr) { lr_ = lr; }

    void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
        ++t_;
        m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
        v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
        const double c1 = 1.0 - std::pow(beta1_, t_);
        const double c2 = 1.0 - std::pow(beta2_, t_);
        params -= (lr_ / c1) * m_.cwiseQuotient(((v_ / c2).cwiseSqrt().array() + eps_).matrix());
        params = params.unaryExpr([](double x) { return Mlp::round_f32(x); });
    }

private:
    double lr_;
    double beta1_;
    double beta2_;
    double eps_;
    int64_t t_ = 0;
    Eigen::VectorXd m_;
    Eigen::VectorXd v_;
};

}  // namespace nsm
