#pragma once

#include <Eigen/Core>

#include "nsm/geometry.hpp"

namespace nsm {

// Scalar field with exact spatial gradients. Sign convention: negative
// inside, positive outside; the surface is the zero level set.
class ImplicitField {
public:
    virtual ~ImplicitField() = default;

    virtual Eigen::VectorXd eval(const Points& p) const = 0;
    virtual void eval_with_grad(const Points& p, Eigen::VectorXd& value,
                                Points& grad) const = 0;
};

// Per-point class probability field (columns sum to 1).
class SemanticField {
public:
    virtual ~SemanticField() = default;
    virtual Eigen::MatrixXd eval_semantic(const Points& p) const = 0;
};

class SphereField final : public ImplicitField {
public:
    SphereField(const Vec3& center, double radius) : center_(center), radius_(radius) {}

    Eigen::VectorXd eval(const Points& p) const override {
        return (p.colwise() - center_).colwise().norm().transpose().array() - radius_;
    }
    void eval_with_grad(const Points& p, Eigen::VectorXd& value, Points& grad) const override {
        const Eigen::Index n = p.cols();
        value.resize(n);
        grad.resize(3, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Vec3 d = p.col(i) - center_;
            const double r = d.norm();
            value[i] = r - radius_;
            grad.col(i) = r > 0.0 ? Vec3(d / r) : Vec3::UnitX();
        }
    }

private:
    Vec3 center_;
    double radius_;
};

class PlaneField final : public ImplicitField {
public:
    // s(p) = normal . p + offset; normal must be unit length.
    PlaneField(const Vec3& normal, double offset) : normal_(normal.normalized()), offset_(offset) {}

    Eigen::VectorXd eval(const Points& p) const override {
        return (normal_.transpose() * p).transpose().array() + offset_;
    }
    void eval_with_grad(const Points& p, Eigen::VectorXd& value, Points& grad) const override {
        value = eval(p);
        grad = normal_.replicate(1, p.cols());
    }

private:
    Vec3 normal_;
    double offset_;
};

class ConstantField final : public ImplicitField {
public:
    explicit ConstantField(double value) : value_(value) {}

    Eigen::VectorXd eval(const Points& p) const override {
        return Eigen::VectorXd::Constant(p.cols(), value_);
    }
    void eval_with_grad(const Points& p, Eigen::VectorXd& value, Points& grad) const override {
        value = eval(p);
        grad = Points::Zero(3, p.cols());
    }

private:
    double value_;
};

}  // namespace nsm
