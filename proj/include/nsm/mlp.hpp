#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <vector>

#include "nsm/rng.hpp"

namespace nsm {

enum class Activation : uint32_t { Sine = 0, Relu = 1 };

// Dense coordinate MLP over column batches, with analytic derivatives.
//
// Three evaluation modes:
//   - forward: plain value evaluation.
//   - forward with tangents: carries d(output)/d(input_j) alongside values
//     (exact Jacobian-vector products, one tangent channel per input axis).
//   - reverse passes: parameter gradients of scalar functions of the outputs
//     (`backward`), or of the outputs *and* their input gradients
//     (`backward_with_tangent`, sine networks only) — the second-order path
//     needed when a loss contains |grad F| terms.
//
// Parameters live in one flat vector (per layer: column-major W, then b) so
// optimizers, finite-difference checks, and serialization all share a layout.
// Parameter values are kept f32-representable at all times; checkpoints are
// exact round trips.
class Mlp {
public:
    Mlp() = default;
    // widths = [input, hidden..., output]; omega0 scales hidden sine phases.
    Mlp(std::vector<int> widths, Activation activation, double omega0 = 30.0);

    void init_params(Rng& rng, bool coordinate_first_layer = false);

    const std::vector<int>& widths() const { return widths_; }
    int input_dim() const { return widths_.front(); }
    int output_dim() const { return widths_.back(); }
    int layer_count() const { return static_cast<int>(widths_.size()) - 1; }
    double omega0() const { return omega0_; }
    Activation activation() const { return activation_; }

    Eigen::Index param_count() const { return params_.size(); }
    const Eigen::VectorXd& params() const { return params_; }
    void set_params(const Eigen::VectorXd& p);

    Eigen::MatrixXd forward(const Eigen::MatrixXd& input) const;

    // Reused across calls; matrices keep their allocations between steps.
    struct Workspace {
        std::vector<Eigen::MatrixXd> act;                    // act[k], k=0..L-1 (act[0]=input)
        std::vector<Eigen::MatrixXd> dact;                   // activation derivative per hidden layer
        std::vector<std::array<Eigen::MatrixXd, 3>> ctan;    // pre-activation tangents per hidden layer
        std::array<Eigen::MatrixXd, 3> input_tangent;
        Eigen::MatrixXd out;
        std::array<Eigen::MatrixXd, 3> out_tangent;
        bool has_tangent = false;

        // scratch buffers for the passes
        Eigen::MatrixXd z;
        Eigen::MatrixXd bar;
        Eigen::MatrixXd upstream;
        Eigen::MatrixXd z_bar;
        std::array<Eigen::MatrixXd, 3> tan_bar;
        std::array<Eigen::MatrixXd, 3> ctan_bar;
    };

    void forward_ws(const Eigen::MatrixXd& input, Workspace& ws) const;
    void forward_tangent_ws(const Eigen::MatrixXd& input,
                            const std::array<Eigen::MatrixXd, 3>& input_tangent,
                            Workspace& ws) const;

    // Accumulates d(sum_n out_bar(:,n) . out(:,n))/d(params) into grad.
    // If input_bar is given, also returns the gradient w.r.t. the input batch.
    void backward(Workspace& ws, const Eigen::MatrixXd& out_bar,
                  Eigen::VectorXd& grad, Eigen::MatrixXd* input_bar = nullptr) const;

    // Accumulates the parameter gradient of
    //   sum_n [ out_coeff(:,n) . out(:,n) + sum_j tangent_coeff[j](:,n) . d out(:,n)/d p_j ]
    // using the tangent caches of forward_tangent_ws. Sine activation only.
    void backward_with_tangent(Workspace& ws, const Eigen::MatrixXd& out_coeff,
                               const std::array<Eigen::MatrixXd, 3>& tangent_coeff,
                               Eigen::VectorXd& grad) const;

    // Column-major W then b per layer; offsets into the flat parameter vector.
    Eigen::Map<const Eigen::MatrixXd> weight(int layer) const;
    Eigen::Map<const Eigen::VectorXd> bias(int layer) const;
    Eigen::Map<Eigen::MatrixXd> weight(int layer);
    Eigen::Map<Eigen::VectorXd> bias(int layer);

    static double round_f32(double x) { return static_cast<double>(static_cast<float>(x)); }

private:
    std::vector<int> widths_;
    Activation activation_ = Activation::Sine;
    double omega0_ = 30.0;
    Eigen::VectorXd params_;
    std::vector<Eigen::Index> w_offset_;
    std::vector<Eigen::Index> b_offset_;
};

}  // namespace nsm
