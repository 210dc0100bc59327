#include "nsm/mlp.hpp"

#include <cmath>

#include "nsm/error.hpp"
#include "nsm/fast_trig.hpp"
#include "nsm/linear_kernel.hpp"

namespace nsm {

Mlp::Mlp(std::vector<int> widths, Activation activation, double omega0)
    : widths_(std::move(widths)), activation_(activation), omega0_(omega0) {
    if (widths_.size() < 2) throw InputError("Mlp: need at least input and output widths");
    for (int w : widths_)
        if (w < 1) throw InputError("Mlp: widths must be positive");

    Eigen::Index total = 0;
    for (int k = 0; k < layer_count(); ++k) {
        w_offset_.push_back(total);
        total += static_cast<Eigen::Index>(widths_[k]) * widths_[k + 1];
        b_offset_.push_back(total);
        total += widths_[k + 1];
    }
    params_ = Eigen::VectorXd::Zero(total);
}

Eigen::Map<const Eigen::MatrixXd> Mlp::weight(int layer) const {
    return {params_.data() + w_offset_[layer], widths_[layer + 1], widths_[layer]};
}
Eigen::Map<const Eigen::VectorXd> Mlp::bias(int layer) const {
    return {params_.data() + b_offset_[layer], widths_[layer + 1]};
}
Eigen::Map<Eigen::MatrixXd> Mlp::weight(int layer) {
    return {params_.data() + w_offset_[layer], widths_[layer + 1], widths_[layer]};
}
Eigen::Map<Eigen::VectorXd> Mlp::bias(int layer) {
    return {params_.data() + b_offset_[layer], widths_[layer + 1]};
}

void Mlp::set_params(const Eigen::VectorXd& p) {
    if (p.size() != params_.size()) throw InputError("Mlp::set_params: size mismatch");
    params_ = p.unaryExpr([](double x) { return round_f32(x); });
}

void Mlp::init_params(Rng& rng, bool coordinate_first_layer) {
    const int layers = layer_count();
    for (int k = 0; k < layers; ++k) {
        auto w = weight(k);
        auto b = bias(k);
        const double fan_in = widths_[k];
        const bool is_output = (k == layers - 1);

        double w_bound;
        if (activation_ == Activation::Sine) {
            // sin(omega0 (Wx+b)) layers keep unit pre-activation variance with
            // U(+-sqrt(6/fan_in)/omega0); a raw-coordinate first layer uses
            // U(+-1/fan_in) to spread phases across the signal band.
            w_bound = (k == 0 && coordinate_first_layer && !is_output)
                          ? 1.0 / fan_in
                          : std::sqrt(6.0 / fan_in) / omega0_;
        } else {
            w_bound = std::sqrt(2.0 / fan_in);  // He-style for relu
        }
        for (Eigen::Index i = 0; i < w.size(); ++i)
            w.data()[i] = round_f32(rng.uniform(-w_bound, w_bound));

        if (is_output || activation_ == Activation::Relu) {
            b.setZero();
        } else {
            const double b_bound = 1.0 / std::sqrt(fan_in);
            for (Eigen::Index i = 0; i < b.size(); ++i)
                b[i] = round_f32(rng.uniform(-b_bound, b_bound));
        }
    }
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input) const {
    if (input.rows() != input_dim()) throw InputError("Mlp::forward: input dim mismatch");
    Eigen::MatrixXd a = input;
    Eigen::MatrixXd z;
    const int layers = layer_count();
    for (int k = 0; k < layers; ++k) {
        const Eigen::VectorXd b = bias(k);
        fixed_order_product(weight(k), &b, a, z);
        if (k == layers - 1) return z;
        if (activation_ == Activation::Sine)
            sin_scaled(z, omega0_, a);
        else
            a = z.array().max(0.0);
    }
    return a;  // unreachable: layers >= 1
}

void Mlp::forward_ws(const Eigen::MatrixXd& input, Workspace& ws) const {
    if (input.rows() != input_dim()) throw InputError("Mlp::forward_ws: input dim mismatch");
    const int layers = layer_count();
    if (static_cast<int>(ws.act.size()) < layers) ws.act.resize(layers);
    if (static_cast<int>(ws.dact.size()) < layers - 1) ws.dact.resize(layers - 1);
    ws.has_tangent = false;
    ws.act[0] = input;

    // Training-internal path: plain GEMM. Callers use fixed chunk sizes, so
    // results are reproducible run to run.
    for (int k = 0; k < layers; ++k) {
        ws.z.noalias() = weight(k) * ws.act[k];
        ws.z.colwise() += bias(k);
        if (k == layers - 1) {
            ws.out = ws.z;
            return;
        }
        if (activation_ == Activation::Sine) {
            sincos_scaled(ws.z, omega0_, ws.act[k + 1], ws.dact[k]);
            ws.dact[k] *= omega0_;
        } else {
            ws.dact[k] = (ws.z.array() > 0.0).cast<double>().matrix();
            ws.act[k + 1] = ws.z.array().max(0.0).matrix();
        }
    }
}

void Mlp::forward_tangent_ws(const Eigen::MatrixXd& input,
                             const std::array<Eigen::MatrixXd, 3>& input_tangent,
                             Workspace& ws) const {
    const int layers = layer_count();
    forward_ws(input, ws);
    ws.input_tangent = input_tangent;
    if (static_cast<int>(ws.ctan.size()) < layers - 1) ws.ctan.resize(layers - 1);
    ws.has_tangent = true;

    std::array<Eigen::MatrixXd, 3> tan = input_tangent;
    for (int k = 0; k < layers; ++k) {
        for (int j = 0; j < 3; ++j) {
            if (k == layers - 1) {
                ws.out_tangent[j].noalias() = weight(k) * tan[j];
            } else {
                ws.ctan[k][j].noalias() = weight(k) * tan[j];
                tan[j] = ws.dact[k].cwiseProduct(ws.ctan[k][j]);
            }
        }
    }
}

void Mlp::backward(Workspace& ws, const Eigen::MatrixXd& out_bar, Eigen::VectorXd& grad,
                   Eigen::MatrixXd* input_bar) const {
    if (grad.size() != params_.size()) throw InputError("Mlp::backward: grad size mismatch");
    const int layers = layer_count();

    Eigen::MatrixXd& bar = ws.bar;
    bar = out_bar;
    for (int k = layers - 1; k >= 0; --k) {
        Eigen::Map<Eigen::MatrixXd> gw(grad.data() + w_offset_[k], widths_[k + 1], widths_[k]);
        Eigen::Map<Eigen::VectorXd> gb(grad.data() + b_offset_[k], widths_[k + 1]);
        gw.noalias() += bar * ws.act[k].transpose();
        gb.noalias() += bar.rowwise().sum();
        if (k == 0 && input_bar == nullptr) break;
        ws.upstream.noalias() = weight(k).transpose() * bar;
        if (k == 0) {
            *input_bar = ws.upstream;
            break;
        }
        bar = ws.upstream.cwiseProduct(ws.dact[k - 1]);
    }
}

void Mlp::backward_with_tangent(Workspace& ws, const Eigen::MatrixXd& out_coeff,
                                const std::array<Eigen::MatrixXd, 3>& tangent_coeff,
                                Eigen::VectorXd& grad) const {
    if (!ws.has_tangent)
        throw InputError("Mlp::backward_with_tangent: workspace lacks tangents");
    if (activation_ != Activation::Sine)
        throw InputError("Mlp::backward_with_tangent: sine activation only");
    const int layers = layer_count();
    const double w0sq = omega0_ * omega0_;

    // Adjoints of activations and of their tangent channels.
    Eigen::MatrixXd& a_bar = ws.bar;
    std::array<Eigen::MatrixXd, 3>& t_bar = ws.tan_bar;
    Eigen::MatrixXd& z_bar = ws.z_bar;
    std::array<Eigen::MatrixXd, 3>& c_bar = ws.ctan_bar;
    Eigen::MatrixXd& scratch = ws.upstream;

    for (int k = layers - 1; k >= 0; --k) {
        if (k == layers - 1) {
            z_bar = out_coeff;
            for (int j = 0; j < 3; ++j) c_bar[j] = tangent_coeff[j];
        } else {
            // act = sin(w0 z): d act/dz = dact, d(dact)/dz = -w0^2 sin(w0 z) = -w0^2 act.
            // tangent t = dact .* c, so z picks up -w0^2 act .* sum_j(t_bar .* c).
            z_bar = a_bar.cwiseProduct(ws.dact[k]);
            scratch = t_bar[0].cwiseProduct(ws.ctan[k][0]);
            scratch += t_bar[1].cwiseProduct(ws.ctan[k][1]);
            scratch += t_bar[2].cwiseProduct(ws.ctan[k][2]);
            z_bar.array() -= w0sq * ws.act[k + 1].array() * scratch.array();
            for (int j = 0; j < 3; ++j) c_bar[j] = t_bar[j].cwiseProduct(ws.dact[k]);
        }

        Eigen::Map<Eigen::MatrixXd> gw(grad.data() + w_offset_[k], widths_[k + 1], widths_[k]);
        Eigen::Map<Eigen::VectorXd> gb(grad.data() + b_offset_[k], widths_[k + 1]);
        gw.noalias() += z_bar * ws.act[k].transpose();
        gb.noalias() += z_bar.rowwise().sum();
        for (int j = 0; j < 3; ++j) {
            // tangent of act[k], the input side of layer k
            if (k == 0) {
                gw.noalias() += c_bar[j] * ws.input_tangent[j].transpose();
            } else {
                scratch = ws.dact[k - 1].cwiseProduct(ws.ctan[k - 1][j]);
                gw.noalias() += c_bar[j] * scratch.transpose();
            }
        }
        if (k == 0) break;
        a_bar.noalias() = weight(k).transpose() * z_bar;
        for (int j = 0; j < 3; ++j) t_bar[j].noalias() = weight(k).transpose() * c_bar[j];
    }
}

}  // namespace nsm
