#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>

#include "nsm/encoding.hpp"
#include "nsm/field.hpp"
#include "nsm/losses.hpp"
#include "nsm/mlp.hpp"

namespace nsm {

struct FieldConfig {
    EncodingType encoding = EncodingType::Fourier;
    int fourier_m = 128;
    double sigma_enc = 8.0;
    int positional_levels = 10;
    double omega0 = 30.0;
    int hidden_width = 256;
    int hidden_layers = 4;
    int num_classes = 3;
    uint64_t seed = 1;

    void validate() const;
};

// The trainable scene representation: a shared input encoding feeding a sine
// geometry head (SDF) and a parallel sine semantic head (class logits).
class SceneField final : public ImplicitField, public SemanticField {
public:
    SceneField() = default;
    explicit SceneField(const FieldConfig& config);

    const FieldConfig& config() const { return config_; }
    const InputEncoding& input_encoding() const { return encoding_; }
    const Mlp& geometry() const { return geometry_; }
    const Mlp& semantic() const { return semantic_; }
    Mlp& geometry() { return geometry_; }
    Mlp& semantic() { return semantic_; }
    int num_classes() const { return config_.num_classes; }

    // ImplicitField; evaluation is chunked internally and thread-safe on a
    // const field.
    Eigen::VectorXd eval(const Points& p) const override;
    void eval_with_grad(const Points& p, Eigen::VectorXd& value, Points& grad) const override;

    // SemanticField; softmax over the semantic head's logits.
    Eigen::MatrixXd eval_semantic(const Points& p) const override;

    // Trainable parameters, [geometry | semantic].
    Eigen::Index param_count() const { return geometry_.param_count() + semantic_.param_count(); }
    Eigen::VectorXd get_params() const;
    void set_params(const Eigen::VectorXd& p);

    // Parameter gradient of the full objective on one batch, including the
    // second-order terms contributed by |grad F| factors. grad must be sized
    // param_count() and is accumulated into deterministically.
    LossBreakdown loss_gradients(const TrainBatch& batch, const LossWeights& weights,
                                 Eigen::VectorXd& grad) const;

    void save_checkpoint(const std::filesystem::path& path) const;
    static SceneField load_checkpoint(const std::filesystem::path& path);

private:
    FieldConfig config_;
    InputEncoding encoding_;
    Mlp geometry_;
    Mlp semantic_;
};

}  // namespace nsm
