#pragma once

#include <Eigen/Core>

#include "nsm/field.hpp"
#include "nsm/geometry.hpp"

namespace nsm {

// One optimizer-step batch. On-surface points carry unit normals and class
// labels; off-surface points come from the three-layer sampler. Coordinates
// are normalized ([-1,1]^3).
struct TrainBatch {
    Points on_points;
    Points on_normals;
    Eigen::VectorXi on_labels;
    Points off_points;

    Eigen::Index on_count() const { return on_points.cols(); }
    Eigen::Index off_count() const { return off_points.cols(); }
    void validate(int num_classes) const;
};

struct LossWeights {
    double w_eikonal = 50.0;
    double w_surface = 3000.0;
    double w_normal = 100.0;
    double w_off = 100.0;
    double w_seg = 100.0;
    double alpha = 100.0;       // off-surface sharpness, >= 1
    double w_off_direct = 0.0;  // optional direct regression to off_target
    double off_target = -1.0;

    void validate() const;
};

// Weighted per-term values; total is their sum.
struct LossBreakdown {
    double eikonal = 0.0;
    double surface = 0.0;
    double normal = 0.0;
    double off = 0.0;
    double off_direct = 0.0;
    double seg = 0.0;

    double total() const { return eikonal + surface + normal + off + off_direct + seg; }
    bool finite() const;
    std::string describe() const;
};

// Eikonal + on-surface value/normal terms. Each term is the mean over its
// point set (eikonal over on+off), scaled by its weight.
LossBreakdown sdf_loss(const ImplicitField& field, const TrainBatch& batch,
                       const LossWeights& weights);

// mean over off points of exp(-alpha |F|), scaled by w_off.
double off_surface_penalty(const ImplicitField& field, const Points& off_points,
                           double alpha, double w_off);

// Mean negative log-likelihood of the true class. probs is C x N.
double semantic_loss(const Eigen::MatrixXd& probs, const Eigen::VectorXi& labels);
double semantic_loss(const SemanticField& field, const Points& on_points,
                     const Eigen::VectorXi& labels, int num_classes);

// Full objective; pass sem = nullptr to skip the segmentation term.
LossBreakdown total_loss(const ImplicitField& field, const SemanticField* sem,
                         const TrainBatch& batch, const LossWeights& weights);

// |clamp(pred, delta) - clamp(true, delta)| with clamp(x,d) = min(d, max(-d, x)).
double instance_clamp_loss(double s_pred, double s_true, double delta);

// Per-point | |grad F| - 1 |, used by diagnostics and acceptance probes.
Eigen::VectorXd eikonal_residuals(const ImplicitField& field, const Points& points);

// Shared by value and gradient paths: 1 - <g/|g|, n>, with a zero-gradient
// guard when |g| vanishes.
double normal_alignment_term(const Vec3& g, const Vec3& n);

}  // namespace nsm
