#include "nsm/losses.hpp"

#include <cmath>
#include <sstream>

#include "nsm/error.hpp"

namespace nsm {

namespace {
constexpr double kGradNormFloor = 1e-12;
}

void TrainBatch::validate(int num_classes) const {
    if (on_points.cols() == 0) throw InputError("TrainBatch: no on-surface points");
    if (on_points.cols() != on_normals.cols() || on_points.cols() != on_labels.size())
        throw InputError("TrainBatch: on-surface point/normal/label count mismatch");
    for (Eigen::Index i = 0; i < on_normals.cols(); ++i)
        if (std::abs(on_normals.col(i).norm() - 1.0) > 1e-6)
            throw InputError("TrainBatch: normal " + std::to_string(i) + " is not unit length");
    for (Eigen::Index i = 0; i < on_labels.size(); ++i)
        if (on_labels[i] < 0 || on_labels[i] >= num_classes)
            throw InputError("TrainBatch: label " + std::to_string(on_labels[i]) +
                             " outside [0, " + std::to_string(num_classes) + ")");
}

void LossWeights::validate() const {
    if (w_eikonal < 0 || w_surface < 0 || w_normal < 0 || w_off < 0 || w_seg < 0 ||
        w_off_direct < 0)
        throw InputError("LossWeights: weights must be nonnegative");
    if (alpha < 1.0) throw InputError("LossWeights: alpha must be >= 1");
}

bool LossBreakdown::finite() const {
    return std::isfinite(eikonal) && std::isfinite(surface) && std::isfinite(normal) &&
           std::isfinite(off) && std::isfinite(off_direct) && std::isfinite(seg);
}

std::string LossBreakdown::describe() const {
    std::ostringstream os;
    os << "eikonal=" << eikonal << " surface=" << surface << " normal=" << normal
       << " off=" << off << " off_direct=" << off_direct << " seg=" << seg
       << " total=" << total();
    return os.str();
}

double normal_alignment_term(const Vec3& g, const Vec3& n) {
    const double gn = g.norm();
    if (gn < kGradNormFloor) return 1.0;
    return 1.0 - g.dot(n) / gn;
}

LossBreakdown sdf_loss(const ImplicitField& field, const TrainBatch& batch,
                       const LossWeights& weights) {
    weights.validate();
    const Eigen::Index n_on = batch.on_count();
    const Eigen::Index n_off = batch.off_count();
    if (n_on == 0) throw InputError("sdf_loss: empty on-surface set");

    Eigen::VectorXd s_on;
    Points g_on;
    field.eval_with_grad(batch.on_points, s_on, g_on);

    double eik_sum = 0.0;
    double surf_sum = 0.0;
    double normal_sum = 0.0;
    for (Eigen::Index i = 0; i < n_on; ++i) {
        eik_sum += std::abs(g_on.col(i).norm() - 1.0);
        surf_sum += std::abs(s_on[i]);
        normal_sum += normal_alignment_term(g_on.col(i), batch.on_normals.col(i));
    }
    if (n_off > 0) {
        Eigen::VectorXd s_off;
        Points g_off;
        field.eval_with_grad(batch.off_points, s_off, g_off);
        for (Eigen::Index i = 0; i < n_off; ++i)
            eik_sum += std::abs(g_off.col(i).norm() - 1.0);
    }

    LossBreakdown out;
    out.eikonal = weights.w_eikonal * eik_sum / static_cast<double>(n_on + n_off);
    out.surface = weights.w_surface * surf_sum / static_cast<double>(n_on);
    out.normal = weights.w_normal * normal_sum / static_cast<double>(n_on);
    return out;
}

double off_surface_penalty(const ImplicitField& field, const Points& off_points,
                           double alpha, double w_off) {
    if (alpha < 1.0) throw InputError("off_surface_penalty: alpha must be >= 1");
    if (off_points.cols() == 0) return 0.0;
    const Eigen::VectorXd s = field.eval(off_points);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) sum += std::exp(-alpha * std::abs(s[i]));
    return w_off * sum / static_cast<double>(s.size());
}

double semantic_loss(const Eigen::MatrixXd& probs, const Eigen::VectorXi& labels) {
    if (probs.cols() != labels.size())
        throw InputError("semantic_loss: probability/label count mismatch");
    if (labels.size() == 0) return 0.0;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] >= probs.rows())
            throw InputError("semantic_loss: label out of range");
        sum -= std::log(std::max(probs(labels[i], i), 1e-300));
    }
    return sum / static_cast<double>(labels.size());
}

double semantic_loss(const SemanticField& field, const Points& on_points,
                     const Eigen::VectorXi& labels, int num_classes) {
    const Eigen::MatrixXd probs = field.eval_semantic(on_points);
    if (probs.rows() != num_classes)
        throw InputError("semantic_loss: field class count mismatch");
    return semantic_loss(probs, labels);
}

LossBreakdown total_loss(const ImplicitField& field, const SemanticField* sem,
                         const TrainBatch& batch, const LossWeights& weights) {
    LossBreakdown out = sdf_loss(field, batch, weights);
    out.off = off_surface_penalty(field, batch.off_points, weights.alpha, weights.w_off);
    if (weights.w_off_direct > 0.0 && batch.off_count() > 0) {
        const Eigen::VectorXd s = field.eval(batch.off_points);
        out.off_direct = weights.w_off_direct *
                         (s.array() - weights.off_target).abs().mean();
    }
    if (sem != nullptr && weights.w_seg > 0.0) {
        const Eigen::MatrixXd probs = sem->eval_semantic(batch.on_points);
        out.seg = weights.w_seg * semantic_loss(probs, batch.on_labels);
    }
    return out;
}

double instance_clamp_loss(double s_pred, double s_true, double delta) {
    if (!(delta > 0.0)) throw InputError("instance_clamp_loss: delta must be positive");
    const auto clamp = [delta](double x) { return std::min(delta, std::max(-delta, x)); };
    return std::abs(clamp(s_pred) - clamp(s_true));
}

Eigen::VectorXd eikonal_residuals(const ImplicitField& field, const Points& points) {
    Eigen::VectorXd s;
    Points g;
    field.eval_with_grad(points, s, g);
    return (g.colwise().norm().transpose().array() - 1.0).abs();
}

}  // namespace nsm
