#include "nsm/geometry.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

#include "nsm/kdtree.hpp"

namespace nsm {

namespace {

std::string describe_point(const Vec3& p) {
    std::ostringstream os;
    os << "(" << p.x() << ", " << p.y() << ", " << p.z() << ")";
    return os.str();
}

}  // namespace

void Pose::validate() const {
    if (!rotation.allFinite() || !translation.allFinite())
        throw InputError("Pose: non-finite entries");
    const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (ortho > 1e-6)
        throw InputError("Pose: rotation not orthonormal (RtR deviates by " +
                         std::to_string(ortho) + ")");
    const double det = rotation.determinant();
    if (std::abs(det - 1.0) > 1e-6)
        throw InputError("Pose: rotation determinant " + std::to_string(det) + " != 1");
}

void Frame::validate() const {
    if (points.cols() == 0) throw InputError("Frame: no points");
    if (points.cols() != labels.size())
        throw InputError("Frame: point/label count mismatch (" +
                         std::to_string(points.cols()) + " vs " +
                         std::to_string(labels.size()) + ")");
    if (!points.allFinite()) throw InputError("Frame: non-finite point coordinates");
    pose.validate();
}

void SceneBounds::validate() const {
    if (!(g_max > g_min))
        throw InputError("SceneBounds: g_max must exceed g_min");
}

void Obb::validate() const {
    pose.validate();
    if (!(half_extents.minCoeff() > 0.0))
        throw InputError("Obb: half-extents must be positive");
}

Vec3 normalize_to_unit_cube(const Vec3& p, const SceneBounds& bounds) {
    bounds.validate();
    for (int a = 0; a < 3; ++a) {
        if (!(p[a] >= bounds.g_min && p[a] <= bounds.g_max))
            throw InputError("normalize_to_unit_cube: coordinate " + std::to_string(p[a]) +
                             " on axis " + std::to_string(a) + " outside [" +
                             std::to_string(bounds.g_min) + ", " +
                             std::to_string(bounds.g_max) + "] at point " + describe_point(p));
    }
    return ((p.array() - bounds.g_min) / bounds.range() - 0.5) * 2.0;
}

Points normalize_to_unit_cube(const Points& pts, const SceneBounds& bounds) {
    bounds.validate();
    Points out(3, pts.cols());
    for (Eigen::Index i = 0; i < pts.cols(); ++i)
        out.col(i) = normalize_to_unit_cube(Vec3(pts.col(i)), bounds);
    return out;
}

Vec3 denormalize_from_unit_cube(const Vec3& q, const SceneBounds& bounds) {
    bounds.validate();
    return (q.array() / 2.0 + 0.5) * bounds.range() + bounds.g_min;
}

Points denormalize_from_unit_cube(const Points& pts, const SceneBounds& bounds) {
    bounds.validate();
    return ((pts.array() / 2.0 + 0.5) * bounds.range() + bounds.g_min).matrix();
}

Points frame_to_world(const Frame& frame) {
    frame.pose.validate();
    return frame.pose.apply(frame.points);
}

Frame filter_dynamic(const Frame& frame, const std::unordered_set<int>& dynamic_classes) {
    if (dynamic_classes.empty()) return frame;

    std::vector<Eigen::Index> keep;
    keep.reserve(frame.size());
    for (Eigen::Index i = 0; i < frame.size(); ++i)
        if (!dynamic_classes.count(frame.labels[i])) keep.push_back(i);

    if (keep.empty())
        throw InputError("filter_dynamic: frame " + std::to_string(frame.timestamp) +
                         " has no points left after removing dynamic classes");

    Frame out;
    out.timestamp = frame.timestamp;
    out.pose = frame.pose;
    out.points.resize(3, static_cast<Eigen::Index>(keep.size()));
    out.labels.resize(static_cast<Eigen::Index>(keep.size()));
    for (size_t j = 0; j < keep.size(); ++j) {
        out.points.col(static_cast<Eigen::Index>(j)) = frame.points.col(keep[j]);
        out.labels[static_cast<Eigen::Index>(j)] = frame.labels[keep[j]];
    }
    return out;
}

Points estimate_normals(const Points& points, int k, const Vec3& sensor_origin) {
    const Eigen::Index n = points.cols();
    if (k < 3) throw InputError("estimate_normals: k must be >= 3");
    if (n < k)
        throw InputError("estimate_normals: need at least k=" + std::to_string(k) +
                         " points, got " + std::to_string(n));

    KdTree tree(points);
    Points normals(3, n);

#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vec3 p = points.col(i);
        const std::vector<int> nb = tree.knn(p, k);

        Vec3 mean = Vec3::Zero();
        for (int j : nb) mean += points.col(j);
        mean /= static_cast<double>(nb.size());

        Mat3 cov = Mat3::Zero();
        for (int j : nb) {
            const Vec3 d = points.col(j) - mean;
            cov += d * d.transpose();
        }

        Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
        Vec3 normal = eig.eigenvectors().col(0);  // smallest eigenvalue
        const double nrm = normal.norm();
        normal = nrm > 0.0 ? Vec3(normal / nrm) : Vec3::UnitZ();
        if (normal.dot(sensor_origin - p) < 0.0) normal = -normal;
        normals.col(i) = normal;
    }
    return normals;
}

Points crop_and_normalize_instance(const Points& sensor_points, const Obb& obb) {
    obb.validate();
    const Pose to_box = obb.pose.inverse();
    const Vec3 h = obb.half_extents;

    std::vector<Vec3> inside;
    inside.reserve(static_cast<size_t>(sensor_points.cols()));
    for (Eigen::Index i = 0; i < sensor_points.cols(); ++i) {
        const Vec3 q = to_box.apply(Vec3(sensor_points.col(i)));
        if ((q.array().abs() <= h.array()).all())
            inside.push_back(q.array() / (2.0 * h.array()));
    }
    if (inside.empty())
        throw InputError("crop_and_normalize_instance: no points inside bounding box");

    Points out(3, static_cast<Eigen::Index>(inside.size()));
    for (size_t i = 0; i < inside.size(); ++i)
        out.col(static_cast<Eigen::Index>(i)) = inside[i];
    return out;
}

Vec3 instance_point_to_frame(const Vec3& q, const Obb& obb) {
    const Vec3 box_pt = q.array() * (2.0 * obb.half_extents.array());
    return obb.pose.apply(box_pt);
}

}  // namespace nsm
