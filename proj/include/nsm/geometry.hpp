#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <unordered_set>
#include <vector>

#include "nsm/error.hpp"

namespace nsm {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
// Point sets are stored one point per column.
using Points = Eigen::Matrix3Xd;

// Rigid transform. Rotation must be orthonormal with determinant 1 (1e-6).
struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    void validate() const;

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Points apply(const Points& pts) const {
        return (rotation * pts).colwise() + translation;
    }
    Pose inverse() const {
        Pose inv;
        inv.rotation = rotation.transpose();
        inv.translation = -(rotation.transpose() * translation);
        return inv;
    }
    Pose compose(const Pose& rhs) const {
        Pose out;
        out.rotation = rotation * rhs.rotation;
        out.translation = rotation * rhs.translation + translation;
        return out;
    }

    static Pose from_yaw(double yaw, const Vec3& t = Vec3::Zero()) {
        Pose p;
        p.rotation = Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix();
        p.translation = t;
        return p;
    }
};

// One sensor scan: points in the sensor frame plus per-point class labels.
struct Frame {
    int64_t timestamp = 0;
    Points points;          // sensor frame
    Eigen::VectorXi labels; // class ids in [0, num_classes)
    Pose pose;              // sensor -> world

    Eigen::Index size() const { return points.cols(); }
    void validate() const;
};

// Isotropic scene extent [g_min, g_max]^3 used for unit-cube normalization.
struct SceneBounds {
    double g_min = -1.0;
    double g_max = 1.0;

    void validate() const;
    double range() const { return g_max - g_min; }
};

// Oriented bounding box; pose is box center in the owning coordinate frame.
struct Obb {
    Pose pose;
    Vec3 half_extents = Vec3::Zero();
    int class_id = 0;

    void validate() const;
};

// World point -> [-1,1]^3. Components outside the bounds are an error.
Vec3 normalize_to_unit_cube(const Vec3& p, const SceneBounds& bounds);
Points normalize_to_unit_cube(const Points& pts, const SceneBounds& bounds);
Vec3 denormalize_from_unit_cube(const Vec3& q, const SceneBounds& bounds);
Points denormalize_from_unit_cube(const Points& pts, const SceneBounds& bounds);

// Applies the frame pose to every point; label order is untouched.
Points frame_to_world(const Frame& frame);

// Drops points whose label is in dynamic_classes. Empty result is an error.
Frame filter_dynamic(const Frame& frame, const std::unordered_set<int>& dynamic_classes);

// Per-point PCA normal over the k nearest neighbors, unit length, flipped so
// that dot(normal, sensor_origin - p) >= 0.
Points estimate_normals(const Points& points, int k, const Vec3& sensor_origin);

// Box-frame crop of a sensor-frame cloud, scaled so the box spans [-0.5,0.5]^3
// per axis. Zero surviving points is an error.
Points crop_and_normalize_instance(const Points& sensor_points, const Obb& obb);

// Inverse of the instance normalization for a single point: [-0.5,0.5]^3 box
// coordinates back to the frame the obb lives in.
Vec3 instance_point_to_frame(const Vec3& q, const Obb& obb);

}  // namespace nsm
