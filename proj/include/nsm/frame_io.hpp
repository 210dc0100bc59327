#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nsm/geometry.hpp"

namespace nsm {

// One oriented-box annotation line: frame index, class id, center, full
// extents (not half), yaw about +z. Center and yaw are in the sensor frame of
// the referenced frame index.
struct BoxAnnotation {
    int frame_index = 0;
    int class_id = 0;
    Vec3 center = Vec3::Zero();
    Vec3 extents = Vec3::Zero();
    double yaw = 0.0;

    Obb to_obb() const {
        Obb obb;
        obb.pose = Pose::from_yaw(yaw, center);
        obb.half_extents = extents / 2.0;
        obb.class_id = class_id;
        return obb;
    }
};

// Binary frame file `NNNNNN.xyzl`: little-endian u32 point count followed by
// `count` records of (f32 x, f32 y, f32 z, u32 label).
void write_frame_xyzl(const std::filesystem::path& path, const Points& points,
                      const Eigen::VectorXi& labels);
void read_frame_xyzl(const std::filesystem::path& path, Points& points,
                     Eigen::VectorXi& labels);

// Pose file: one line per frame, 12 whitespace-separated decimals, row-major
// 3x4 (rotation|translation), sensor -> world.
void write_pose_file(const std::filesystem::path& path, const std::vector<Pose>& poses);
std::vector<Pose> read_pose_file(const std::filesystem::path& path);

// Box file: one annotation per line,
// `frame_index class_id cx cy cz ex ey ez yaw`.
void write_box_file(const std::filesystem::path& path, const std::vector<BoxAnnotation>& boxes);
std::vector<BoxAnnotation> read_box_file(const std::filesystem::path& path);

// Loads frame NNNNNN.xyzl + its pose into a Frame with timestamp = index.
Frame load_frame(const std::filesystem::path& frame_dir, int index, const Pose& pose);

// Lists NNNNNN.xyzl files in ascending index order.
std::vector<int> list_frame_indices(const std::filesystem::path& frame_dir);

std::string frame_file_name(int index);

}  // namespace nsm
