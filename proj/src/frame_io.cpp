#include "nsm/frame_io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nsm/error.hpp"

namespace nsm {

namespace {

template <typename T>
void write_le(std::ostream& os, T value) {
    static_assert(sizeof(T) == 4);
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    static_assert(sizeof(T) == 4);
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    return value;
}

}  // namespace

void write_frame_xyzl(const std::filesystem::path& path, const Points& points,
                      const Eigen::VectorXi& labels) {
    if (points.cols() != labels.size())
        throw InputError("write_frame_xyzl: point/label count mismatch");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("write_frame_xyzl: cannot open " + path.string());
    write_le<uint32_t>(os, static_cast<uint32_t>(points.cols()));
    for (Eigen::Index i = 0; i < points.cols(); ++i) {
        write_le<float>(os, static_cast<float>(points(0, i)));
        write_le<float>(os, static_cast<float>(points(1, i)));
        write_le<float>(os, static_cast<float>(points(2, i)));
        write_le<uint32_t>(os, static_cast<uint32_t>(labels[i]));
    }
    if (!os) throw IoError("write_frame_xyzl: write failed for " + path.string());
}

void read_frame_xyzl(const std::filesystem::path& path, Points& points,
                     Eigen::VectorXi& labels) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("read_frame_xyzl: cannot open " + path.string());
    const auto count = read_le<uint32_t>(is);
    if (!is) throw InputError("read_frame_xyzl: truncated header in " + path.string());
    points.resize(3, count);
    labels.resize(count);
    for (uint32_t i = 0; i < count; ++i) {
        points(0, i) = read_le<float>(is);
        points(1, i) = read_le<float>(is);
        points(2, i) = read_le<float>(is);
        labels[static_cast<Eigen::Index>(i)] = static_cast<int>(read_le<uint32_t>(is));
        if (!is)
            throw InputError("read_frame_xyzl: truncated record " + std::to_string(i) +
                             " in " + path.string());
    }
}

void write_pose_file(const std::filesystem::path& path, const std::vector<Pose>& poses) {
    std::ofstream os(path);
    if (!os) throw IoError("write_pose_file: cannot open " + path.string());
    os.precision(17);
    for (const Pose& pose : poses) {
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) os << pose.rotation(r, c) << ' ';
            os << pose.translation[r];
            os << (r == 2 ? '\n' : ' ');
        }
    }
    if (!os) throw IoError("write_pose_file: write failed for " + path.string());
}

std::vector<Pose> read_pose_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw InputError("read_pose_file: missing pose file " + path.string());
    std::vector<Pose> poses;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        double v[12];
        for (int i = 0; i < 12; ++i) {
            if (!(ls >> v[i]))
                throw InputError("read_pose_file: line " + std::to_string(line_no) +
                                 " of " + path.string() + " does not hold 12 numbers");
        }
        Pose pose;
        pose.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
        pose.translation << v[3], v[7], v[11];
        pose.validate();
        poses.push_back(pose);
    }
    return poses;
}

void write_box_file(const std::filesystem::path& path, const std::vector<BoxAnnotation>& boxes) {
    std::ofstream os(path);
    if (!os) throw IoError("write_box_file: cannot open " + path.string());
    os.precision(17);
    for (const BoxAnnotation& b : boxes) {
        os << b.frame_index << ' ' << b.class_id << ' ' << b.center.x() << ' '
           << b.center.y() << ' ' << b.center.z() << ' ' << b.extents.x() << ' '
           << b.extents.y() << ' ' << b.extents.z() << ' ' << b.yaw << '\n';
    }
    if (!os) throw IoError("write_box_file: write failed for " + path.string());
}

std::vector<BoxAnnotation> read_box_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw InputError("read_box_file: missing box file " + path.string());
    std::vector<BoxAnnotation> boxes;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        BoxAnnotation b;
        if (!(ls >> b.frame_index >> b.class_id >> b.center.x() >> b.center.y() >>
              b.center.z() >> b.extents.x() >> b.extents.y() >> b.extents.z() >> b.yaw))
            throw InputError("read_box_file: malformed line " + std::to_string(line_no) +
                             " in " + path.string());
        if (!(b.extents.minCoeff() > 0.0))
            throw InputError("read_box_file: non-positive extents at line " +
                             std::to_string(line_no) + " in " + path.string());
        boxes.push_back(b);
    }
    return boxes;
}

std::string frame_file_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06d.xyzl", index);
    return buf;
}

Frame load_frame(const std::filesystem::path& frame_dir, int index, const Pose& pose) {
    Frame frame;
    frame.timestamp = index;
    frame.pose = pose;
    read_frame_xyzl(frame_dir / frame_file_name(index), frame.points, frame.labels);
    frame.validate();
    return frame;
}

std::vector<int> list_frame_indices(const std::filesystem::path& frame_dir) {
    if (!std::filesystem::is_directory(frame_dir))
        throw InputError("list_frame_indices: not a directory: " + frame_dir.string());
    std::vector<int> indices;
    for (const auto& entry : std::filesystem::directory_iterator(frame_dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.size() != 11 || name.substr(6) != ".xyzl") continue;
        if (name.find_first_not_of("0123456789") != 6) continue;
        indices.push_back(std::stoi(name.substr(0, 6)));
    }
    std::sort(indices.begin(), indices.end());
    return indices;
}

}  // namespace nsm
