#pragma once

#include "ilio/types.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace ilio {

// Scan file: 32-byte header followed by little-endian packed point records.
// Header: magic "CLSC", u32 version, u32 point count, u32 width, u32 height,
// f64 scan start time (s), 8 reserved bytes.
#pragma pack(push, 1)
struct ScanFileHeader {
  char magic[4];
  uint32_t version;
  uint32_t point_count;
  uint32_t width;
  uint32_t height;
  double t_start;
  uint8_t reserved[4];
};
struct ScanFileRecord {
  float x, y, z;
  float intensity;
  float reflectivity;
  uint32_t t_offset_ns;
  uint16_t ring;
  uint16_t pad;
};
#pragma pack(pop)
static_assert(sizeof(ScanFileHeader) == 32);
static_assert(sizeof(ScanFileRecord) == 28);

inline constexpr uint32_t kScanFileVersion = 1;

inline void write_scan(const std::string& path, const LidarScan& scan) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_scan: cannot open " + path);
  ScanFileHeader hdr{};
  std::memcpy(hdr.magic, "CLSC", 4);
  hdr.version = kScanFileVersion;
  hdr.point_count = static_cast<uint32_t>(scan.points.size());
  hdr.width = scan.width;
  hdr.height = scan.height;
  hdr.t_start = scan.t_start;
  f.write(reinterpret_cast<const char*>(&hdr), sizeof(hdr));
  for (const auto& p : scan.points) {
    ScanFileRecord rec{};
    rec.x = static_cast<float>(p.position.x());
    rec.y = static_cast<float>(p.position.y());
    rec.z = static_cast<float>(p.position.z());
    rec.intensity = p.intensity;
    rec.reflectivity = p.reflectivity;
    rec.t_offset_ns = p.t_offset_ns;
    rec.ring = p.ring;
    rec.pad = 0;
    f.write(reinterpret_cast<const char*>(&rec), sizeof(rec));
  }
  if (!f) throw std::runtime_error("write_scan: write failed for " + path);
}

inline ScanFileHeader read_scan_header(std::ifstream& f,
                                       const std::string& path) {
  ScanFileHeader hdr{};
  f.read(reinterpret_cast<char*>(&hdr), sizeof(hdr));
  if (!f || std::memcmp(hdr.magic, "CLSC", 4) != 0) {
    throw std::runtime_error("read_scan: bad magic in " + path);
  }
  if (hdr.version != kScanFileVersion) {
    throw std::runtime_error("read_scan: unsupported version in " + path);
  }
  return hdr;
}

inline LidarScan read_scan(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_scan: cannot open " + path);
  const ScanFileHeader hdr = read_scan_header(f, path);
  LidarScan scan;
  scan.t_start = hdr.t_start;
  scan.width = hdr.width;
  scan.height = hdr.height;
  scan.points.resize(hdr.point_count);
  for (auto& p : scan.points) {
    ScanFileRecord rec{};
    f.read(reinterpret_cast<char*>(&rec), sizeof(rec));
    if (!f) throw std::runtime_error("read_scan: truncated file " + path);
    p.position = Vec3(rec.x, rec.y, rec.z);
    p.intensity = rec.intensity;
    p.reflectivity = rec.reflectivity;
    p.t_offset_ns = rec.t_offset_ns;
    p.ring = rec.ring;
  }
  return scan;
}

/// All scan files in a directory, ordered by header start time.
inline std::vector<std::string> list_scan_files(const std::string& dir) {
  std::vector<std::pair<double, std::string>> found;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string path = entry.path().string();
    std::ifstream f(path, std::ios::binary);
    if (!f) continue;
    ScanFileHeader hdr{};
    f.read(reinterpret_cast<char*>(&hdr), sizeof(hdr));
    if (!f || std::memcmp(hdr.magic, "CLSC", 4) != 0) continue;
    found.emplace_back(hdr.t_start, path);
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> out;
  out.reserve(found.size());
  for (auto& [t, p] : found) out.push_back(std::move(p));
  return out;
}

namespace detail {
inline std::string fmt_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace detail

// IMU CSV: t,ax,ay,az,gx,gy,gz (s, m/s^2, rad/s), one header line.

inline void write_imu_csv(const std::string& path,
                          const std::vector<ImuSample>& samples) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_imu_csv: cannot open " + path);
  f << "t,ax,ay,az,gx,gy,gz\n";
  for (const auto& s : samples) {
    f << detail::fmt_g17(s.t) << ',' << detail::fmt_g17(s.acc.x()) << ','
      << detail::fmt_g17(s.acc.y()) << ',' << detail::fmt_g17(s.acc.z()) << ','
      << detail::fmt_g17(s.gyro.x()) << ',' << detail::fmt_g17(s.gyro.y())
      << ',' << detail::fmt_g17(s.gyro.z()) << '\n';
  }
}

inline std::vector<ImuSample> read_imu_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_imu_csv: cannot open " + path);
  std::vector<ImuSample> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (line.find_first_not_of("0123456789.+-eE, \t\r") != std::string::npos) {
      continue;  // header or junk
    }
    std::istringstream ss(line);
    ImuSample s;
    char comma;
    ss >> s.t >> comma >> s.acc.x() >> comma >> s.acc.y() >> comma >>
        s.acc.z() >> comma >> s.gyro.x() >> comma >> s.gyro.y() >> comma >>
        s.gyro.z();
    if (ss.fail()) {
      throw std::runtime_error("read_imu_csv: bad line in " + path + ": " + line);
    }
    out.push_back(s);
  }
  return out;
}

// Trajectory: TUM format "t x y z qx qy qz qw", '#' comments allowed.

inline void write_trajectory_tum(const std::string& path,
                                 const Trajectory& traj) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_trajectory_tum: cannot open " + path);
  for (const auto& s : traj) {
    const Quat& q = s.pose.rotation;
    f << detail::fmt_g17(s.t) << ' ' << detail::fmt_g17(s.pose.translation.x())
      << ' ' << detail::fmt_g17(s.pose.translation.y()) << ' '
      << detail::fmt_g17(s.pose.translation.z()) << ' '
      << detail::fmt_g17(q.x()) << ' ' << detail::fmt_g17(q.y()) << ' '
      << detail::fmt_g17(q.z()) << ' ' << detail::fmt_g17(q.w()) << '\n';
  }
}

inline Trajectory read_trajectory_tum(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_trajectory_tum: cannot open " + path);
  Trajectory out;
  std::string line;
  double prev_t = -std::numeric_limits<double>::infinity();
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double t, x, y, z, qx, qy, qz, qw;
    ss >> t >> x >> y >> z >> qx >> qy >> qz >> qw;
    if (ss.fail()) {
      throw std::runtime_error("read_trajectory_tum: bad line: " + line);
    }
    if (t <= prev_t) {
      throw std::runtime_error("read_trajectory_tum: timestamps not increasing");
    }
    prev_t = t;
    out.push_back({t, Pose{Quat(qw, qx, qy, qz), Vec3(x, y, z)}});
  }
  return out;
}

}  // namespace ilio
