#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Geometry>

#include "admc/core_math.hpp"

namespace admc::test {

inline Eigen::Quaterniond to_eigen(const Rotation& r) { return {r.w(), r.x(), r.y(), r.z()}; }
inline Eigen::Vector3d to_eigen(const Vec3& v) { return {v.x, v.y, v.z}; }
inline Vec3 from_eigen(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo = -1.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  Vec3 vec3(double scale = 1.0) { return {uniform() * scale, uniform() * scale, uniform() * scale}; }
  Rotation rotation() {
    Eigen::Vector4d q;
    do {
      q = {gauss(), gauss(), gauss(), gauss()};
    } while (q.norm() < 1e-3);
    return {q[0], q[1], q[2], q[3]};
  }
  Vec7 vec7() {
    Vec7 v;
    do {
      for (double& c : v.v) c = uniform();
    } while (v.norm() < 1e-3);
    return v;
  }
  double gauss() { return std::normal_distribution<double>(0.0, 1.0)(engine_); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("admc_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace admc::test
