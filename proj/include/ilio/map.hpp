#pragma once

#include "ilio/math.hpp"

#include <cstdint>
#include <unordered_map>
#include <vector>

namespace ilio {

struct MapPoint {
  Vec3 position;
  float intensity;
};

/// Voxel-hash local map with a per-cell point cap; nearest neighbors are
/// gathered brute-force from the surrounding voxel neighborhood.
class LocalMap {
 public:
  explicit LocalMap(double voxel_size = 0.5, int cap_per_voxel = 20)
      : voxel_(voxel_size), cap_(cap_per_voxel) {}

  struct Key {
    int32_t x, y, z;
    bool operator==(const Key& o) const {
      return x == o.x && y == o.y && z == o.z;
    }
  };
  struct KeyHash {
    size_t operator()(const Key& k) const {
      return (static_cast<size_t>(k.x) * 73856093u) ^
             (static_cast<size_t>(k.y) * 19349663u) ^
             (static_cast<size_t>(k.z) * 83492791u);
    }
  };

  Key key_of(const Vec3& p) const {
    return Key{static_cast<int32_t>(std::floor(p.x() / voxel_)),
               static_cast<int32_t>(std::floor(p.y() / voxel_)),
               static_cast<int32_t>(std::floor(p.z() / voxel_))};
  }

  void insert(const Vec3& p, float intensity = 0.0f) {
    auto& cell = cells_[key_of(p)];
    if (static_cast<int>(cell.size()) >= cap_) return;
    cell.push_back(MapPoint{p, intensity});
    ++size_;
  }

  /// Up to k nearest points within the 3x3x3 voxel neighborhood, appended
  /// to `out` sorted by distance. `scratch` avoids per-query allocation.
  void knn_into(const Vec3& query, int k,
                std::vector<std::pair<double, const MapPoint*>>& scratch,
                std::vector<MapPoint>& out) const {
    scratch.clear();
    out.clear();
    const Key c = key_of(query);
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dz = -1; dz <= 1; ++dz) {
          const auto it = cells_.find(Key{c.x + dx, c.y + dy, c.z + dz});
          if (it == cells_.end()) continue;
          for (const auto& mp : it->second) {
            scratch.emplace_back((mp.position - query).squaredNorm(), &mp);
          }
        }
      }
    }
    const size_t keep = std::min<size_t>(k, scratch.size());
    std::partial_sort(
        scratch.begin(), scratch.begin() + keep, scratch.end(),
        [](const auto& a, const auto& b) { return a.first < b.first; });
    out.reserve(keep);
    for (size_t i = 0; i < keep; ++i) out.push_back(*scratch[i].second);
  }

  std::vector<MapPoint> knn(const Vec3& query, int k) const {
    std::vector<std::pair<double, const MapPoint*>> scratch;
    std::vector<MapPoint> out;
    knn_into(query, k, scratch, out);
    return out;
  }

  /// Removes every cell whose center lies beyond the horizon.
  void evict_beyond(const Vec3& center, double horizon) {
    const double h2 = horizon * horizon;
    for (auto it = cells_.begin(); it != cells_.end();) {
      const Vec3 cell_center((it->first.x + 0.5) * voxel_,
                             (it->first.y + 0.5) * voxel_,
                             (it->first.z + 0.5) * voxel_);
      if ((cell_center - center).squaredNorm() > h2) {
        size_ -= it->second.size();
        it = cells_.erase(it);
      } else {
        ++it;
      }
    }
  }

  size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  double voxel_size() const { return voxel_; }
  int cap_per_voxel() const { return cap_; }
  size_t cell_count() const { return cells_.size(); }

  size_t cell_size(const Vec3& p) const {
    const auto it = cells_.find(key_of(p));
    return it == cells_.end() ? 0 : it->second.size();
  }

 private:
  double voxel_;
  int cap_;
  std::unordered_map<Key, std::vector<MapPoint>, KeyHash> cells_;
  size_t size_ = 0;
};

}  // namespace ilio
