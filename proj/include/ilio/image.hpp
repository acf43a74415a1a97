#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ilio {

/// Row-major image. The horizontal axis is periodic (360 degree panorama);
/// helpers that need the seam handle the wrap explicitly.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }

  T& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  const T& operator()(int r, int c) const {
    return data_[static_cast<size_t>(r) * cols_ + c];
  }

  /// Access with horizontal wrap and vertical mirror (reflect-101) padding.
  const T& at_padded(int r, int c) const {
    if (r < 0) r = -r;
    if (r >= rows_) r = 2 * rows_ - 2 - r;
    c %= cols_;
    if (c < 0) c += cols_;
    return (*this)(r, c);
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

using ImageF = Image<float>;
using MaskImage = Image<uint8_t>;
using IndexImage = Image<int32_t>;

inline constexpr int32_t kEmptyPixel = -1;

/// Bilinear sample with horizontal wrap; empty if any support pixel is
/// invalid or the row leaves the image.
inline std::optional<float> sample_bilinear(const ImageF& img,
                                            const MaskImage& mask, double u,
                                            double v) {
  if (v < 0.0 || v > img.rows() - 1) return std::nullopt;
  const int v0 = std::min(static_cast<int>(v), img.rows() - 2 >= 0 ? img.rows() - 2 : 0);
  const int v1 = std::min(v0 + 1, img.rows() - 1);
  const int u0 = static_cast<int>(std::floor(u));
  const int u1 = u0 + 1;
  const double fu = u - u0;
  const double fv = v - v0;
  const int c0 = ((u0 % img.cols()) + img.cols()) % img.cols();
  const int c1 = ((u1 % img.cols()) + img.cols()) % img.cols();
  if (!mask(v0, c0) || !mask(v0, c1) || !mask(v1, c0) || !mask(v1, c1)) {
    return std::nullopt;
  }
  const double top = (1.0 - fu) * img(v0, c0) + fu * img(v0, c1);
  const double bot = (1.0 - fu) * img(v1, c0) + fu * img(v1, c1);
  return static_cast<float>((1.0 - fv) * top + fv * bot);
}

/// Central-difference gradients (u = column, v = row), horizontal wrap,
/// vertical one-sided at the borders. Pixels touching invalid support are
/// masked out.
struct GradientImages {
  ImageF du;
  ImageF dv;
  MaskImage valid;
};

inline GradientImages central_gradients(const ImageF& img,
                                        const MaskImage& mask) {
  const int h = img.rows(), w = img.cols();
  GradientImages g{ImageF(h, w, 0.0f), ImageF(h, w, 0.0f), MaskImage(h, w, 0)};
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!mask(r, c)) continue;
      const int cl = (c - 1 + w) % w, cr = (c + 1) % w;
      const int ru = std::max(r - 1, 0), rd = std::min(r + 1, h - 1);
      if (!mask(r, cl) || !mask(r, cr) || !mask(ru, c) || !mask(rd, c)) continue;
      g.du(r, c) = 0.5f * (img(r, cr) - img(r, cl));
      g.dv(r, c) = (img(rd, c) - img(ru, c)) / static_cast<float>(rd - ru);
      g.valid(r, c) = 1;
    }
  }
  return g;
}

/// 8-bit binary PGM, values clamped to [0, 255].
inline void write_pgm(const ImageF& img, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_pgm: cannot open " + path);
  f << "P5\n" << img.cols() << " " << img.rows() << "\n255\n";
  std::vector<uint8_t> row(img.cols());
  for (int r = 0; r < img.rows(); ++r) {
    for (int c = 0; c < img.cols(); ++c) {
      row[c] = static_cast<uint8_t>(std::clamp(img(r, c), 0.0f, 255.0f));
    }
    f.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
}

}  // namespace ilio
