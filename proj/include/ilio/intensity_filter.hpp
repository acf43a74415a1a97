#pragma once

#include "ilio/image.hpp"

#include <numeric>

namespace ilio {

struct FilterConfig {
  // Vertical highpass cutoff in cycles/row; the complementary lowpass is a
  // binomial kernel of length 2m+1 with m = round(0.25 / cutoff).
  double highpass_cutoff = 0.25;
  int horizontal_width = 15;   // px, odd
  int brightness_window = 31;  // px, odd, square window
  double intensity_scale = 192.0;  // s_i
  bool gaussian = true;

  void validate() const {
    if (horizontal_width <= 0 || horizontal_width % 2 == 0 ||
        brightness_window <= 0 || brightness_window % 2 == 0) {
      throw std::invalid_argument("filter: window sizes must be odd and positive");
    }
    if (intensity_scale <= 0.0 || highpass_cutoff <= 0.0) {
      throw std::invalid_argument("filter: scale and cutoff must be positive");
    }
  }
};

namespace detail {

inline std::vector<double> binomial_taps(int halfwidth) {
  std::vector<double> taps(2 * halfwidth + 1, 0.0);
  std::vector<double> row{1.0};
  for (int n = 0; n < 2 * halfwidth; ++n) {
    std::vector<double> next(row.size() + 1, 0.0);
    for (size_t i = 0; i < row.size(); ++i) {
      next[i] += row[i];
      next[i + 1] += row[i];
    }
    row.swap(next);
  }
  const double total = std::accumulate(row.begin(), row.end(), 0.0);
  for (size_t i = 0; i < row.size(); ++i) taps[i] = row[i] / total;
  return taps;
}

/// Normalized vertical convolution, reflect-101 rows, invalid pixels
/// excluded from the support.
inline ImageF vertical_lowpass_masked(const ImageF& img, const MaskImage& mask,
                                      const std::vector<double>& taps) {
  const int h = img.rows(), w = img.cols();
  const int half = static_cast<int>(taps.size()) / 2;
  ImageF out(h, w, 0.0f);
  for (int r = 0; r < h; ++r) {
    const bool interior = r >= half && r + half < h;
    for (int c = 0; c < w; ++c) {
      if (!mask(r, c)) continue;
      if (interior) {
        bool full = true;
        double num = 0.0;
        for (int j = -half; j <= half; ++j) {
          if (!mask(r + j, c)) {
            full = false;
            break;
          }
          num += taps[j + half] * img(r + j, c);
        }
        if (full) {
          out(r, c) = static_cast<float>(num);
          continue;
        }
      }
      double num = 0.0, den = 0.0;
      for (int j = -half; j <= half; ++j) {
        int rr = r + j;
        if (rr < 0) rr = -rr;
        if (rr >= h) rr = 2 * h - 2 - rr;
        if (!mask(rr, c)) continue;
        const double wgt = taps[j + half];
        num += wgt * img(rr, c);
        den += wgt;
      }
      out(r, c) = den > 0.0 ? static_cast<float>(num / den) : 0.0f;
    }
  }
  return out;
}

/// Normalized horizontal box with wrap-around (panorama seam).
inline ImageF horizontal_box_masked(const ImageF& img, const MaskImage& mask,
                                    int width) {
  const int h = img.rows(), w = img.cols();
  ImageF out(h, w, 0.0f);
  if (width >= w) {  // window covers the full row
    for (int r = 0; r < h; ++r) {
      double num = 0.0, den = 0.0;
      for (int c = 0; c < w; ++c) {
        if (mask(r, c)) {
          num += img(r, c);
          den += 1.0;
        }
      }
      for (int c = 0; c < w; ++c) {
        if (mask(r, c)) out(r, c) = den > 0.0 ? static_cast<float>(num / den) : 0.0f;
      }
    }
    return out;
  }
  const int half = width / 2;
  for (int r = 0; r < h; ++r) {
    double num = 0.0, den = 0.0;
    for (int j = -half; j <= half; ++j) {
      const int c = ((j % w) + w) % w;
      if (mask(r, c)) {
        num += img(r, c);
        den += 1.0;
      }
    }
    for (int c = 0; c < w; ++c) {
      if (mask(r, c)) {
        out(r, c) = den > 0.0 ? static_cast<float>(num / den) : 0.0f;
      }
      const int c_add = (c + half + 1) % w;
      const int c_del = ((c - half) % w + w) % w;
      if (mask(r, c_add)) {
        num += img(r, c_add);
        den += 1.0;
      }
      if (mask(r, c_del)) {
        num -= img(r, c_del);
        den -= 1.0;
      }
    }
  }
  return out;
}

/// Windowed sums (value and count) over a square window; horizontal wrap,
/// vertical truncation at the image borders.
inline void windowed_sums(const ImageF& img, const MaskImage& mask, int window,
                          Image<float>& sum, Image<float>& count) {
  const int h = img.rows(), w = img.cols();
  const int half = window / 2;
  Image<float> hsum(h, w, 0.0f), hcnt(h, w, 0.0f);
  for (int r = 0; r < h; ++r) {
    if (window >= w) {  // window covers the full row
      double num = 0.0, den = 0.0;
      for (int c = 0; c < w; ++c) {
        if (mask(r, c)) {
          num += img(r, c);
          den += 1.0;
        }
      }
      for (int c = 0; c < w; ++c) {
        hsum(r, c) = static_cast<float>(num);
        hcnt(r, c) = static_cast<float>(den);
      }
      continue;
    }
    double num = 0.0, den = 0.0;
    for (int j = -half; j <= half; ++j) {
      const int c = ((j % w) + w) % w;
      if (mask(r, c)) {
        num += img(r, c);
        den += 1.0;
      }
    }
    for (int c = 0; c < w; ++c) {
      hsum(r, c) = static_cast<float>(num);
      hcnt(r, c) = static_cast<float>(den);
      const int c_add = (c + half + 1) % w;
      const int c_del = ((c - half) % w + w) % w;
      if (mask(r, c_add)) {
        num += img(r, c_add);
        den += 1.0;
      }
      if (mask(r, c_del)) {
        num -= img(r, c_del);
        den -= 1.0;
      }
    }
  }
  sum = Image<float>(h, w, 0.0f);
  count = Image<float>(h, w, 0.0f);
  std::vector<double> colsum(w, 0.0), colcnt(w, 0.0);
  for (int r = 0; r <= std::min(half, h - 1); ++r) {
    for (int c = 0; c < w; ++c) {
      colsum[c] += hsum(r, c);
      colcnt[c] += hcnt(r, c);
    }
  }
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      sum(r, c) = static_cast<float>(colsum[c]);
      count(r, c) = static_cast<float>(colcnt[c]);
    }
    const int r_add = r + half + 1;
    const int r_del = r - half;
    if (r_add < h) {
      for (int c = 0; c < w; ++c) {
        colsum[c] += hsum(r_add, c);
        colcnt[c] += hcnt(r_add, c);
      }
    }
    if (r_del >= 0) {
      for (int c = 0; c < w; ++c) {
        colsum[c] -= hsum(r_del, c);
        colcnt[c] -= hcnt(r_del, c);
      }
    }
  }
}

}  // namespace detail

/// Isolates the horizontal line pattern (vertical highpass, then horizontal
/// lowpass) and subtracts it from the image.
inline ImageF remove_line_artifacts(const ImageF& img, const MaskImage& mask,
                                    const FilterConfig& cfg) {
  const int h = img.rows(), w = img.cols();
  const int half = std::max(1, static_cast<int>(std::lround(0.25 / cfg.highpass_cutoff)));
  const ImageF vlow =
      detail::vertical_lowpass_masked(img, mask, detail::binomial_taps(half));
  ImageF highpass(h, w, 0.0f);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (mask(r, c)) highpass(r, c) = img(r, c) - vlow(r, c);
    }
  }
  const ImageF lines =
      detail::horizontal_box_masked(highpass, mask, cfg.horizontal_width);
  ImageF out(h, w, 0.0f);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (mask(r, c)) out(r, c) = img(r, c) - lines(r, c);
    }
  }
  return out;
}

struct BrightnessMap {
  ImageF map;
  MaskImage valid;
};

/// Local mean in a large square window, masked and renormalized; pixels
/// with an all-invalid window come back as 0 / invalid.
inline BrightnessMap brightness_map(const ImageF& img, const MaskImage& mask,
                                    const FilterConfig& cfg) {
  const int h = img.rows(), w = img.cols();
  Image<float> sum, count;
  detail::windowed_sums(img, mask, cfg.brightness_window, sum, count);
  BrightnessMap out{ImageF(h, w, 0.0f), MaskImage(h, w, 0)};
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (count(r, c) > 0.0) {
        out.map(r, c) = static_cast<float>(sum(r, c) / count(r, c));
        out.valid(r, c) = 1;
      }
    }
  }
  return out;
}

/// I_F = s_i * I / (I_b + 1), clamped to [0, 255].
inline ImageF normalize_brightness(const ImageF& img, const ImageF& bright,
                                   const MaskImage& mask,
                                   const FilterConfig& cfg) {
  const int h = img.rows(), w = img.cols();
  ImageF out(h, w, 0.0f);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!mask(r, c)) continue;
      const double v = cfg.intensity_scale * img(r, c) / (bright(r, c) + 1.0);
      out(r, c) = static_cast<float>(std::clamp(v, 0.0, 255.0));
    }
  }
  return out;
}

inline ImageF gaussian3(const ImageF& img, const MaskImage& mask) {
  static constexpr double kTaps[3] = {0.25, 0.5, 0.25};
  const int h = img.rows(), w = img.cols();
  ImageF out(h, w, 0.0f);
  for (int r = 0; r < h; ++r) {
    const bool r_interior = r >= 1 && r + 1 < h;
    for (int c = 0; c < w; ++c) {
      if (!mask(r, c)) continue;
      if (r_interior && c >= 1 && c + 1 < w) {
        bool full = true;
        double num = 0.0;
        for (int j = -1; j <= 1 && full; ++j) {
          for (int i = -1; i <= 1; ++i) {
            if (!mask(r + j, c + i)) {
              full = false;
              break;
            }
            num += kTaps[j + 1] * kTaps[i + 1] * img(r + j, c + i);
          }
        }
        if (full) {
          out(r, c) = static_cast<float>(num);
          continue;
        }
      }
      double num = 0.0, den = 0.0;
      for (int j = -1; j <= 1; ++j) {
        int rr = r + j;
        if (rr < 0) rr = -rr;
        if (rr >= h) rr = 2 * h - 2 - rr;
        for (int i = -1; i <= 1; ++i) {
          const int cc = (c + i + w) % w;
          if (!mask(rr, cc)) continue;
          const double wgt = kTaps[j + 1] * kTaps[i + 1];
          num += wgt * img(rr, cc);
          den += wgt;
        }
      }
      out(r, c) = den > 0.0 ? static_cast<float>(num / den) : 0.0f;
    }
  }
  return out;
}

/// Full pipeline: line removal, brightness normalization, 3x3 Gaussian.
inline ImageF filter_image(const ImageF& img, const MaskImage& mask,
                           const FilterConfig& cfg) {
  const ImageF cleaned = remove_line_artifacts(img, mask, cfg);
  const BrightnessMap bright = brightness_map(cleaned, mask, cfg);
  ImageF normalized = normalize_brightness(cleaned, bright.map, mask, cfg);
  if (!cfg.gaussian) return normalized;
  return gaussian3(normalized, mask);
}

}  // namespace ilio
