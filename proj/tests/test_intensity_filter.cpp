#include "ilio/intensity_filter.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace ilio;

namespace {

ImageF constant_image(int h, int w, float value) { return ImageF(h, w, value); }

MaskImage full_mask(int h, int w) { return MaskImage(h, w, 1); }

double rms(const ImageF& img) {
  double sq = 0.0;
  for (int r = 0; r < img.rows(); ++r) {
    for (int c = 0; c < img.cols(); ++c) sq += img(r, c) * img(r, c);
  }
  return std::sqrt(sq / img.size());
}

double correlation(const ImageF& a, const ImageF& b) {
  double mean_a = 0.0, mean_b = 0.0;
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < a.cols(); ++c) {
      mean_a += a(r, c);
      mean_b += b(r, c);
    }
  }
  mean_a /= a.size();
  mean_b /= b.size();
  double num = 0.0, va = 0.0, vb = 0.0;
  for (int r = 0; r < a.rows(); ++r) {
    for (int c = 0; c < a.cols(); ++c) {
      const double da = a(r, c) - mean_a;
      const double db = b(r, c) - mean_b;
      num += da * db;
      va += da * da;
      vb += db * db;
    }
  }
  return num / std::sqrt(va * vb);
}

}  // namespace

TEST_CASE("line removal leaves a constant image unchanged") {
  const int h = 32, w = 64;
  const auto img = constant_image(h, w, 100.0f);
  const auto mask = full_mask(h, w);
  const ImageF out = remove_line_artifacts(img, mask, FilterConfig{});
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      CHECK(std::abs(out(r, c) - 100.0f) < 1e-9f);
    }
  }
}

TEST_CASE("line removal cancels an alternating-row pattern") {
  const int h = 32, w = 64;
  ImageF img(h, w, 0.0f);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      img(r, c) = 100.0f + ((r % 2 == 0) ? 20.0f : -20.0f);
    }
  }
  const auto mask = full_mask(h, w);
  const ImageF out = remove_line_artifacts(img, mask, FilterConfig{});
  for (int r = 2; r < h - 2; ++r) {
    for (int c = 0; c < w; ++c) {
      CHECK(std::abs(out(r, c) - 100.0f) < 2.0f);
    }
  }
}

TEST_CASE("line removal preserves vertical stripes") {
  const int h = 64, w = 128;
  ImageF img(h, w, 0.0f);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      img(r, c) = 100.0f + 40.0f * std::sin(2.0 * M_PI * c / 8.0);
    }
  }
  const auto mask = full_mask(h, w);
  const ImageF out = remove_line_artifacts(img, mask, FilterConfig{});
  CHECK(correlation(out, img) > 0.99);
}

TEST_CASE("line removal is idempotent on artifact-plus-texture content") {
  const int h = 64, w = 256;
  ImageF clean(h, w, 0.0f);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      clean(r, c) = 100.0f + 30.0f * std::sin(2.0 * M_PI * c / 16.0) +
                    0.4f * r;  // smooth vertical ramp
    }
  }
  ImageF noisy = clean;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      noisy(r, c) += (r % 2 == 0) ? 15.0f : -15.0f;
    }
  }
  const auto mask = full_mask(h, w);
  const ImageF once = remove_line_artifacts(noisy, mask, FilterConfig{});
  const ImageF twice = remove_line_artifacts(once, mask, FilterConfig{});
  ImageF change1(h, w, 0.0f), change2(h, w, 0.0f);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      change1(r, c) = once(r, c) - noisy(r, c);
      change2(r, c) = twice(r, c) - once(r, c);
    }
  }
  CHECK(rms(change2) < 0.01 * rms(change1));
}

TEST_CASE("brightness map of a constant image is that constant") {
  const int h = 16, w = 64;
  const auto img = constant_image(h, w, 77.0f);
  const auto mask = full_mask(h, w);
  const BrightnessMap bm = brightness_map(img, mask, FilterConfig{});
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      CHECK(bm.map(r, c) == Catch::Approx(77.0).margin(1e-6));
      CHECK(bm.valid(r, c) == 1);
    }
  }
}

TEST_CASE("brightness map transitions over one window at a step edge") {
  const int h = 16, w = 256;
  ImageF img(h, w, 0.0f);
  for (int r = 0; r < h; ++r) {
    for (int c = w / 2; c < w; ++c) img(r, c) = 200.0f;
  }
  const auto mask = full_mask(h, w);
  FilterConfig cfg;
  cfg.brightness_window = 31;
  const BrightnessMap bm = brightness_map(img, mask, cfg);
  // Far from the edge: the plateau value; near the edge: intermediate.
  CHECK(bm.map(8, 32) == Catch::Approx(0.0).margin(1e-6));
  CHECK(bm.map(8, w - 64) == Catch::Approx(200.0).margin(1e-6));
  CHECK(bm.map(8, w / 2) > 50.0f);
  CHECK(bm.map(8, w / 2) < 150.0f);
  // Monotone increase across the transition band.
  CHECK(bm.map(8, w / 2 - 10) < bm.map(8, w / 2 + 10));
}

TEST_CASE("all-invalid windows produce zero and invalid output") {
  const int h = 16, w = 64;
  const auto img = constant_image(h, w, 50.0f);
  MaskImage mask(h, w, 0);  // nothing valid
  const BrightnessMap bm = brightness_map(img, mask, FilterConfig{});
  CHECK(bm.map(8, 8) == 0.0f);
  CHECK(bm.valid(8, 8) == 0);
}

TEST_CASE("brightness normalization follows the closed form") {
  const int h = 8, w = 32;
  const auto mask = full_mask(h, w);
  FilterConfig cfg;

  SECTION("I = I_b = large constant approaches s_i") {
    const auto img = constant_image(h, w, 4000.0f);
    const ImageF out = normalize_brightness(img, img, mask, cfg);
    CHECK(out(4, 4) ==
          Catch::Approx(cfg.intensity_scale * 4000.0 / 4001.0).margin(1e-3));
  }
  SECTION("zero input stays zero") {
    const auto img = constant_image(h, w, 0.0f);
    const auto bright = constant_image(h, w, 90.0f);
    const ImageF out = normalize_brightness(img, bright, mask, cfg);
    CHECK(out(4, 4) == 0.0f);
  }
  SECTION("output clamps to [0, 255]") {
    const auto img = constant_image(h, w, 10000.0f);
    const auto bright = constant_image(h, w, 1.0f);
    const ImageF out = normalize_brightness(img, bright, mask, cfg);
    CHECK(out(4, 4) == 255.0f);
  }
}

TEST_CASE("two-gain regions equalize after normalization") {
  const int h = 32, w = 512;
  ImageF img(h, w, 0.0f);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> tex(80.0, 120.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const double t = tex(rng);
      img(r, c) = static_cast<float>(c < w / 2 ? t : 4.0 * t);
    }
  }
  const auto mask = full_mask(h, w);
  FilterConfig cfg;
  const BrightnessMap bm = brightness_map(img, mask, cfg);
  const ImageF out = normalize_brightness(img, bm.map, mask, cfg);
  double mean_lo = 0.0, mean_hi = 0.0;
  int n = 0;
  for (int r = 0; r < h; ++r) {
    for (int c = 64; c < w / 2 - 64; ++c) {
      mean_lo += out(r, c);
      mean_hi += out(r, c + w / 2);
      ++n;
    }
  }
  mean_lo /= n;
  mean_hi /= n;
  CHECK(std::abs(mean_hi / mean_lo - 1.0) < 0.05);
}

TEST_CASE("full filter on a constant image lands at the constant response") {
  const int h = 32, w = 64;
  const float c0 = 120.0f;
  const auto img = constant_image(h, w, c0);
  const auto mask = full_mask(h, w);
  FilterConfig cfg;
  const ImageF out = filter_image(img, mask, cfg);
  const double expected = cfg.intensity_scale * c0 / (c0 + 1.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      CHECK(std::abs(out(r, c) - expected) < 1e-3);
    }
  }
}

TEST_CASE("full filter reduces zero-mean noise") {
  const int h = 64, w = 128;
  ImageF img(h, w, 0.0f);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(100.0, 10.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) img(r, c) = static_cast<float>(g(rng));
  }
  const auto mask = full_mask(h, w);
  FilterConfig cfg;
  const ImageF out = filter_image(img, mask, cfg);
  auto stddev = [](const ImageF& im) {
    double mean = 0.0;
    for (int r = 0; r < im.rows(); ++r) {
      for (int c = 0; c < im.cols(); ++c) mean += im(r, c);
    }
    mean /= im.size();
    double var = 0.0;
    for (int r = 0; r < im.rows(); ++r) {
      for (int c = 0; c < im.cols(); ++c) {
        var += (im(r, c) - mean) * (im(r, c) - mean);
      }
    }
    return std::sqrt(var / im.size());
  };
  // Compare against the same image pushed through normalization only.
  FilterConfig no_smooth = cfg;
  no_smooth.gaussian = false;
  const ImageF unsmoothed = filter_image(img, mask, no_smooth);
  CHECK(stddev(out) < stddev(unsmoothed));
}

TEST_CASE("filter output stays finite and within range") {
  const int h = 32, w = 64;
  ImageF img(h, w, 0.0f);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 4096.0);
  MaskImage mask(h, w, 1);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      img(r, c) = static_cast<float>(u(rng));
      if ((r * w + c) % 17 == 0) mask(r, c) = 0;  // scattered holes
    }
  }
  const ImageF out = filter_image(img, mask, FilterConfig{});
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      CHECK(std::isfinite(out(r, c)));
      CHECK(out(r, c) >= 0.0f);
      CHECK(out(r, c) <= 255.0f);
    }
  }
}

TEST_CASE("filtering is deterministic") {
  const int h = 32, w = 64;
  ImageF img(h, w, 0.0f);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 300.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) img(r, c) = static_cast<float>(u(rng));
  }
  const auto mask = full_mask(h, w);
  const ImageF a = filter_image(img, mask, FilterConfig{});
  const ImageF b = filter_image(img, mask, FilterConfig{});
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) CHECK(a(r, c) == b(r, c));
  }
}

TEST_CASE("filter config validation rejects bad windows") {
  FilterConfig cfg;
  cfg.horizontal_width = 14;  // even
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.horizontal_width = 15;
  cfg.intensity_scale = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
