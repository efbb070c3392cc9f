#pragma once

// Synthetic overhead camera and the ball/platform detection pipeline.
//
// Pixel coordinates put pixel (i, j) centred at (i, j); image y grows
// downward, plate y grows upward.

#include "stewart/image.hpp"
#include "stewart/plant.hpp"
#include "stewart/types.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace stewart {

using Rgb = std::array<std::uint8_t, 3>;

struct SceneConfig {
  int width = 640;
  int height = 480;
  double mm_per_pixel = 1.0;
  double platform_half_extent = 200.0;  // mm
  double ball_radius = 20.0;            // mm
  Rgb background{200, 200, 200};
  Rgb platform{16, 16, 16};
  Rgb ball{255, 128, 0};
  int supersample = 4;       // per axis
  double noise_sigma = 0.0;  // intensity levels, additive Gaussian per channel
  std::uint64_t seed = 1;

  void validate() const;
  bool operator==(const SceneConfig&) const = default;
};

struct Calibration {
  double mm_per_pixel = 1.0;
  Vec2d platform_center_px = Vec2d::Zero();
};

/// Calibration implied directly by the scene (image centre, nominal scale).
Calibration nominal_calibration(const SceneConfig& scene);

Vec2d plate_to_pixel(const Vec2d& mm, const Calibration& cal);
Vec2d pixel_to_plate(const Vec2d& px, const Calibration& cal);

/// `frame_index` decorrelates the noise of successive frames under one seed.
Image render_frame(const SimState& state, const SceneConfig& scene, std::uint64_t frame_index = 0);

std::vector<double> gaussian_kernel(double sigma);
Image gaussian_blur(const Image& img, double sigma);

struct Hsv {
  double h = 0;  // degrees [0, 360)
  double s = 0;  // [0, 1]
  double v = 0;  // [0, 1]
};

Hsv rgb_to_hsv(const Rgb& rgb);
Rgb hsv_to_rgb(const Hsv& hsv);
Image rgb_to_hsv(const Image& img);
Image hsv_to_rgb(const Image& img);

struct HsvRange {
  double hue_lo = 0;  // degrees; hue_lo > hue_hi wraps through 0
  double hue_hi = 360;
  double sat_lo = 0;
  double sat_hi = 1;
  double val_lo = 0;
  double val_hi = 1;

  void validate() const;
  bool operator==(const HsvRange&) const = default;
};

Image mask_in_range(const Image& hsv, const HsvRange& range);
/// Same mask as mask_in_range(rgb_to_hsv(rgb), range) in one pass.
Image threshold_hsv(const Image& rgb, const HsvRange& range);
Image to_grayscale(const Image& img);

struct BoundingBox {
  int min_x = 0;
  int min_y = 0;
  int max_x = 0;
  int max_y = 0;

  Vec2d center() const { return {0.5 * (min_x + max_x), 0.5 * (min_y + max_y)}; }
};

struct Blob {
  long pixel_count = 0;
  Vec2d centroid = Vec2d::Zero();
  BoundingBox bbox;
  std::vector<std::pair<int, int>> boundary;  // closed outer contour, clockwise on screen
};

/// 8-connected components of a MASK1 image, largest first.
std::vector<Blob> find_blobs(const Image& mask, long min_pixels = 1);

struct PipelineConfig {
  double blur_sigma = 1.5;
  HsvRange ball_range{10, 50, 0.5, 1.0, 0.5, 1.0};
  double platform_max_value = 0.4;  // V threshold for "dark"
  long min_ball_pixels = 20;
  long max_ball_pixels = 20000;

  void validate() const;
  bool operator==(const PipelineConfig&) const = default;
};

struct BallFix {
  Vec2d position_mm = Vec2d::Zero();
  Vec2d position_px = Vec2d::Zero();
  double confidence = 0;  // blob area over the expected disk area, capped at 1
  long pixel_count = 0;
};

/// Throws BallNotFound when no blob falls inside the configured area bounds.
/// `expected_area_px` feeds the confidence figure only; pass 0 to skip it.
BallFix locate_ball(const Image& frame, const PipelineConfig& pipe, const Calibration& cal,
                    double expected_area_px = 0);

/// Largest dark blob's bounding box gives the centre; its width gives the scale.
Calibration locate_platform(const Image& frame, const PipelineConfig& pipe,
                            double platform_half_extent_mm);

}  // namespace stewart
