#include "stewart/vision.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace stewart {

namespace {

// Round half away from zero, saturating.
// Round half up with saturation; NaN maps to 0.
std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::min(std::max(0.0, v), 255.0) + 0.5);
}

void require_layout(const Image& img, Layout want, const char* op) {
  if (img.layout() != want)
    throw LayoutError(std::string(op) + " expects " + to_string(want) + ", got " +
                      to_string(img.layout()));
}

}  // namespace

void SceneConfig::validate() const {
  if (width <= 0 || height <= 0) throw ContractViolation("scene size must be positive");
  if (!(mm_per_pixel > 0)) throw ContractViolation("mm_per_pixel must be positive");
  if (!(platform_half_extent > 0)) throw ContractViolation("platform_half_extent must be positive");
  if (!(ball_radius > 0)) throw ContractViolation("ball_radius must be positive");
  if (supersample < 1) throw ContractViolation("supersample must be at least 1");
  if (!(noise_sigma >= 0)) throw ContractViolation("noise_sigma must be non-negative");
}

Calibration nominal_calibration(const SceneConfig& scene) {
  return {scene.mm_per_pixel, Vec2d(0.5 * (scene.width - 1), 0.5 * (scene.height - 1))};
}

Vec2d plate_to_pixel(const Vec2d& mm, const Calibration& cal) {
  return {cal.platform_center_px.x() + mm.x() / cal.mm_per_pixel,
          cal.platform_center_px.y() - mm.y() / cal.mm_per_pixel};
}

Vec2d pixel_to_plate(const Vec2d& px, const Calibration& cal) {
  return {(px.x() - cal.platform_center_px.x()) * cal.mm_per_pixel,
          (cal.platform_center_px.y() - px.y()) * cal.mm_per_pixel};
}

Image render_frame(const SimState& state, const SceneConfig& scene, std::uint64_t frame_index) {
  scene.validate();
  const Calibration cal = nominal_calibration(scene);
  const int n = scene.supersample;
  const double inv = 1.0 / (n * n);

  // Subsample offsets within a pixel centred at 0.
  std::vector<double> offs(n);
  for (int k = 0; k < n; ++k) offs[k] = (k + 0.5) / n - 0.5;

  const double half_px = scene.platform_half_extent / scene.mm_per_pixel;
  const Vec2d c = cal.platform_center_px;
  const Vec2d ball = plate_to_pixel(state.ball_pos, cal);
  const double r_px = scene.ball_radius / scene.mm_per_pixel;
  const double r2 = r_px * r_px;

  auto coverage = [&](auto inside, int px, int py) {
    int hits = 0;
    for (double oy : offs)
      for (double ox : offs) hits += inside(px + ox, py + oy) ? 1 : 0;
    return hits * inv;
  };
  auto in_platform = [&](double x, double y) {
    return std::abs(x - c.x()) <= half_px && std::abs(y - c.y()) <= half_px;
  };
  auto in_ball = [&](double x, double y) {
    const double dx = x - ball.x(), dy = y - ball.y();
    return dx * dx + dy * dy <= r2;
  };

  std::vector<double> buf(static_cast<std::size_t>(scene.width) * scene.height * 3);
  auto put = [&](int x, int y, const Rgb& col, double w) {
    double* p = &buf[(static_cast<std::size_t>(y) * scene.width + x) * 3];
    for (int ch = 0; ch < 3; ++ch) p[ch] = (1.0 - w) * p[ch] + w * col[ch];
  };

  for (int y = 0; y < scene.height; ++y)
    for (int x = 0; x < scene.width; ++x) {
      double* p = &buf[(static_cast<std::size_t>(y) * scene.width + x) * 3];
      for (int ch = 0; ch < 3; ++ch) p[ch] = scene.background[ch];
      const bool edge = std::abs(std::abs(x - c.x()) - half_px) < 1.0 ||
                        std::abs(std::abs(y - c.y()) - half_px) < 1.0;
      const double w = edge ? coverage(in_platform, x, y) : (in_platform(x, y) ? 1.0 : 0.0);
      if (w > 0) put(x, y, scene.platform, w);
    }

  const int x0 = std::max(0, static_cast<int>(std::floor(ball.x() - r_px - 1)));
  const int x1 = std::min(scene.width - 1, static_cast<int>(std::ceil(ball.x() + r_px + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(ball.y() - r_px - 1)));
  const int y1 = std::min(scene.height - 1, static_cast<int>(std::ceil(ball.y() + r_px + 1)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const double w = coverage(in_ball, x, y);
      if (w > 0) put(x, y, scene.ball, w);
    }

  if (scene.noise_sigma > 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(scene.seed), static_cast<std::uint32_t>(scene.seed >> 32),
                      static_cast<std::uint32_t>(frame_index), static_cast<std::uint32_t>(frame_index >> 32)};
    std::mt19937 rng(seq);
    std::normal_distribution<float> noise(0.0f, static_cast<float>(scene.noise_sigma));
    for (double& v : buf) v += noise(rng);
  }

  Image out(scene.width, scene.height, Layout::RGB8);
  auto bytes = out.data();
  for (std::size_t i = 0; i < buf.size(); ++i) bytes[i] = to_byte(buf[i]);
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0)) throw ContractViolation("blur sigma must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& w : k) w /= sum;
  return k;
}

Image gaussian_blur(const Image& img, double sigma) {
  const std::vector<double> kd = gaussian_kernel(sigma);
  const std::vector<float> k(kd.begin(), kd.end());
  const int radius = static_cast<int>(k.size() / 2);
  const int w = img.width(), h = img.height(), ch = img.channels();
  if (img.empty()) return img;
  const auto src = img.data();
  const std::size_t row = static_cast<std::size_t>(w) * ch;

  // Horizontal pass on interleaved rows padded by edge replication.
  std::vector<float> tmp(row * h);
  std::vector<float> padded((w + 2 * radius) * ch);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* in = src.data() + y * row;
    for (int x = -radius; x < w + radius; ++x) {
      const std::uint8_t* px = in + std::clamp(x, 0, w - 1) * ch;
      for (int c = 0; c < ch; ++c) padded[(x + radius) * ch + c] = px[c];
    }
    float* out = tmp.data() + y * row;
    std::fill(out, out + row, 0.0f);
    for (int i = 0; i <= 2 * radius; ++i) {
      const float wgt = k[i];
      const float* tap = padded.data() + i * ch;
      for (std::size_t j = 0; j < row; ++j) out[j] += wgt * tap[j];
    }
  }

  // Vertical pass; rows off the edge clamp to the border row.
  Image result(w, h, img.layout());
  auto dst = result.data();
  std::vector<float> acc(row);
  for (int y = 0; y < h; ++y) {
    std::fill(acc.begin(), acc.end(), 0.0f);
    for (int i = -radius; i <= radius; ++i) {
      const float* in = tmp.data() + std::clamp(y + i, 0, h - 1) * row;
      const float wgt = k[i + radius];
      for (std::size_t j = 0; j < row; ++j) acc[j] += wgt * in[j];
    }
    std::uint8_t* out = dst.data() + y * row;
    for (std::size_t j = 0; j < row; ++j) out[j] = to_byte(acc[j]);
  }
  return result;
}

Hsv rgb_to_hsv(const Rgb& rgb) {
  const double r = rgb[0] / 255.0, g = rgb[1] / 255.0, b = rgb[2] / 255.0;
  const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  const double chroma = mx - mn;
  Hsv out;
  out.v = mx;
  out.s = mx > 0 ? chroma / mx : 0.0;
  if (chroma > 0) {
    double h;
    if (mx == r)
      h = (g - b) / chroma;
    else if (mx == g)
      h = (b - r) / chroma + 2.0;
    else
      h = (r - g) / chroma + 4.0;
    h *= 60.0;
    if (h < 0) h += 360.0;
    out.h = h;
  }
  return out;
}

Rgb hsv_to_rgb(const Hsv& hsv) {
  const double h = std::fmod(std::fmod(hsv.h, 360.0) + 360.0, 360.0) / 60.0;
  const double c = hsv.v * hsv.s;
  const double x = c * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  const double m = hsv.v - c;
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  return {to_byte((r + m) * 255.0), to_byte((g + m) * 255.0), to_byte((b + m) * 255.0)};
}

Image rgb_to_hsv(const Image& img) {
  require_layout(img, Layout::RGB8, "rgb_to_hsv");
  Image out(img.width(), img.height(), Layout::HSV8);
  const auto in = img.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < in.size(); i += 3) {
    const Hsv p = rgb_to_hsv(Rgb{in[i], in[i + 1], in[i + 2]});
    dst[i] = to_byte(p.h * (255.0 / 360.0));
    dst[i + 1] = to_byte(p.s * 255.0);
    dst[i + 2] = to_byte(p.v * 255.0);
  }
  return out;
}

Image hsv_to_rgb(const Image& img) {
  require_layout(img, Layout::HSV8, "hsv_to_rgb");
  Image out(img.width(), img.height(), Layout::RGB8);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const Rgb p = hsv_to_rgb(
          Hsv{img.at(x, y, 0) * 360.0 / 255.0, img.at(x, y, 1) / 255.0, img.at(x, y, 2) / 255.0});
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = p[c];
    }
  return out;
}

void HsvRange::validate() const {
  if (!(sat_lo <= sat_hi)) throw ContractViolation("saturation lo exceeds hi");
  if (!(val_lo <= val_hi)) throw ContractViolation("value lo exceeds hi");
  if (hue_lo < 0 || hue_lo > 360 || hue_hi < 0 || hue_hi > 360)
    throw ContractViolation("hue bounds must lie in [0, 360]");
}

namespace {

bool hsv_bytes_in_range(std::uint8_t hb, std::uint8_t sb, std::uint8_t vb, const HsvRange& range,
                        bool wraps) {
  const double h = hb * 360.0 / 255.0;
  const double s = sb / 255.0;
  const double v = vb / 255.0;
  const bool hue_ok = wraps ? (h >= range.hue_lo || h <= range.hue_hi)
                            : (h >= range.hue_lo && h <= range.hue_hi);
  return hue_ok && s >= range.sat_lo && s <= range.sat_hi && v >= range.val_lo && v <= range.val_hi;
}

}  // namespace

Image mask_in_range(const Image& hsv, const HsvRange& range) {
  require_layout(hsv, Layout::HSV8, "mask_in_range");
  range.validate();
  const bool wraps = range.hue_lo > range.hue_hi;
  Image out(hsv.width(), hsv.height(), Layout::MASK1);
  const auto in = hsv.data();
  auto dst = out.data();
  for (std::size_t i = 0, p = 0; i < in.size(); i += 3, ++p)
    dst[p] = hsv_bytes_in_range(in[i], in[i + 1], in[i + 2], range, wraps) ? 255 : 0;
  return out;
}

Image threshold_hsv(const Image& rgb, const HsvRange& range) {
  require_layout(rgb, Layout::RGB8, "threshold_hsv");
  range.validate();
  const bool wraps = range.hue_lo > range.hue_hi;
  Image out(rgb.width(), rgb.height(), Layout::MASK1);
  const auto in = rgb.data();
  auto dst = out.data();
  for (std::size_t i = 0, p = 0; i < in.size(); i += 3, ++p) {
    // V quantizes back to the largest channel; reject on it before the hue work.
    const std::uint8_t vb = std::max({in[i], in[i + 1], in[i + 2]});
    if (vb / 255.0 < range.val_lo || vb / 255.0 > range.val_hi) {
      dst[p] = 0;
      continue;
    }
    const Hsv q = rgb_to_hsv(Rgb{in[i], in[i + 1], in[i + 2]});
    dst[p] = hsv_bytes_in_range(to_byte(q.h * (255.0 / 360.0)), to_byte(q.s * 255.0), vb, range, wraps)
                 ? 255
                 : 0;
  }
  return out;
}

Image to_grayscale(const Image& img) {
  require_layout(img, Layout::RGB8, "to_grayscale");
  Image out(img.width(), img.height(), Layout::GRAY8);
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x)
      out.at(x, y) =
          to_byte(0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2));
  return out;
}

namespace {

// Moore-neighbour tracing, starting from the component's first pixel in
// raster order (its top-left-most pixel).
std::vector<std::pair<int, int>> trace_boundary(const std::vector<int>& labels, int w, int h,
                                                int label, int sx, int sy) {
  static constexpr int dx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
  static constexpr int dy[8] = {0, 1, 1, 1, 0, -1, -1, -1};
  auto is = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < w && y < h && labels[static_cast<std::size_t>(y) * w + x] == label;
  };
  std::vector<std::pair<int, int>> out{{sx, sy}};
  // Raster-first pixel has nothing to its west or north, so start the scan from the west.
  int x = sx, y = sy, from = 4;
  const int start_from = from;
  for (std::size_t guard = 0; guard < 4 * static_cast<std::size_t>(w) * h + 8; ++guard) {
    int dir = -1;
    for (int k = 1; k <= 8; ++k) {
      const int d = (from + k) % 8;
      if (is(x + dx[d], y + dy[d])) {
        dir = d;
        break;
      }
    }
    if (dir < 0) break;  // isolated pixel
    x += dx[dir];
    y += dy[dir];
    from = (dir + 4) % 8;
    if (x == sx && y == sy && from == start_from) break;
    if (x == sx && y == sy) {
      // Back at the start from another side; stop once the next move would repeat the first.
      int next = -1;
      for (int k = 1; k <= 8; ++k) {
        const int d = (from + k) % 8;
        if (is(x + dx[d], y + dy[d])) {
          next = d;
          break;
        }
      }
      if (out.size() > 1 && next >= 0 && x + dx[next] == out[1].first && y + dy[next] == out[1].second)
        break;
    }
    out.emplace_back(x, y);
  }
  return out;
}

}  // namespace

std::vector<Blob> find_blobs(const Image& mask, long min_pixels) {
  require_layout(mask, Layout::MASK1, "find_blobs");
  const int w = mask.width(), h = mask.height();
  std::vector<int> labels(static_cast<std::size_t>(w) * h, 0);
  std::vector<Blob> blobs;
  std::vector<std::pair<int, int>> stack;
  int next = 0;

  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (mask.at(x, y) == 0 || labels[static_cast<std::size_t>(y) * w + x] != 0) continue;
      const int label = ++next;
      long count = 0;
      long long sx = 0, sy = 0;
      BoundingBox box{x, y, x, y};
      labels[static_cast<std::size_t>(y) * w + x] = label;
      stack.assign(1, {x, y});
      while (!stack.empty()) {
        const auto [cx, cy] = stack.back();
        stack.pop_back();
        ++count;
        sx += cx;
        sy += cy;
        box.min_x = std::min(box.min_x, cx);
        box.max_x = std::max(box.max_x, cx);
        box.min_y = std::min(box.min_y, cy);
        box.max_y = std::max(box.max_y, cy);
        for (int oy = -1; oy <= 1; ++oy)
          for (int ox = -1; ox <= 1; ++ox) {
            const int nx = cx + ox, ny = cy + oy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            auto& l = labels[static_cast<std::size_t>(ny) * w + nx];
            if (l == 0 && mask.at(nx, ny) != 0) {
              l = label;
              stack.emplace_back(nx, ny);
            }
          }
      }
      if (count < min_pixels) continue;
      Blob b;
      b.pixel_count = count;
      b.centroid = Vec2d(static_cast<double>(sx) / count, static_cast<double>(sy) / count);
      b.bbox = box;
      b.boundary = trace_boundary(labels, w, h, label, x, y);
      blobs.push_back(std::move(b));
    }

  std::stable_sort(blobs.begin(), blobs.end(),
                   [](const Blob& a, const Blob& b) { return a.pixel_count > b.pixel_count; });
  return blobs;
}

void PipelineConfig::validate() const {
  if (!(blur_sigma >= 0)) throw ContractViolation("blur_sigma must be non-negative");
  ball_range.validate();
  if (min_ball_pixels < 1 || max_ball_pixels < min_ball_pixels)
    throw ContractViolation("ball pixel bounds must satisfy 1 <= min <= max");
}

BallFix locate_ball(const Image& frame, const PipelineConfig& pipe, const Calibration& cal,
                    double expected_area_px) {
  require_layout(frame, Layout::RGB8, "locate_ball");
  if (!(cal.mm_per_pixel > 0)) throw ContractViolation("calibration scale must be positive");
  pipe.validate();
  const Image smooth = pipe.blur_sigma > 0 ? gaussian_blur(frame, pipe.blur_sigma) : frame;
  const Image mask = threshold_hsv(smooth, pipe.ball_range);
  for (const Blob& b : find_blobs(mask, pipe.min_ball_pixels)) {
    if (b.pixel_count > pipe.max_ball_pixels) continue;
    BallFix fix;
    fix.position_px = b.centroid;
    fix.position_mm = pixel_to_plate(b.centroid, cal);
    fix.pixel_count = b.pixel_count;
    fix.confidence = expected_area_px > 0 ? std::min(1.0, b.pixel_count / expected_area_px) : 1.0;
    return fix;
  }
  throw BallNotFound();
}

Calibration locate_platform(const Image& frame, const PipelineConfig& pipe,
                            double platform_half_extent_mm) {
  require_layout(frame, Layout::RGB8, "locate_platform");
  if (!(platform_half_extent_mm > 0)) throw ContractViolation("platform extent must be positive");
  const Image smooth = pipe.blur_sigma > 0 ? gaussian_blur(frame, pipe.blur_sigma) : frame;
  const Image dark = threshold_hsv(smooth, HsvRange{0, 360, 0, 1, 0, pipe.platform_max_value});
  const auto blobs = find_blobs(dark, 1);
  if (blobs.empty()) throw InsufficientData("no dark region in frame");
  const BoundingBox& box = blobs.front().bbox;
  Calibration cal;
  cal.platform_center_px = box.center();
  cal.mm_per_pixel = 2.0 * platform_half_extent_mm / (box.max_x - box.min_x + 1);
  return cal;
}

}  // namespace stewart
