#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace stewart {

enum class Layout { RGB8, HSV8, GRAY8, MASK1 };

constexpr int channel_count(Layout layout) {
  return layout == Layout::RGB8 || layout == Layout::HSV8 ? 3 : 1;
}

const char* to_string(Layout layout);

/// Row-major raster. HSV8 stores hue scaled so 0..255 spans 0..360 degrees;
/// MASK1 pixels are 0 or 255.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Layout layout, std::uint8_t fill = 0);
  Image(int width, int height, Layout layout, std::vector<std::uint8_t> data);

  int width() const { return width_; }
  int height() const { return height_; }
  Layout layout() const { return layout_; }
  int channels() const { return channel_count(layout_); }
  bool empty() const { return data_.empty(); }

  std::uint8_t& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels() + c];
  }
  std::uint8_t at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels() + c];
  }

  std::span<std::uint8_t> data() { return data_; }
  std::span<const std::uint8_t> data() const { return data_; }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  Layout layout_ = Layout::GRAY8;
  std::vector<std::uint8_t> data_;
};

/// Binary PPM (P6) for RGB8, binary PGM (P5) for GRAY8 and MASK1. maxval 255.
void write_pnm(const Image& img, const std::filesystem::path& path);
/// P6 loads as RGB8, P5 as GRAY8.
Image read_pnm(const std::filesystem::path& path);

}  // namespace stewart
