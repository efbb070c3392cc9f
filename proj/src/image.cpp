#include "stewart/image.hpp"

#include "stewart/types.hpp"

#include <cctype>
#include <fstream>
#include <string>

namespace stewart {

const char* to_string(Layout layout) {
  switch (layout) {
    case Layout::RGB8: return "RGB8";
    case Layout::HSV8: return "HSV8";
    case Layout::GRAY8: return "GRAY8";
    case Layout::MASK1: return "MASK1";
  }
  return "?";
}

Image::Image(int width, int height, Layout layout, std::uint8_t fill)
    : width_(width), height_(height), layout_(layout) {
  if (width < 0 || height < 0) throw ContractViolation("negative image size");
  data_.assign(static_cast<std::size_t>(width) * height * channel_count(layout), fill);
}

Image::Image(int width, int height, Layout layout, std::vector<std::uint8_t> data)
    : width_(width), height_(height), layout_(layout), data_(std::move(data)) {
  if (width < 0 || height < 0) throw ContractViolation("negative image size");
  if (data_.size() != static_cast<std::size_t>(width) * height * channel_count(layout))
    throw ContractViolation("pixel buffer length does not match image size");
}

void write_pnm(const Image& img, const std::filesystem::path& path) {
  const char* magic = nullptr;
  switch (img.layout()) {
    case Layout::RGB8: magic = "P6"; break;
    case Layout::GRAY8:
    case Layout::MASK1: magic = "P5"; break;
    case Layout::HSV8: throw LayoutError("HSV8 images have no PNM representation");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << magic << '\n' << img.width() << ' ' << img.height() << "\n255\n";
  const auto bytes = img.data();
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

namespace {

// Next header token, skipping whitespace and '#' comments.
std::string header_token(std::istream& in) {
  std::string token;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(ch));
  }
  return token;
}

int header_int(std::istream& in, const std::filesystem::path& path) {
  const std::string tok = header_token(in);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("malformed PNM header in " + path.string());
  }
}

}  // namespace

Image read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string magic = header_token(in);
  Layout layout;
  if (magic == "P6")
    layout = Layout::RGB8;
  else if (magic == "P5")
    layout = Layout::GRAY8;
  else
    throw std::runtime_error(path.string() + " is not a binary PPM/PGM file");
  const int width = header_int(in, path);
  const int height = header_int(in, path);
  const int maxval = header_int(in, path);
  if (maxval != 255) throw std::runtime_error("only maxval 255 is supported: " + path.string());
  std::vector<std::uint8_t> data(static_cast<std::size_t>(width) * height * channel_count(layout));
  in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
  if (in.gcount() != static_cast<std::streamsize>(data.size()))
    throw std::runtime_error("truncated pixel data in " + path.string());
  return Image(width, height, layout, std::move(data));
}

}  // namespace stewart
