#include "exmo/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace exmo {
namespace {

std::string lower_ext(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

// Netpbm header token, skipping whitespace and '#' comments.
bool next_token(std::istream& in, std::string& tok) {
  tok.clear();
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
    } else if (!std::isspace(c)) {
      tok.push_back(static_cast<char>(c));
      break;
    }
  }
  while ((c = in.peek()) != EOF && !std::isspace(c) && c != '#') tok.push_back(static_cast<char>(in.get()));
  return !tok.empty();
}

int parse_header_int(std::istream& in, const std::filesystem::path& path, const char* field) {
  std::string tok;
  if (!next_token(in, tok)) throw IngestionError(path.string() + ": missing " + field);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size() || v <= 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw IngestionError(path.string() + ": bad " + field + " '" + tok + "'");
  }
}

Frame read_netpbm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + path.string());
  std::string magic;
  next_token(in, magic);
  const bool ascii = magic == "P2" || magic == "P3";
  const bool color = magic == "P3" || magic == "P6";
  if (!(magic == "P2" || magic == "P3" || magic == "P5" || magic == "P6")) {
    throw IngestionError(path.string() + ": unsupported netpbm magic '" + magic + "'");
  }
  const int width = parse_header_int(in, path, "width");
  const int height = parse_header_int(in, path, "height");
  const int maxval = parse_header_int(in, path, "maxval");
  if (maxval > 255) throw IngestionError(path.string() + ": only 8-bit netpbm is supported");
  const std::size_t channels = color ? 3 : 1;
  const std::size_t n = static_cast<std::size_t>(width) * height * channels;
  std::vector<int> raw(n);
  if (ascii) {
    for (auto& v : raw) {
      std::string tok;
      if (!next_token(in, tok)) throw IngestionError(path.string() + ": truncated pixel data");
      v = std::stoi(tok);
    }
  } else {
    in.get();  // single whitespace after maxval
    std::vector<unsigned char> bytes(n);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) throw IngestionError(path.string() + ": truncated pixel data");
    std::copy(bytes.begin(), bytes.end(), raw.begin());
  }
  Frame f = Frame::filled(height, width, 0.0f);
  const float scale = 1.0f / static_cast<float>(maxval);
  for (std::size_t i = 0; i < f.pixels.size(); ++i) {
    if (color) {
      f.pixels[i] = luma(raw[3 * i] * scale, raw[3 * i + 1] * scale, raw[3 * i + 2] * scale);
    } else {
      f.pixels[i] = static_cast<float>(raw[i]) * scale;
    }
    f.pixels[i] = std::clamp(f.pixels[i], 0.0f, 1.0f);
  }
  return f;
}

Frame read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    throw IngestionError(path.string() + ": " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IngestionError(path.string() + ": " + msg);
  }
  Frame f = Frame::filled(static_cast<int>(image.height), static_cast<int>(image.width), 0.0f);
  for (std::size_t i = 0; i < f.pixels.size(); ++i) {
    const float v = color ? luma(buf[3 * i] / 255.0f, buf[3 * i + 1] / 255.0f, buf[3 * i + 2] / 255.0f)
                          : buf[i] / 255.0f;
    f.pixels[i] = std::clamp(v, 0.0f, 1.0f);
  }
  return f;
}

}  // namespace

bool is_image_file(const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  return ext == ".pgm" || ext == ".ppm" || ext == ".pnm" || ext == ".png";
}

Frame read_image(const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") return read_png(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return read_netpbm(path);
  throw IngestionError(path.string() + ": unsupported image type");
}

std::uint8_t quantize(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

void write_pgm(const Frame& frame, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("cannot write " + path.string());
  out << "P5\n" << frame.width << " " << frame.height << "\n255\n";
  std::vector<char> bytes(frame.pixels.size());
  std::transform(frame.pixels.begin(), frame.pixels.end(), bytes.begin(),
                 [](float v) { return static_cast<char>(quantize(v)); });
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IngestionError("failed writing " + path.string());
}

}  // namespace exmo
