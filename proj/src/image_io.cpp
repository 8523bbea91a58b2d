#include "prnu/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include <fmt/format.h>
#include <jpeglib.h>
#include <png.h>

namespace prnu {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw Error(fmt::format("cannot open '{}'", path.string()));
  return f;
}

Plane from_interleaved(const std::vector<unsigned char>& buf, int rows, int cols, int channels) {
  if (channels == 1 || channels == 2) {
    Plane out(rows, cols);
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = buf[i * channels];
    return out;
  }
  Plane r(rows, cols), g(rows, cols), b(rows, cols);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r.values()[i] = buf[i * channels];
    g.values()[i] = buf[i * channels + 1];
    b.values()[i] = buf[i * channels + 2];
  }
  return to_grayscale(r, g, b);
}

Plane load_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw Error(fmt::format("'{}': {}", path.string(), image.message));
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(fmt::format("'{}': {}", path.string(), image.message));
  }
  return from_interleaved(buf, static_cast<int>(image.height), static_cast<int>(image.width), color ? 3 : 1);
}

struct JpegErrorManager {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

Plane load_jpeg(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  jpeg_decompress_struct cinfo{};
  JpegErrorManager jerr{};
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  std::vector<unsigned char> buf;
  int rows = 0, cols = 0, channels = 0;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(fmt::format("'{}': {}", path.string(), jerr.message));
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f.get());
  jpeg_read_header(&cinfo, TRUE);
  jpeg_start_decompress(&cinfo);
  rows = static_cast<int>(cinfo.output_height);
  cols = static_cast<int>(cinfo.output_width);
  channels = cinfo.output_components;
  buf.resize(static_cast<std::size_t>(rows) * cols * channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = buf.data() + static_cast<std::size_t>(cinfo.output_scanline) * cols * channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return from_interleaved(buf, rows, cols, channels);
}

// Binary P5/P6 with maxval <= 255.
Plane load_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open '{}'", path.string()));
  auto next_token = [&]() {
    std::string tok;
    char ch;
    while (in.get(ch)) {
      if (ch == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!tok.empty()) break;
        continue;
      }
      tok.push_back(ch);
    }
    return tok;
  };
  const std::string magic = next_token();
  if (magic != "P5" && magic != "P6") throw Error(fmt::format("'{}': unsupported PNM type", path.string()));
  int cols = 0, rows = 0, maxval = 0;
  try {
    cols = std::stoi(next_token());
    rows = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw Error(fmt::format("'{}': malformed PNM header", path.string()));
  }
  if (maxval <= 0 || maxval > 255 || rows < 1 || cols < 1) {
    throw Error(fmt::format("'{}': only 8-bit PNM is supported", path.string()));
  }
  const int channels = magic == "P5" ? 1 : 3;
  std::vector<unsigned char> buf(static_cast<std::size_t>(rows) * cols * channels);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
    throw Error(fmt::format("'{}': truncated PNM data", path.string()));
  }
  return from_interleaved(buf, rows, cols, channels);
}

}  // namespace

Plane load_image(const std::filesystem::path& path) {
  unsigned char sig[8] = {};
  {
    FilePtr f = open_file(path, "rb");
    if (std::fread(sig, 1, sizeof sig, f.get()) < 2) throw Error(fmt::format("'{}': file too short", path.string()));
  }
  if (sig[0] == 0x89 && sig[1] == 'P') return load_png(path);
  if (sig[0] == 0xFF && sig[1] == 0xD8) return load_jpeg(path);
  if (sig[0] == 'P' && (sig[1] == '5' || sig[1] == '6')) return load_pnm(path);
  throw Error(fmt::format("'{}': unrecognized image format", path.string()));
}

void save_png(const Plane& image, const std::filesystem::path& path) {
  std::vector<unsigned char> buf(image.size());
  auto v = image.values();
  for (std::size_t i = 0; i < buf.size(); ++i) {
    buf[i] = static_cast<unsigned char>(std::clamp(std::lround(v[i]), 0L, 255L));
  }
  png_image out{};
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(image.cols());
  out.height = static_cast<png_uint_32>(image.rows());
  out.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&out, path.c_str(), 0, buf.data(), 0, nullptr)) {
    throw Error(fmt::format("'{}': {}", path.string(), out.message));
  }
}

}  // namespace prnu
