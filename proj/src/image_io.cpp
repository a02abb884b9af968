#include "ndbench/image_io.h"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

#include "ndbench/errors.h"
#include "io_util.h"

namespace ndbench {

void GrayImage::validate() const {
  if (width < 1 || height < 1) throw input_error("image dimensions must be >= 1");
  if (pixels.size() != static_cast<std::size_t>(width) * height)
    throw input_error("image pixel storage does not match width*height");
  for (float v : pixels)
    if (!std::isfinite(v)) throw input_error("image contains non-finite pixels");
}

namespace {

float luma(float r, float g, float b) { return 0.299f * r + 0.587f * g + 0.114f * b; }

GrayImage load_pgm(const std::string& path, const std::string& text) {
  // P5 = binary, P2 = ascii; comments (#) allowed in the header.
  std::size_t pos = 2;
  auto next_token = [&]() -> std::string {
    while (pos < text.size()) {
      if (std::isspace(static_cast<unsigned char>(text[pos]))) {
        ++pos;
      } else if (text[pos] == '#') {
        while (pos < text.size() && text[pos] != '\n') ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])))
      ++pos;
    if (start == pos) throw input_error(path + ": truncated PGM header");
    return text.substr(start, pos - start);
  };

  const bool binary = text[1] == '5';
  const auto width = detail::parse_u64(next_token(), path);
  const auto height = detail::parse_u64(next_token(), path);
  const auto maxval = detail::parse_u64(next_token(), path);
  if (width == 0 || height == 0 || maxval == 0 || maxval > 255)
    throw input_error(path + ": unsupported PGM geometry or maxval");

  GrayImage img;
  img.width = static_cast<int>(width);
  img.height = static_cast<int>(height);
  img.pixels.resize(width * height);
  const float scale = 255.0f / static_cast<float>(maxval);

  if (binary) {
    ++pos;  // exactly one whitespace byte separates header and payload
    if (text.size() - pos < img.pixels.size())
      throw input_error(path + ": truncated PGM payload");
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
      img.pixels[i] = static_cast<unsigned char>(text[pos + i]) * scale;
  } else {
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
      const auto v = detail::parse_u64(next_token(), path);
      if (v > maxval) throw input_error(path + ": PGM sample exceeds maxval");
      img.pixels[i] = static_cast<float>(v) * scale;
    }
  }
  return img;
}

struct PngReader {
  png_structp png = nullptr;
  png_infop info = nullptr;
  std::FILE* file = nullptr;
  ~PngReader() {
    if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (file) std::fclose(file);
  }
};

GrayImage load_png(const std::string& path) {
  PngReader r;
  r.file = std::fopen(path.c_str(), "rb");
  if (!r.file) throw input_error("cannot open file: " + path);
  r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (r.png) r.info = png_create_info_struct(r.png);
  if (!r.png || !r.info) throw std::runtime_error("png reader allocation failed");
  if (setjmp(png_jmpbuf(r.png))) throw input_error(path + ": PNG decode failed");

  png_init_io(r.png, r.file);
  png_read_info(r.png, r.info);
  // Normalize every variant to 8-bit RGB or gray.
  png_set_strip_16(r.png);
  png_set_packing(r.png);
  png_set_strip_alpha(r.png);
  if (png_get_color_type(r.png, r.info) == PNG_COLOR_TYPE_PALETTE)
    png_set_palette_to_rgb(r.png);
  if (png_get_color_type(r.png, r.info) == PNG_COLOR_TYPE_GRAY &&
      png_get_bit_depth(r.png, r.info) < 8)
    png_set_expand_gray_1_2_4_to_8(r.png);
  png_read_update_info(r.png, r.info);

  const png_uint_32 width = png_get_image_width(r.png, r.info);
  const png_uint_32 height = png_get_image_height(r.png, r.info);
  const png_byte channels = png_get_channels(r.png, r.info);
  if (channels != 1 && channels != 3)
    throw input_error(path + ": unsupported PNG channel layout");

  std::vector<png_byte> row(static_cast<std::size_t>(width) * channels);
  GrayImage img;
  img.width = static_cast<int>(width);
  img.height = static_cast<int>(height);
  img.pixels.resize(static_cast<std::size_t>(width) * height);
  for (png_uint_32 y = 0; y < height; ++y) {
    png_read_row(r.png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < width; ++x) {
      float* out = &img.pixels[static_cast<std::size_t>(y) * width + x];
      *out = channels == 1 ? row[x]
                           : luma(row[3 * x], row[3 * x + 1], row[3 * x + 2]);
    }
  }
  png_read_end(r.png, nullptr);
  return img;
}

struct JpegErrorMgr {
  jpeg_error_mgr base;
  std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
  std::longjmp(mgr->jump, 1);
}

GrayImage load_jpeg(const std::string& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.c_str(), "rb"),
                                                       &std::fclose);
  if (!file) throw input_error("cannot open file: " + path);

  jpeg_decompress_struct cinfo{};
  JpegErrorMgr err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw input_error(path + ": JPEG decode failed");
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_GRAYSCALE;  // decoder applies the luma conversion
  jpeg_start_decompress(&cinfo);

  GrayImage img;
  img.width = static_cast<int>(cinfo.output_width);
  img.height = static_cast<int>(cinfo.output_height);
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  std::vector<JSAMPLE> row(cinfo.output_width);
  JSAMPROW rows[1] = {row.data()};
  while (cinfo.output_scanline < cinfo.output_height) {
    const std::size_t y = cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, rows, 1);
    for (std::size_t x = 0; x < row.size(); ++x)
      img.pixels[y * img.width + x] = row[x];
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}

}  // namespace

GrayImage load_image_gray(const std::string& path) {
  const std::string bytes = detail::read_text_file(path);
  if (bytes.size() < 4) throw input_error(path + ": not an image file");
  const auto* u = reinterpret_cast<const unsigned char*>(bytes.data());
  GrayImage img;
  if (u[0] == 0x89 && u[1] == 'P' && u[2] == 'N' && u[3] == 'G')
    img = load_png(path);
  else if (u[0] == 0xFF && u[1] == 0xD8)
    img = load_jpeg(path);
  else if (bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '2'))
    img = load_pgm(path, bytes);
  else
    throw input_error(path + ": unrecognized image format (PNG, JPEG, PGM supported)");
  img.validate();
  return img;
}

GrayImage resize_bilinear(const GrayImage& src, int out_width, int out_height) {
  src.validate();
  if (out_width < 1 || out_height < 1)
    throw input_error("resize target dimensions must be >= 1");
  GrayImage dst;
  dst.width = out_width;
  dst.height = out_height;
  dst.pixels.resize(static_cast<std::size_t>(out_width) * out_height);

  const double sx = static_cast<double>(src.width) / out_width;
  const double sy = static_cast<double>(src.height) / out_height;
  for (int y = 0; y < out_height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, src.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, src.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - x0;
      const double top = src.at(y0, x0) * (1 - wx) + src.at(y0, x1) * wx;
      const double bottom = src.at(y1, x0) * (1 - wx) + src.at(y1, x1) * wx;
      dst.pixels[static_cast<std::size_t>(y) * out_width + x] =
          static_cast<float>(top * (1 - wy) + bottom * wy);
    }
  }
  return dst;
}

void write_pgm(const std::string& path, const GrayImage& img) {
  img.validate();
  std::string out = "P5\n" + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.reserve(out.size() + img.pixels.size());
  for (float v : img.pixels) {
    const long q = std::lround(std::clamp(v, 0.0f, 255.0f));
    out.push_back(static_cast<char>(static_cast<unsigned char>(q)));
  }
  detail::write_text_file(path, out);
}

}  // namespace ndbench
