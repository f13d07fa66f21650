#include "bookvis/image.hpp"

#include <png.h>
#include <jpeglib.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <string>

#include "bookvis/error.hpp"

namespace bookvis {

RasterImage::RasterImage(int width, int height, Rgb fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) throw Error(ErrorCode::validation, "image dimensions must be positive");
  data_.resize(static_cast<std::size_t>(width) * height * 3);
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill.r;
    data_[i + 1] = fill.g;
    data_[i + 2] = fill.b;
  }
}

namespace {

void check_dims(std::uint64_t w, std::uint64_t h) {
  if (w == 0 || h == 0) throw Error(ErrorCode::decode, "image has zero size");
  if (w > kMaxDecodeDimension || h > kMaxDecodeDimension) {
    throw Error(ErrorCode::too_large, "image exceeds 8192 px on a side");
  }
}

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorCode::decode, "png: " + msg);
  }
  try {
    check_dims(img.width, img.height);
  } catch (...) {
    png_image_free(&img);
    throw;
  }
  img.format = PNG_FORMAT_RGB;
  RasterImage out(static_cast<int>(img.width), static_cast<int>(img.height));
  png_color background{255, 255, 255};
  if (!png_image_finish_read(&img, &background, out.bytes().data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw Error(ErrorCode::decode, "png: " + msg);
  }
  png_image_free(&img);
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

[[noreturn]] void jpeg_fail(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

// Corrupt-data warnings (truncation included) abort decoding instead of gray-filling.
void jpeg_message(j_common_ptr cinfo, int level) {
  if (level < 0) jpeg_fail(cinfo);
}

RasterImage decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_fail;
  err.base.emit_message = jpeg_message;
  err.message[0] = '\0';
  // Only trivially destructible state lives across setjmp.
  std::vector<std::uint8_t>* volatile pixels = nullptr;
  int width = 0, height = 0;
  int failure = 0;  // 0 ok, 1 decode error, 2 too large
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    delete pixels;
    throw Error(ErrorCode::decode, std::string("jpeg: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  if (cinfo.image_width == 0 || cinfo.image_height == 0) {
    failure = 1;
  } else if (cinfo.image_width > kMaxDecodeDimension || cinfo.image_height > kMaxDecodeDimension) {
    failure = 2;
  }
  if (failure == 0) {
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    width = static_cast<int>(cinfo.output_width);
    height = static_cast<int>(cinfo.output_height);
    pixels = new std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
      JSAMPROW row = pixels->data() + static_cast<std::size_t>(cinfo.output_scanline) * width * 3;
      jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
  }
  jpeg_destroy_decompress(&cinfo);
  if (failure == 1) throw Error(ErrorCode::decode, "jpeg: zero size");
  if (failure == 2) throw Error(ErrorCode::too_large, "image exceeds 8192 px on a side");
  RasterImage out(width, height);
  std::copy(pixels->begin(), pixels->end(), out.bytes().begin());
  delete pixels;
  return out;
}

}  // namespace

RasterImage decode_image(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kPng[] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  if (bytes.size() >= 8 && std::equal(std::begin(kPng), std::end(kPng), bytes.begin())) return decode_png(bytes);
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) return decode_jpeg(bytes);
  throw Error(ErrorCode::decode, "unsupported image format");
}

std::vector<std::uint8_t> encode_png(const RasterImage& image) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width());
  img.height = static_cast<png_uint_32>(image.height());
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  const auto* data = image.bytes().data();
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, data, 0, nullptr)) {
    throw Error(ErrorCode::io, std::string("png encode: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, data, 0, nullptr)) {
    throw Error(ErrorCode::io, std::string("png encode: ") + img.message);
  }
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> encode_jpeg(const RasterImage& image, int quality) {
  jpeg_compress_struct cinfo;
  jpeg_error_mgr jerr;
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_compress(&cinfo);
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(image.width());
  cinfo.image_height = static_cast<JDIMENSION>(image.height());
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    auto* row = const_cast<JSAMPLE*>(image.bytes().data() + static_cast<std::size_t>(cinfo.next_scanline) * image.width() * 3);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  std::vector<std::uint8_t> out(buffer, buffer + size);
  jpeg_destroy_compress(&cinfo);
  std::free(buffer);
  return out;
}

RasterImage resize_area(const RasterImage& image, int width, int height) {
  if (width == image.width() && height == image.height()) return image;
  RasterImage out(width, height);
  const double sx = static_cast<double>(image.width()) / width;
  const double sy = static_cast<double>(image.height()) / height;
  std::vector<double> acc(3);
  for (int y = 0; y < height; ++y) {
    const double y0 = y * sy, y1 = (y + 1) * sy;
    for (int x = 0; x < width; ++x) {
      const double x0 = x * sx, x1 = (x + 1) * sx;
      double r = 0, g = 0, b = 0, area = 0;
      for (int iy = static_cast<int>(y0); iy < std::min<int>(image.height(), static_cast<int>(std::ceil(y1))); ++iy) {
        const double wy = std::min<double>(iy + 1, y1) - std::max<double>(iy, y0);
        if (wy <= 0) continue;
        for (int ix = static_cast<int>(x0); ix < std::min<int>(image.width(), static_cast<int>(std::ceil(x1))); ++ix) {
          const double wx = std::min<double>(ix + 1, x1) - std::max<double>(ix, x0);
          if (wx <= 0) continue;
          const double w = wx * wy;
          const auto c = image.at(ix, iy);
          r += w * c.r;
          g += w * c.g;
          b += w * c.b;
          area += w;
        }
      }
      auto q = [area](double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v / area), 0L, 255L)); };
      out.set(x, y, {q(r), q(g), q(b)});
    }
  }
  return out;
}

std::vector<float> to_gray(const RasterImage& image) {
  std::vector<float> out(static_cast<std::size_t>(image.width()) * image.height());
  const auto px = image.bytes();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>((0.299 * px[3 * i] + 0.587 * px[3 * i + 1] + 0.114 * px[3 * i + 2]) / 255.0);
  }
  return out;
}

}  // namespace bookvis
