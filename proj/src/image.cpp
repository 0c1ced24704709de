/* Copyright 2026 The freeseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "freeseg/image.hpp"

#include <jpeglib.h>
#include <openssl/evp.h>
#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>
#include <sstream>

#include "freeseg/errors.hpp"

namespace freeseg {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

bool has_png_signature(std::FILE* f) {
  unsigned char sig[8] = {};
  const auto n = std::fread(sig, 1, 8, f);
  std::rewind(f);
  return n == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

// Reads a PNG with the low-level API. When keep_indices is set, paletted
// and greyscale files are returned as one byte per pixel.
struct PngPixels {
  int height = 0;
  int width = 0;
  int channels = 0;
  bool paletted = false;
  std::vector<std::uint8_t> data;
};

PngPixels read_png(const std::filesystem::path& path, bool keep_indices) {
  auto f = open_file(path, "rb");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  PngPixels out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("malformed PNG: " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    out.paletted = true;
    if (keep_indices) {
      if (bit_depth < 8) png_set_packing(png);
    } else {
      png_set_palette_to_rgb(png);
    }
  }
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (!keep_indices) {
    if (color_type == PNG_COLOR_TYPE_GRAY ||
        color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
      png_set_gray_to_rgb(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  } else if (color_type & PNG_COLOR_MASK_ALPHA) {
    png_set_strip_alpha(png);
  }
  png_read_update_info(png, info);
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  const auto rowbytes = png_get_rowbytes(png, info);
  out.data.resize(rowbytes * out.height);
  std::vector<png_bytep> rows(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = out.data.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_png(const std::filesystem::path& path, int height, int width,
               int color_type, const std::uint8_t* data, std::size_t rowbytes,
               const Palette* palette) {
  auto f = open_file(path, "wb");
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing PNG: " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  std::vector<png_color> colors;
  if (palette) {
    for (const auto& c : *palette) colors.push_back({c[0], c[1], c[2]});
    png_set_PLTE(png, info, colors.data(), static_cast<int>(colors.size()));
  }
  png_write_info(png, info);
  for (int y = 0; y < height; ++y)
    png_write_row(png, const_cast<png_bytep>(data + y * rowbytes));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

ImageRecord read_jpeg(const std::filesystem::path& path) {
  auto f = open_file(path, "rb");
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  ImageRecord image;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError("malformed JPEG " + path.string() + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  image.height = static_cast<int>(cinfo.output_height);
  image.width = static_cast<int>(cinfo.output_width);
  image.pixels.resize(static_cast<std::size_t>(image.height) * image.width * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = image.pixels.data() +
                   static_cast<std::size_t>(cinfo.output_scanline) * image.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return image;
}

}  // namespace

ImageRecord::ImageRecord(std::string image_id, int h, int w)
    : id(std::move(image_id)),
      height(h),
      width(w),
      pixels(static_cast<std::size_t>(h) * w * 3, 0) {}

void ImageRecord::validate() const {
  if (height < 8 || width < 8) {
    std::ostringstream os;
    os << "image '" << id << "' is " << height << "x" << width
       << ", minimum is 8x8";
    throw ShapeMismatch(os.str());
  }
  if (pixels.size() != static_cast<std::size_t>(height) * width * 3)
    throw ShapeMismatch("pixel buffer of image '" + id +
                        "' does not match its dimensions");
}

std::string sha256_hex(const void* data, std::size_t size) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data, size, digest, &len, EVP_sha256(), nullptr);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(len * 2, '0');
  for (unsigned int i = 0; i < len; ++i) {
    out[2 * i] = kHex[digest[i] >> 4];
    out[2 * i + 1] = kHex[digest[i] & 0xf];
  }
  return out;
}

std::string content_hash(const ImageRecord& image) {
  std::vector<std::uint8_t> buf(8 + image.pixels.size());
  const std::uint32_t dims[2] = {static_cast<std::uint32_t>(image.height),
                                 static_cast<std::uint32_t>(image.width)};
  std::memcpy(buf.data(), dims, 8);
  std::memcpy(buf.data() + 8, image.pixels.data(), image.pixels.size());
  return sha256_hex(buf.data(), buf.size());
}

std::string content_hash(std::string_view text) {
  return sha256_hex(text.data(), text.size());
}

const Palette& voc_palette() {
  static const Palette palette = [] {
    Palette p(256);
    for (int i = 0; i < 256; ++i) {
      int r = 0, g = 0, b = 0, c = i;
      for (int j = 0; j < 8; ++j) {
        r |= ((c >> 0) & 1) << (7 - j);
        g |= ((c >> 1) & 1) << (7 - j);
        b |= ((c >> 2) & 1) << (7 - j);
        c >>= 3;
      }
      p[i] = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
              static_cast<std::uint8_t>(b)};
    }
    return p;
  }();
  return palette;
}

ImageRecord read_image(const std::filesystem::path& path) {
  ImageRecord image;
  bool png = false;
  {
    auto f = open_file(path, "rb");
    png = has_png_signature(f.get());
  }
  if (png) {
    auto px = read_png(path, /*keep_indices=*/false);
    if (px.channels != 3)
      throw IoError("unsupported PNG channel layout in " + path.string());
    image.height = px.height;
    image.width = px.width;
    image.pixels = std::move(px.data);
  } else {
    image = read_jpeg(path);
  }
  image.id = path.stem().string();
  image.validate();
  return image;
}

void write_png_rgb(const std::filesystem::path& path, const ImageRecord& image) {
  write_png(path, image.height, image.width, PNG_COLOR_TYPE_RGB,
            image.pixels.data(), static_cast<std::size_t>(image.width) * 3,
            nullptr);
}

void write_jpeg(const std::filesystem::path& path, const ImageRecord& image,
                int quality) {
  auto f = open_file(path, "wb");
  jpeg_compress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    throw IoError("failed writing JPEG " + path.string());
  }
  jpeg_create_compress(&cinfo);
  jpeg_stdio_dest(&cinfo, f.get());
  cinfo.image_width = static_cast<JDIMENSION>(image.width);
  cinfo.image_height = static_cast<JDIMENSION>(image.height);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW row = const_cast<JSAMPROW>(
        image.pixels.data() +
        static_cast<std::size_t>(cinfo.next_scanline) * image.width * 3);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
}

Grid<std::uint8_t> read_label_png(const std::filesystem::path& path) {
  auto px = read_png(path, /*keep_indices=*/true);
  Grid<std::uint8_t> labels(px.height, px.width);
  if (px.channels == 1) {
    labels.data = std::move(px.data);
    return labels;
  }
  if (px.channels != 3)
    throw IoError("unsupported label PNG layout in " + path.string());
  // RGB-encoded label maps: invert the VOC colour map.
  const auto& pal = voc_palette();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::uint8_t* c = px.data.data() + i * 3;
    int found = -1;
    for (int k = 0; k < 256; ++k) {
      if (pal[k][0] == c[0] && pal[k][1] == c[1] && pal[k][2] == c[2]) {
        found = k;
        break;
      }
    }
    if (found < 0) throw IoError("colour outside the VOC palette in " + path.string());
    labels.data[i] = static_cast<std::uint8_t>(found);
  }
  return labels;
}

void write_label_png(const std::filesystem::path& path,
                     const Grid<std::uint8_t>& labels, const Palette& palette) {
  write_png(path, labels.height, labels.width, PNG_COLOR_TYPE_PALETTE,
            labels.data.data(), static_cast<std::size_t>(labels.width),
            &palette);
}

ImageRecord overlay(const ImageRecord& image, const Grid<std::int32_t>& labels,
                    double alpha, const Palette& palette) {
  if (labels.height != image.height || labels.width != image.width)
    throw ShapeMismatch("overlay label map does not match image");
  ImageRecord out = image;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const auto& c = palette[static_cast<std::size_t>(labels(y, x)) % palette.size()];
      for (int ch = 0; ch < 3; ++ch) {
        const double v = (1.0 - alpha) * image.at(y, x, ch) + alpha * c[ch];
        out.at(y, x, ch) = static_cast<std::uint8_t>(v + 0.5);
      }
    }
  }
  return out;
}

}  // namespace freeseg
