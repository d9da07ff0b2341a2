#include "vfocus/image.hpp"

#include <png.h>
#include <sodium.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

#include "vfocus/errors.hpp"

namespace vfocus {

const char* to_string(PredictorFailure kind) noexcept {
  switch (kind) {
    case PredictorFailure::Transport: return "transport";
    case PredictorFailure::Malformed: return "malformed_response";
    case PredictorFailure::Timeout: return "timeout";
    case PredictorFailure::Model: return "model_error";
  }
  return "unknown";
}

RgbImage::RgbImage(std::size_t width, std::size_t height, Rgb fill)
    : width_(width), height_(height), data_(3 * width * height) {
  for (std::size_t i = 0; i < width * height; ++i) set(i, fill);
}

RgbImage::RgbImage(std::size_t width, std::size_t height, std::vector<std::uint8_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (data_.size() != 3 * width * height)
    throw InvalidInput("RGB buffer size does not match " + std::to_string(width) + "x" +
                       std::to_string(height));
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_handler(png_structp png, png_const_charp message) {
  auto* buffer = static_cast<std::string*>(png_get_error_ptr(png));
  if (buffer) *buffer = message;
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

/// Owns a libpng read struct. Errors longjmp back to the setjmp in the caller.
class PngReader {
 public:
  PngReader() {
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error_, png_error_handler,
                                  png_warning_handler);
    if (!png_) throw IoError("png_create_read_struct failed");
    info_ = png_create_info_struct(png_);
    if (!info_) {
      png_destroy_read_struct(&png_, nullptr, nullptr);
      throw IoError("png_create_info_struct failed");
    }
  }
  ~PngReader() { png_destroy_read_struct(&png_, &info_, nullptr); }
  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  png_structp png() const { return png_; }
  png_infop info() const { return info_; }
  const std::string& error() const { return error_; }

 private:
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
  std::string error_;
};

class PngWriter {
 public:
  PngWriter() {
    png_ = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error_, png_error_handler,
                                   png_warning_handler);
    if (!png_) throw IoError("png_create_write_struct failed");
    info_ = png_create_info_struct(png_);
    if (!info_) {
      png_destroy_write_struct(&png_, nullptr);
      throw IoError("png_create_info_struct failed");
    }
  }
  ~PngWriter() { png_destroy_write_struct(&png_, &info_); }
  PngWriter(const PngWriter&) = delete;
  PngWriter& operator=(const PngWriter&) = delete;

  png_structp png() const { return png_; }
  png_infop info() const { return info_; }
  const std::string& error() const { return error_; }

 private:
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
  std::string error_;
};

struct MemorySource {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t length) {
  auto* src = static_cast<MemorySource*>(png_get_io_ptr(png));
  if (src->offset + length > src->bytes.size()) png_error(png, "truncated PNG data");
  std::memcpy(out, src->bytes.data() + src->offset, length);
  src->offset += length;
}

void write_to_memory(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void flush_noop(png_structp) {}

struct Decoded {
  std::size_t width = 0;
  std::size_t height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint8_t> rows;  // tightly packed, 16-bit samples big endian
};

// Caller has already attached the data source. `rgb` selects expansion to 8-bit RGB.
// No locals with destructors may live in these frames: libpng errors longjmp out of them.
bool read_header(PngReader& reader, bool rgb, Decoded& out) {
  png_structp png = reader.png();
  png_infop info = reader.info();
  if (setjmp(png_jmpbuf(png))) return false;

  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);

  if (rgb) {
    png_set_expand(png);
    if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
      png_set_gray_to_rgb(png);
    if (depth == 16) png_set_strip_16(png);
    png_set_strip_alpha(png);
  } else {
    if (color_type != PNG_COLOR_TYPE_GRAY) {
      out.channels = -1;
      return true;
    }
    if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  }
  png_read_update_info(png, info);

  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  return true;
}

bool read_body(PngReader& reader, png_bytepp rows) {
  if (setjmp(png_jmpbuf(reader.png()))) return false;
  png_read_image(reader.png(), rows);
  png_read_end(reader.png(), nullptr);
  return true;
}

bool decode(PngReader& reader, bool rgb, Decoded& out) {
  if (!read_header(reader, rgb, out)) return false;
  if (out.channels < 0) return true;
  const std::size_t stride = png_get_rowbytes(reader.png(), reader.info());
  out.rows.assign(stride * out.height, 0);
  std::vector<png_bytep> pointers(out.height);
  for (std::size_t y = 0; y < out.height; ++y) pointers[y] = out.rows.data() + y * stride;
  return read_body(reader, pointers.data());
}

Decoded decode_file(const std::filesystem::path& path, bool rgb) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("cannot open " + path.string());
  std::uint8_t signature[8] = {};
  if (std::fread(signature, 1, 8, file.get()) != 8 || png_sig_cmp(signature, 0, 8) != 0)
    throw IoError(path.string() + " is not a PNG file");
  PngReader reader;
  png_init_io(reader.png(), file.get());
  png_set_sig_bytes(reader.png(), 8);
  Decoded out;
  if (!decode(reader, rgb, out)) throw IoError(path.string() + ": " + reader.error());
  return out;
}

RgbImage to_rgb(Decoded&& d) {
  if (d.channels != 3 || d.bit_depth != 8) throw IoError("unexpected PNG layout after expansion");
  return RgbImage(d.width, d.height, std::move(d.rows));
}

// Runs `body` inside the writer's setjmp scope.
template <typename Body>
void guarded_write(PngWriter& writer, Body&& body) {
  if (setjmp(png_jmpbuf(writer.png()))) throw IoError("PNG encode failed: " + writer.error());
  body();
}

void write_rows(PngWriter& writer, std::size_t width, std::size_t height, int depth,
                int color_type, const std::uint8_t* data, std::size_t stride) {
  png_structp png = writer.png();
  png_infop info = writer.info();
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height),
               depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  for (std::size_t y = 0; y < height; ++y)
    png_write_row(png, const_cast<png_bytep>(data + y * stride));
  png_write_end(png, nullptr);
}

std::vector<std::uint8_t> gray_bytes(const GrayImage& image) {
  if (image.values.size() != image.width * image.height)
    throw InvalidInput("gray image size mismatch");
  if (image.bit_depth != 8 && image.bit_depth != 16)
    throw InvalidInput("gray image bit depth must be 8 or 16");
  std::vector<std::uint8_t> bytes;
  bytes.reserve(image.values.size() * (image.bit_depth / 8));
  for (std::uint16_t v : image.values) {
    if (image.bit_depth == 16) {
      bytes.push_back(static_cast<std::uint8_t>(v >> 8));
      bytes.push_back(static_cast<std::uint8_t>(v & 0xff));
    } else {
      bytes.push_back(static_cast<std::uint8_t>(v));
    }
  }
  return bytes;
}

}  // namespace

RgbImage read_rgb_png(const std::filesystem::path& path) { return to_rgb(decode_file(path, true)); }

GrayImage read_gray_png(const std::filesystem::path& path) {
  Decoded d = decode_file(path, false);
  if (d.channels != 1)
    throw IoError(path.string() + " is not a single-channel grayscale PNG");
  GrayImage out{d.width, d.height, d.bit_depth, {}};
  out.values.resize(d.width * d.height);
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = d.bit_depth == 16
                        ? static_cast<std::uint16_t>((d.rows[2 * i] << 8) | d.rows[2 * i + 1])
                        : d.rows[i];
  }
  return out;
}

std::vector<std::uint8_t> encode_rgb_png(const RgbImage& image) {
  std::vector<std::uint8_t> out;
  PngWriter writer;
  png_set_write_fn(writer.png(), &out, write_to_memory, flush_noop);
  guarded_write(writer, [&] {
    write_rows(writer, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB, image.bytes().data(),
               3 * image.width());
  });
  return out;
}

RgbImage decode_rgb_png(std::span<const std::uint8_t> png) {
  if (png.size() < 8 || png_sig_cmp(png.data(), 0, 8) != 0) throw IoError("not a PNG stream");
  PngReader reader;
  MemorySource source{png, 0};
  png_set_read_fn(reader.png(), &source, read_from_memory);
  Decoded out;
  if (!decode(reader, true, out)) throw IoError("PNG decode failed: " + reader.error());
  return to_rgb(std::move(out));
}

void write_rgb_png(const std::filesystem::path& path, const RgbImage& image) {
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot write " + path.string());
  PngWriter writer;
  png_init_io(writer.png(), file.get());
  guarded_write(writer, [&] {
    write_rows(writer, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB, image.bytes().data(),
               3 * image.width());
  });
}

void write_gray_png(const std::filesystem::path& path, const GrayImage& image) {
  const auto bytes = gray_bytes(image);
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot write " + path.string());
  PngWriter writer;
  png_init_io(writer.png(), file.get());
  guarded_write(writer, [&] {
    write_rows(writer, image.width, image.height, image.bit_depth, PNG_COLOR_TYPE_GRAY,
               bytes.data(), image.width * (image.bit_depth / 8));
  });
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  constexpr int variant = sodium_base64_VARIANT_ORIGINAL;
  std::string out(sodium_base64_encoded_len(bytes.size(), variant), '\0');
  sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(), variant);
  out.resize(out.size() - 1);  // drop terminating NUL
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
  std::size_t length = 0;
  const char* end = nullptr;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &length, &end,
                        sodium_base64_VARIANT_ORIGINAL) != 0 ||
      end != text.data() + text.size())
    throw InvalidInput("invalid base64 payload");
  out.resize(length);
  return out;
}

}  // namespace vfocus
