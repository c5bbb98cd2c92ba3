#include "xvg/image.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "xvg/error.hpp"

#if defined(XVG_HAVE_PNG)
#include <png.h>
#endif
#if defined(XVG_HAVE_JPEG)
#include <jpeglib.h>
#endif

namespace xvg {

bool ImageTensor::in_unit_range() const {
  return std::all_of(pixels.begin(), pixels.end(), [](float v) { return v >= 0.0f && v <= 1.0f; });
}

ImageTensor flip_horizontal(const ImageTensor& image) {
  ImageTensor out(image.height, image.width);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = image.at(y, image.width - 1 - x, c);
  return out;
}

ImageTensor crop_resize(const ImageTensor& image, int x0, int y0, int w, int h, int out_h, int out_w) {
  if (w <= 0 || h <= 0 || x0 < 0 || y0 < 0 || x0 + w > image.width || y0 + h > image.height) {
    throw ArgumentError("crop_resize: window outside image");
  }
  ImageTensor out(out_h, out_w);
  const double sx = static_cast<double>(w) / out_w;
  const double sy = static_cast<double>(h) / out_h;
  for (int y = 0; y < out_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, h - 1.0);
    const int iy = static_cast<int>(fy);
    const int iy1 = std::min(iy + 1, h - 1);
    const double ty = fy - iy;
    for (int x = 0; x < out_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, w - 1.0);
      const int ix = static_cast<int>(fx);
      const int ix1 = std::min(ix + 1, w - 1);
      const double tx = fx - ix;
      for (int c = 0; c < 3; ++c) {
        const double a = image.at(y0 + iy, x0 + ix, c) * (1 - tx) + image.at(y0 + iy, x0 + ix1, c) * tx;
        const double b = image.at(y0 + iy1, x0 + ix, c) * (1 - tx) + image.at(y0 + iy1, x0 + ix1, c) * tx;
        out.at(y, x, c) = static_cast<float>(std::clamp(a * (1 - ty) + b * ty, 0.0, 1.0));
      }
    }
  }
  return out;
}

ImageTensor resize_bilinear(const ImageTensor& image, int out_h, int out_w) {
  if (image.height == out_h && image.width == out_w) return image;
  return crop_resize(image, 0, 0, image.width, image.height, out_h, out_w);
}

void write_ppm(const std::filesystem::path& path, const ImageTensor& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StructuralError("cannot write image: " + path.string());
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  std::string bytes(image.pixels.size(), '\0');
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    bytes[i] = static_cast<char>(std::lround(std::clamp(image.pixels[i], 0.0f, 1.0f) * 255.0f));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

namespace {

std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

ImageTensor read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StructuralError("cannot open image: " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P6") throw StructuralError("not a binary PPM: " + path.string());
  auto next_int = [&]() {
    int v = 0;
    while (in >> std::ws && in.peek() == '#') {
      std::string comment;
      std::getline(in, comment);
    }
    if (!(in >> v)) throw StructuralError("truncated PPM header: " + path.string());
    return v;
  };
  const int w = next_int();
  const int h = next_int();
  const int maxval = next_int();
  in.get();
  if (w <= 0 || h <= 0 || maxval != 255) throw StructuralError("unsupported PPM: " + path.string());
  std::string bytes(static_cast<std::size_t>(w) * h * 3, '\0');
  if (!in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()))) {
    throw StructuralError("truncated PPM data: " + path.string());
  }
  ImageTensor img(h, w);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    img.pixels[i] = static_cast<unsigned char>(bytes[i]) / 255.0f;
  }
  return img;
}

#if defined(XVG_HAVE_PNG)
ImageTensor read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.string().c_str())) {
    throw StructuralError("cannot read PNG " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    throw StructuralError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  ImageTensor img(static_cast<int>(png.height), static_cast<int>(png.width));
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = buf[i] / 255.0f;
  return img;
}
#endif

#if defined(XVG_HAVE_JPEG)
struct JpegErrorManager {
  jpeg_error_mgr base{};
  std::jmp_buf escape{};
  char message[JMSG_LENGTH_MAX] = {};
};

ImageTensor read_jpeg(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.string().c_str(), "rb"), &std::fclose);
  if (!file) throw StructuralError("cannot open image: " + path.string());
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = [](j_common_ptr info) {
    auto* e = reinterpret_cast<JpegErrorManager*>(info->err);
    (*info->err->format_message)(info, e->message);
    std::longjmp(e->escape, 1);
  };
  ImageTensor img;
  std::vector<unsigned char> row;
  if (setjmp(err.escape)) {
    jpeg_destroy_decompress(&cinfo);
    throw StructuralError("JPEG decode failed for " + path.string() + ": " + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, file.get());
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  img = ImageTensor(static_cast<int>(cinfo.output_height), static_cast<int>(cinfo.output_width));
  row.resize(static_cast<std::size_t>(cinfo.output_width) * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    const std::size_t y = cinfo.output_scanline;
    unsigned char* rows[1] = {row.data()};
    jpeg_read_scanlines(&cinfo, rows, 1);
    for (std::size_t i = 0; i < row.size(); ++i) img.pixels[y * row.size() + i] = row[i] / 255.0f;
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return img;
}
#endif

}  // namespace

bool is_image_file(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  return ext == ".ppm" || ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

ImageTensor read_image(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".ppm") return read_ppm(path);
#if defined(XVG_HAVE_PNG)
  if (ext == ".png") return read_png(path);
#endif
#if defined(XVG_HAVE_JPEG)
  if (ext == ".jpg" || ext == ".jpeg") return read_jpeg(path);
#endif
  throw StructuralError("no decoder for image format: " + path.string());
}

namespace {

std::uint32_t crc32(const unsigned char* data, std::size_t n, std::uint32_t crc = 0) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  crc = ~crc;
  for (std::size_t i = 0; i < n; ++i) crc = table[(crc ^ data[i]) & 0xff] ^ (crc >> 8);
  return ~crc;
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(static_cast<unsigned char>(v >> 24));
  out.push_back(static_cast<unsigned char>(v >> 16));
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v));
}

void put_chunk(std::vector<unsigned char>& out, const char* type, const std::vector<unsigned char>& body) {
  put_u32(out, static_cast<std::uint32_t>(body.size()));
  const std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), body.begin(), body.end());
  put_u32(out, crc32(out.data() + start, out.size() - start));
}

}  // namespace

std::vector<unsigned char> encode_png(const ImageTensor& image) {
  std::vector<unsigned char> raw;
  raw.reserve(static_cast<std::size_t>(image.height) * (image.width * 3 + 1));
  for (int y = 0; y < image.height; ++y) {
    raw.push_back(0);  // filter: none
    for (int x = 0; x < image.width; ++x)
      for (int c = 0; c < 3; ++c)
        raw.push_back(static_cast<unsigned char>(std::lround(std::clamp(image.at(y, x, c), 0.0f, 1.0f) * 255.0f)));
  }

  std::vector<unsigned char> z{0x78, 0x01};
  std::uint32_t a = 1, b = 0;
  for (unsigned char v : raw) {
    a = (a + v) % 65521;
    b = (b + a) % 65521;
  }
  std::size_t pos = 0;
  do {
    const std::size_t len = std::min<std::size_t>(65535, raw.size() - pos);
    const bool last = pos + len == raw.size();
    z.push_back(last ? 1 : 0);
    z.push_back(static_cast<unsigned char>(len & 0xff));
    z.push_back(static_cast<unsigned char>(len >> 8));
    z.push_back(static_cast<unsigned char>(~len & 0xff));
    z.push_back(static_cast<unsigned char>((~len >> 8) & 0xff));
    z.insert(z.end(), raw.begin() + static_cast<std::ptrdiff_t>(pos), raw.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  } while (pos < raw.size());
  put_u32(z, (b << 16) | a);

  std::vector<unsigned char> out{0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<unsigned char> ihdr;
  put_u32(ihdr, static_cast<std::uint32_t>(image.width));
  put_u32(ihdr, static_cast<std::uint32_t>(image.height));
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // 8-bit RGB
  put_chunk(out, "IHDR", ihdr);
  put_chunk(out, "IDAT", z);
  put_chunk(out, "IEND", {});
  return out;
}

}  // namespace xvg
