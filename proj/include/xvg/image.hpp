#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace xvg {

/// H×W×3 interleaved RGB, values in [0,1].
struct ImageTensor {
  int height = 0;
  int width = 0;
  std::vector<float> pixels;

  ImageTensor() = default;
  ImageTensor(int h, int w, float fill = 0.0f)
      : height(h), width(w), pixels(static_cast<std::size_t>(h) * w * 3, fill) {}

  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * 3 + c;
  }
  float& at(int y, int x, int c) { return pixels[index(y, x, c)]; }
  float at(int y, int x, int c) const { return pixels[index(y, x, c)]; }

  bool same_shape(const ImageTensor& o) const { return height == o.height && width == o.width; }
  bool in_unit_range() const;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;
};

ImageTensor flip_horizontal(const ImageTensor& image);
/// Crops the [x0, x0+w) × [y0, y0+h) window and resamples it bilinearly to out_h × out_w.
ImageTensor crop_resize(const ImageTensor& image, int x0, int y0, int w, int h, int out_h, int out_w);
ImageTensor resize_bilinear(const ImageTensor& image, int out_h, int out_w);

// Binary PPM (P6, maxval 255) is the native on-disk format. PNG and JPEG
// are read when the build found libpng / libjpeg.
void write_ppm(const std::filesystem::path& path, const ImageTensor& image);
ImageTensor read_image(const std::filesystem::path& path);
bool is_image_file(const std::filesystem::path& path);

/// Uncompressed (stored-deflate) PNG encoding, used for LVLM uploads.
std::vector<unsigned char> encode_png(const ImageTensor& image);

}  // namespace xvg
