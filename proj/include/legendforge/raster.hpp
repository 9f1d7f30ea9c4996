#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "legendforge/error.hpp"

namespace legendforge {

using Rgb = std::array<std::uint8_t, 3>;

/// 8-bit RGB image, row-major.
struct Raster {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;

  const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const Raster&) const = default;
};

/// Decode a PNG/TIFF file into 8-bit RGB. Grayscale is replicated across
/// channels, alpha is dropped, and 16-bit samples are truncated to their
/// high byte.
inline Raster load_raster_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path))
    throw Error(Errc::MissingRaster, "raster not found: " + path.string());
  cv::Mat img = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (img.empty()) throw Error(Errc::DecodeError, "cannot decode raster: " + path.string());

  const int depth = img.depth();
  const int ch = img.channels();
  if ((depth != CV_8U && depth != CV_16U) || (ch != 1 && ch != 3 && ch != 4))
    throw Error(Errc::DecodeError,
                "unsupported raster layout (" + std::to_string(ch) + " channels, depth " +
                    std::to_string(depth) + "): " + path.string());

  Raster out;
  out.width = img.cols;
  out.height = img.rows;
  out.pixels.resize(static_cast<std::size_t>(img.cols) * img.rows);

  auto to8 = [depth](int v) -> std::uint8_t {
    return depth == CV_16U ? static_cast<std::uint8_t>(v >> 8) : static_cast<std::uint8_t>(v);
  };

  for (int y = 0; y < img.rows; ++y) {
    for (int x = 0; x < img.cols; ++x) {
      std::uint8_t r, g, b;
      if (ch == 1) {
        const int v = depth == CV_16U ? img.at<std::uint16_t>(y, x) : img.at<std::uint8_t>(y, x);
        r = g = b = to8(v);
      } else if (depth == CV_16U) {
        // OpenCV stores color as BGR(A).
        const std::uint16_t* p = img.ptr<std::uint16_t>(y) + static_cast<std::size_t>(x) * ch;
        b = to8(p[0]);
        g = to8(p[1]);
        r = to8(p[2]);
      } else {
        const std::uint8_t* p = img.ptr<std::uint8_t>(y) + static_cast<std::size_t>(x) * ch;
        b = p[0];
        g = p[1];
        r = p[2];
      }
      out.at(x, y) = {r, g, b};
    }
  }
  return out;
}

/// Encode an RGB raster as PNG (used by fixture tooling and tests).
inline void save_raster_png(const Raster& r, const std::filesystem::path& path) {
  cv::Mat img(r.height, r.width, CV_8UC3);
  for (int y = 0; y < r.height; ++y)
    for (int x = 0; x < r.width; ++x) {
      const Rgb& px = r.at(x, y);
      img.at<cv::Vec3b>(y, x) = cv::Vec3b(px[2], px[1], px[0]);
    }
  if (!cv::imwrite(path.string(), img))
    throw Error(Errc::IoError, "cannot write raster: " + path.string());
}

}  // namespace legendforge
