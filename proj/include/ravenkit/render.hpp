#pragma once
// Deterministic grayscale rasterization of panels and stage images, plus a
// self-contained PNG codec. Everything runs on integer math so identical
// inputs produce identical bytes on any platform.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ravenkit/scene.hpp"

namespace ravenkit {

struct RenderError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major grayscale

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 255)
      : width(w), height(h),
        pixels(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  std::uint8_t& at(int x, int y) {
    return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(x)];
  }
  std::uint8_t at(int x, int y) const {
    return pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                  static_cast<std::size_t>(x)];
  }
};

struct RenderStyle {
  int panel_px = 320;
  int stroke_px = 2;
  int gap_px = 12;    // spacing between composed panels
  int label_px = 28;  // height of the digit bar above each candidate
};

Image render_panel(Layout, const Panel&, const RenderStyle& = {});

// Grid of already-rendered context cells, `columns` wide, white gaps.
Image compose_panels(const Puzzle&, const std::vector<int>& cells, int columns,
                     const RenderStyle& = {});

// Full puzzle sheet: the 3x3 matrix with a '?' in the blank cell above the
// 2x4 candidate strip labeled 1..8.
Image compose_final_sheet(const Puzzle&, const RenderStyle& = {});

// Stage image for one image key ("1p_3", "2p_0_1", "1r_1", "2r", "final").
Image render_image_key(const Puzzle&, const std::string& key, const RenderStyle& = {});

std::vector<std::uint8_t> encode_png_gray8(const Image&);
// Decodes only what encode_png_gray8 emits (8-bit grayscale, stored-block
// deflate, filter 0); anything else raises RenderError.
Image decode_png_gray8(const std::vector<std::uint8_t>&);

void write_image_png(const std::string& path, const Image&);
Image read_image_png(const std::string& path);

}  // namespace ravenkit
