#include "ravenkit/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

namespace ravenkit {

namespace {

// sin(3k degrees) * 65536 for k = 0..30. Every vertex angle the shape set
// and the 45-degree rotation steps can produce is a multiple of 3 degrees,
// so vertex math stays in integers and the output bytes are portable.
constexpr std::int32_t kSin3[31] = {0,     3430,  6850,  10252, 13626, 16962, 20252, 23486,
                                    26656, 29753, 32768, 35693, 38521, 41243, 43852, 46341,
                                    48703, 50931, 53020, 54963, 56756, 58393, 59870, 61183,
                                    62328, 63303, 64104, 64729, 65177, 65446, 65536};

std::int32_t isin_deg(int deg) {
  deg %= 360;
  if (deg < 0) deg += 360;
  if (deg <= 90) return kSin3[deg / 3];
  if (deg <= 180) return kSin3[(180 - deg) / 3];
  if (deg <= 270) return -kSin3[(deg - 180) / 3];
  return -kSin3[(360 - deg) / 3];
}

std::int32_t icos_deg(int deg) { return isin_deg(deg + 90); }

// Coordinates carry 8 fractional bits (1/256 px).
struct Pt {
  std::int64_t x = 0;
  std::int64_t y = 0;
};

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return -floor_div(-a, b); }

std::int64_t isqrt(std::int64_t v) {
  if (v <= 0) return 0;
  std::int64_t r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(v)));
  while (r > 0 && r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

void fill_rect(Image& img, int x0, int y0, int x1, int y1, std::uint8_t value) {
  x0 = std::max(x0, 0);
  y0 = std::max(y0, 0);
  x1 = std::min(x1, img.width);
  y1 = std::min(y1, img.height);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) img.at(x, y) = value;
  }
}

void rect_outline(Image& img, int x0, int y0, int x1, int y1, int stroke, std::uint8_t value) {
  fill_rect(img, x0, y0, x1, y0 + stroke, value);
  fill_rect(img, x0, y1 - stroke, x1, y1, value);
  fill_rect(img, x0, y0, x0 + stroke, y1, value);
  fill_rect(img, x1 - stroke, y0, x1, y1, value);
}

// Scanline fill of a convex polygon given in subpixel coordinates.
void fill_convex(Image& img, const std::vector<Pt>& pts, std::uint8_t value) {
  std::int64_t ymin = pts[0].y, ymax = pts[0].y;
  for (const Pt& p : pts) {
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  int row0 = static_cast<int>(std::max<std::int64_t>(0, ceil_div(ymin - 128, 256)));
  int row1 = static_cast<int>(
      std::min<std::int64_t>(img.height - 1, floor_div(ymax - 128, 256)));
  for (int y = row0; y <= row1; ++y) {
    std::int64_t yc = static_cast<std::int64_t>(y) * 256 + 128;
    std::int64_t xmin = 0, xmax = 0;
    bool any = false;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Pt& a = pts[i];
      const Pt& b = pts[(i + 1) % pts.size()];
      if (a.y == b.y) continue;
      std::int64_t lo = std::min(a.y, b.y), hi = std::max(a.y, b.y);
      if (yc < lo || yc >= hi) continue;
      std::int64_t x = a.x + (b.x - a.x) * (yc - a.y) / (b.y - a.y);
      if (!any) {
        xmin = xmax = x;
        any = true;
      } else {
        xmin = std::min(xmin, x);
        xmax = std::max(xmax, x);
      }
    }
    if (!any) continue;
    int c0 = static_cast<int>(std::max<std::int64_t>(0, ceil_div(xmin - 128, 256)));
    int c1 = static_cast<int>(std::min<std::int64_t>(img.width - 1, floor_div(xmax - 128, 256)));
    for (int x = c0; x <= c1; ++x) img.at(x, y) = value;
  }
}

void fill_disc(Image& img, std::int64_t cx, std::int64_t cy, std::int64_t r,
               std::uint8_t value) {
  int row0 = static_cast<int>(std::max<std::int64_t>(0, ceil_div(cy - r - 128, 256)));
  int row1 = static_cast<int>(
      std::min<std::int64_t>(img.height - 1, floor_div(cy + r - 128, 256)));
  for (int y = row0; y <= row1; ++y) {
    std::int64_t yc = static_cast<std::int64_t>(y) * 256 + 128;
    std::int64_t dy = yc - cy;
    std::int64_t h2 = r * r - dy * dy;
    if (h2 < 0) continue;
    std::int64_t half = isqrt(h2);
    int c0 = static_cast<int>(std::max<std::int64_t>(0, ceil_div(cx - half - 128, 256)));
    int c1 = static_cast<int>(
        std::min<std::int64_t>(img.width - 1, floor_div(cx + half - 128, 256)));
    for (int x = c0; x <= c1; ++x) img.at(x, y) = value;
  }
}

int polygon_sides(Shape shape) {
  switch (shape) {
    case Shape::kTriangle:
      return 3;
    case Shape::kSquare:
      return 4;
    case Shape::kPentagon:
      return 5;
    case Shape::kHexagon:
      return 6;
    case Shape::kCircle:
      return 0;
  }
  return 0;
}

std::vector<Pt> polygon_points(std::int64_t cx, std::int64_t cy, std::int64_t r, int sides,
                               int rotation_deg) {
  std::vector<Pt> pts;
  pts.reserve(static_cast<std::size_t>(sides));
  for (int k = 0; k < sides; ++k) {
    int angle = -90 + k * (360 / sides) + rotation_deg;
    pts.push_back({cx + r * icos_deg(angle) / 65536, cy + r * isin_deg(angle) / 65536});
  }
  return pts;
}

void draw_entity(Image& img, const Entity& e, const SlotBox& box, int panel_px, int stroke_px) {
  std::int64_t cx = static_cast<std::int64_t>(box.cx) * panel_px * 256 / 1000;
  std::int64_t cy = static_cast<std::int64_t>(box.cy) * panel_px * 256 / 1000;
  std::int64_t box_sub = static_cast<std::int64_t>(box.box) * panel_px * 256 / 1000;
  std::int64_t r = box_sub * size_scale_per_mille(e.size_level) / 2000;
  std::uint8_t fill = static_cast<std::uint8_t>(color_fill_value(e.color_level));
  int sides = polygon_sides(e.shape);
  if (sides == 0) {
    std::int64_t inner = std::max<std::int64_t>(0, r - stroke_px * 256);
    fill_disc(img, cx, cy, r, 0);
    if (inner > 0) fill_disc(img, cx, cy, inner, fill);
    return;
  }
  int rot = e.angle_level * 45;
  // The border is the gap between the full-size black shape and a shrunken
  // copy in the fill color; 5/4 compensates for edges not being tangent to
  // the vertex circle.
  std::int64_t inner = std::max<std::int64_t>(0, r - stroke_px * 320);
  fill_convex(img, polygon_points(cx, cy, r, sides, rot), 0);
  if (inner > 0) fill_convex(img, polygon_points(cx, cy, inner, sides, rot), fill);
}

constexpr std::uint8_t kGlyphRows = 7;

// 5x7 bitmaps for the candidate labels and the missing-cell mark.
const std::array<std::uint8_t, 7>& glyph_bits(char c) {
  static const std::array<std::array<std::uint8_t, 7>, 9> glyphs = {{
      {0b00100, 0b01100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110},  // 1
      {0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b01000, 0b11111},  // 2
      {0b11111, 0b00010, 0b00100, 0b00010, 0b00001, 0b10001, 0b01110},  // 3
      {0b00010, 0b00110, 0b01010, 0b10010, 0b11111, 0b00010, 0b00010},  // 4
      {0b11111, 0b10000, 0b11110, 0b00001, 0b00001, 0b10001, 0b01110},  // 5
      {0b00110, 0b01000, 0b10000, 0b11110, 0b10001, 0b10001, 0b01110},  // 6
      {0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b01000, 0b01000},  // 7
      {0b01110, 0b10001, 0b10001, 0b01110, 0b10001, 0b10001, 0b01110},  // 8
      {0b01110, 0b10001, 0b00001, 0b00010, 0b00100, 0b00000, 0b00100},  // ?
  }};
  if (c >= '1' && c <= '8') return glyphs[static_cast<std::size_t>(c - '1')];
  return glyphs[8];
}

void draw_glyph(Image& img, char c, int cx, int cy, int scale, std::uint8_t value) {
  const auto& rows = glyph_bits(c);
  int x0 = cx - (5 * scale) / 2;
  int y0 = cy - (kGlyphRows * scale) / 2;
  for (int row = 0; row < kGlyphRows; ++row) {
    for (int col = 0; col < 5; ++col) {
      if ((rows[static_cast<std::size_t>(row)] >> (4 - col)) & 1) {
        fill_rect(img, x0 + col * scale, y0 + row * scale, x0 + (col + 1) * scale,
                  y0 + (row + 1) * scale, value);
      }
    }
  }
}

void blit(Image& dst, const Image& src, int x0, int y0) {
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) dst.at(x0 + x, y0 + y) = src.at(x, y);
  }
}

Image blank_panel(const RenderStyle& style) {
  Image img(style.panel_px, style.panel_px, 255);
  rect_outline(img, 0, 0, img.width, img.height, std::max(1, style.stroke_px / 2), 0);
  return img;
}

constexpr std::uint8_t kFrameGray = 160;

}  // namespace

Image render_panel(Layout layout, const Panel& panel, const RenderStyle& style) {
  if (style.panel_px < 64) throw RenderError("render_panel: panel_px must be at least 64");
  if (panel.components.size() != layout_parts(layout).size()) {
    throw RenderError("render_panel: component count does not match layout");
  }
  Image img = blank_panel(style);
  int mid = style.panel_px / 2;
  int half_stroke = std::max(1, style.stroke_px / 2);
  if (layout == Layout::kLeftRight) {
    fill_rect(img, mid - half_stroke, 0, mid + half_stroke, img.height, 0);
  } else if (layout == Layout::kUpDown) {
    fill_rect(img, 0, mid - half_stroke, img.width, mid + half_stroke, 0);
  }
  for (std::size_t c = 0; c < panel.components.size(); ++c) {
    if ((layout == Layout::kOutInSingle || layout == Layout::kOutInGrid) && c == 1) {
      int lo = style.panel_px / 4, hi = style.panel_px - style.panel_px / 4;
      rect_outline(img, lo, lo, hi, hi, half_stroke, kFrameGray);
    }
    for (const Entity& e : panel.components[c].entities) {
      draw_entity(img, e, slot_box(layout, static_cast<int>(c), e.slot), style.panel_px,
                  style.stroke_px);
    }
  }
  return img;
}

Image compose_panels(const Puzzle& p, const std::vector<int>& cells, int columns,
                     const RenderStyle& style) {
  if (cells.empty() || columns < 1) throw RenderError("compose_panels: nothing to compose");
  int rows = (static_cast<int>(cells.size()) + columns - 1) / columns;
  int w = columns * style.panel_px + (columns - 1) * style.gap_px;
  int h = rows * style.panel_px + (rows - 1) * style.gap_px;
  Image sheet(w, h, 255);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    int cell = cells[i];
    if (cell < 0 || cell >= static_cast<int>(p.context.size())) {
      throw RenderError("compose_panels: cell index out of range");
    }
    Image panel = render_panel(p.layout, p.context[static_cast<std::size_t>(cell)], style);
    int col = static_cast<int>(i) % columns;
    int row = static_cast<int>(i) / columns;
    blit(sheet, panel, col * (style.panel_px + style.gap_px),
         row * (style.panel_px + style.gap_px));
  }
  return sheet;
}

Image compose_final_sheet(const Puzzle& p, const RenderStyle& style) {
  if (p.context.size() != 8 || p.candidates.size() != 8) {
    throw RenderError("compose_final_sheet: puzzle must have 8 context cells and 8 candidates");
  }
  int panel = style.panel_px, gap = style.gap_px;
  int matrix_w = 3 * panel + 2 * gap;
  int strip_w = 4 * panel + 3 * gap;
  int w = std::max(matrix_w, strip_w);
  int matrix_x = (w - matrix_w) / 2;
  int strip_x = (w - strip_w) / 2;
  int cand_h = style.label_px + panel;
  int strip_y = 3 * panel + 2 * gap + 2 * gap;
  int h = strip_y + 2 * cand_h + gap;
  Image sheet(w, h, 255);

  for (int i = 0; i < 9; ++i) {
    int x = matrix_x + (i % 3) * (panel + gap);
    int y = (i / 3) * (panel + gap);
    if (i < 8) {
      blit(sheet, render_panel(p.layout, p.context[static_cast<std::size_t>(i)], style), x, y);
    } else {
      Image blank = blank_panel(style);
      draw_glyph(blank, '?', panel / 2, panel / 2, std::max(1, panel / 16), 0);
      blit(sheet, blank, x, y);
    }
  }
  for (int i = 0; i < 8; ++i) {
    int x = strip_x + (i % 4) * (panel + gap);
    int y = strip_y + (i / 4) * (cand_h + gap);
    draw_glyph(sheet, static_cast<char>('1' + i), x + panel / 2, y + style.label_px / 2,
               std::max(1, (style.label_px - 4) / 7), 0);
    blit(sheet, render_panel(p.layout, p.candidates[static_cast<std::size_t>(i)], style), x,
         y + style.label_px);
  }
  return sheet;
}

Image render_image_key(const Puzzle& p, const std::string& key, const RenderStyle& style) {
  auto int_after = [&](std::size_t pos) {
    return std::stoi(key.substr(pos));
  };
  try {
    if (key == "final") return compose_final_sheet(p, style);
    if (key == "2r") return compose_panels(p, {0, 1, 2, 3, 4, 5}, 3, style);
    if (key.rfind("1r_", 0) == 0) {
      int row = int_after(3);
      if (row < 0 || row > 1) throw RenderError("render_image_key: bad row in " + key);
      return compose_panels(p, {3 * row, 3 * row + 1, 3 * row + 2}, 3, style);
    }
    if (key.rfind("1p_", 0) == 0) return compose_panels(p, {int_after(3)}, 1, style);
    if (key.rfind("2p_", 0) == 0) {
      std::size_t sep = key.find('_', 3);
      if (sep == std::string::npos) throw RenderError("render_image_key: bad key " + key);
      return compose_panels(p, {std::stoi(key.substr(3, sep - 3)), int_after(sep + 1)}, 2,
                            style);
    }
  } catch (const std::invalid_argument&) {
    throw RenderError("render_image_key: unparseable key " + key);
  } catch (const std::out_of_range&) {
    throw RenderError("render_image_key: unparseable key " + key);
  }
  throw RenderError("render_image_key: unknown key " + key);
}

}  // namespace ravenkit
