// Minimal PNG writer/reader for 8-bit grayscale images. The deflate stream
// uses stored (uncompressed) blocks only, which keeps the bytes independent
// of any compression library's version or heuristics.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "ravenkit/render.hpp"

namespace ravenkit {

namespace {

std::uint32_t crc32_table_entry(std::uint32_t n) {
  std::uint32_t c = n;
  for (int k = 0; k < 8; ++k) {
    c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
  }
  return c;
}

std::uint32_t crc32(const std::uint8_t* data, std::size_t len) {
  static const auto table = [] {
    std::vector<std::uint32_t> t(256);
    for (std::uint32_t n = 0; n < 256; ++n) t[n] = crc32_table_entry(n);
    return t;
  }();
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < len; ++i) {
    c = table[(c ^ data[i]) & 0xFFu] ^ (c >> 8);
  }
  return c ^ 0xFFFFFFFFu;
}

std::uint32_t adler32(const std::uint8_t* data, std::size_t len) {
  std::uint32_t a = 1, b = 0;
  for (std::size_t i = 0; i < len; ++i) {
    a = (a + data[i]) % 65521u;
    b = (b + a) % 65521u;
  }
  return (b << 16) | a;
}

void push_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void push_chunk(std::vector<std::uint8_t>& out, const char type[4],
                const std::vector<std::uint8_t>& data) {
  push_u32(out, static_cast<std::uint32_t>(data.size()));
  std::size_t start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), data.begin(), data.end());
  push_u32(out, crc32(out.data() + start, out.size() - start));
}

constexpr std::uint8_t kSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

}  // namespace

std::vector<std::uint8_t> encode_png_gray8(const Image& img) {
  if (img.width <= 0 || img.height <= 0 ||
      img.pixels.size() !=
          static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.height)) {
    throw RenderError("encode_png_gray8: malformed image");
  }

  // One filter byte (0 = none) in front of every row.
  std::vector<std::uint8_t> raw;
  raw.reserve(static_cast<std::size_t>(img.height) *
              (static_cast<std::size_t>(img.width) + 1));
  for (int y = 0; y < img.height; ++y) {
    raw.push_back(0);
    const std::uint8_t* row = img.pixels.data() + static_cast<std::size_t>(y) * img.width;
    raw.insert(raw.end(), row, row + img.width);
  }

  std::vector<std::uint8_t> z;
  z.push_back(0x78);  // 32K window, deflate
  z.push_back(0x01);  // no dictionary, fastest-compression flag bits
  std::size_t pos = 0;
  while (pos < raw.size() || raw.empty()) {
    std::size_t n = std::min<std::size_t>(raw.size() - pos, 65535);
    bool last = pos + n == raw.size();
    z.push_back(last ? 1 : 0);  // BFINAL, BTYPE=00 (stored)
    z.push_back(static_cast<std::uint8_t>(n & 0xFF));
    z.push_back(static_cast<std::uint8_t>(n >> 8));
    z.push_back(static_cast<std::uint8_t>(~n & 0xFF));
    z.push_back(static_cast<std::uint8_t>((~n >> 8) & 0xFF));
    z.insert(z.end(), raw.begin() + static_cast<std::ptrdiff_t>(pos),
             raw.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
    if (last) break;
  }
  push_u32(z, adler32(raw.data(), raw.size()));

  std::vector<std::uint8_t> ihdr;
  push_u32(ihdr, static_cast<std::uint32_t>(img.width));
  push_u32(ihdr, static_cast<std::uint32_t>(img.height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(0);  // grayscale
  ihdr.push_back(0);  // compression
  ihdr.push_back(0);  // filter method
  ihdr.push_back(0);  // no interlace

  std::vector<std::uint8_t> out(kSignature, kSignature + 8);
  push_chunk(out, "IHDR", ihdr);
  push_chunk(out, "IDAT", z);
  push_chunk(out, "IEND", {});
  return out;
}

namespace {

std::uint32_t read_u32(const std::vector<std::uint8_t>& bytes, std::size_t pos) {
  return (static_cast<std::uint32_t>(bytes[pos]) << 24) |
         (static_cast<std::uint32_t>(bytes[pos + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[pos + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[pos + 3]);
}

}  // namespace

Image decode_png_gray8(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || !std::equal(kSignature, kSignature + 8, bytes.begin())) {
    throw RenderError("decode_png_gray8: not a png");
  }
  std::size_t pos = 8;
  int width = 0, height = 0;
  std::vector<std::uint8_t> zdata;
  bool saw_end = false;
  while (pos + 12 <= bytes.size() && !saw_end) {
    std::uint32_t len = read_u32(bytes, pos);
    if (pos + 12 + len > bytes.size()) throw RenderError("decode_png_gray8: truncated chunk");
    std::string type(bytes.begin() + static_cast<std::ptrdiff_t>(pos + 4),
                     bytes.begin() + static_cast<std::ptrdiff_t>(pos + 8));
    const std::uint8_t* data = bytes.data() + pos + 8;
    if (crc32(bytes.data() + pos + 4, len + 4) != read_u32(bytes, pos + 8 + len)) {
      throw RenderError("decode_png_gray8: bad chunk crc");
    }
    if (type == "IHDR") {
      if (len != 13) throw RenderError("decode_png_gray8: bad IHDR");
      width = static_cast<int>(read_u32(bytes, pos + 8));
      height = static_cast<int>(read_u32(bytes, pos + 12));
      if (data[8] != 8 || data[9] != 0 || data[10] != 0 || data[11] != 0 || data[12] != 0) {
        throw RenderError("decode_png_gray8: unsupported format (want gray8, no interlace)");
      }
    } else if (type == "IDAT") {
      zdata.insert(zdata.end(), data, data + len);
    } else if (type == "IEND") {
      saw_end = true;
    }
    pos += 12 + len;
  }
  if (!saw_end || width <= 0 || height <= 0) throw RenderError("decode_png_gray8: truncated");

  if (zdata.size() < 6) throw RenderError("decode_png_gray8: short zlib stream");
  std::vector<std::uint8_t> raw;
  std::size_t zpos = 2;  // skip zlib header
  while (true) {
    if (zpos + 5 > zdata.size()) throw RenderError("decode_png_gray8: truncated deflate");
    std::uint8_t header = zdata[zpos];
    if ((header & 0x06) != 0) {
      throw RenderError("decode_png_gray8: only stored deflate blocks supported");
    }
    std::size_t n = zdata[zpos + 1] | (static_cast<std::size_t>(zdata[zpos + 2]) << 8);
    zpos += 5;
    if (zpos + n > zdata.size()) throw RenderError("decode_png_gray8: truncated block");
    raw.insert(raw.end(), zdata.begin() + static_cast<std::ptrdiff_t>(zpos),
               zdata.begin() + static_cast<std::ptrdiff_t>(zpos + n));
    zpos += n;
    if (header & 1) break;
  }
  if (zpos + 4 > zdata.size() || adler32(raw.data(), raw.size()) != read_u32(zdata, zpos)) {
    throw RenderError("decode_png_gray8: adler mismatch");
  }

  std::size_t stride = static_cast<std::size_t>(width) + 1;
  if (raw.size() != stride * static_cast<std::size_t>(height)) {
    throw RenderError("decode_png_gray8: pixel payload size mismatch");
  }
  Image img(width, height);
  for (int y = 0; y < height; ++y) {
    const std::uint8_t* row = raw.data() + static_cast<std::size_t>(y) * stride;
    if (row[0] != 0) throw RenderError("decode_png_gray8: only filter 0 supported");
    std::copy(row + 1, row + stride,
              img.pixels.begin() + static_cast<std::ptrdiff_t>(
                                       static_cast<std::size_t>(y) * width));
  }
  return img;
}

void write_image_png(const std::string& path, const Image& img) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::vector<std::uint8_t> bytes = encode_png_gray8(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RenderError("write_image_png: cannot open " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw RenderError("write_image_png: write failed for " + path);
}

Image read_image_png(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RenderError("read_image_png: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_png_gray8(bytes);
}

}  // namespace ravenkit
