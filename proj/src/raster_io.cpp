#include "raster_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace chem {

namespace {

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

double get_f64(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

}  // namespace

void write_raster(const std::filesystem::path& path, const ImageD& img) {
  require_valid_image(img, "write_raster");
  std::string out;
  out.reserve(14 + static_cast<std::size_t>(img.size()) * 8);
  out += "CHEM";
  put_u16(out, kRasterVersion);
  put_u32(out, static_cast<std::uint32_t>(img.rows()));
  put_u32(out, static_cast<std::uint32_t>(img.cols()));
  for (Index r = 0; r < img.rows(); ++r)
    for (Index c = 0; c < img.cols(); ++c) put_f64(out, img(r, c));
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("write failed: " + path.string());
}

ImageD read_raster(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() < 14 || bytes.compare(0, 4, "CHEM") != 0)
    throw DataError("not a CHEM raster: " + path.string());
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint16_t version = get_u16(p + 4);
  if (version != kRasterVersion)
    throw DataError("unsupported raster version in " + path.string());
  const std::uint32_t rows = get_u32(p + 6);
  const std::uint32_t cols = get_u32(p + 10);
  const std::size_t expect = 14 + static_cast<std::size_t>(rows) * cols * 8;
  if (rows == 0 || cols == 0 || bytes.size() != expect)
    throw DataError("raster payload length mismatch in " + path.string());
  ImageD img(static_cast<Index>(rows), static_cast<Index>(cols));
  const unsigned char* q = p + 14;
  for (Index r = 0; r < img.rows(); ++r)
    for (Index c = 0; c < img.cols(); ++c, q += 8) img(r, c) = get_f64(q);
  return img;
}

void write_pgm16(const std::filesystem::path& path, const ImageD& img) {
  require_valid_image(img, "write_pgm16");
  const double lo = img.minCoeff();
  const double hi = img.maxCoeff();
  const double scale = hi > lo ? 65535.0 / (hi - lo) : 0.0;
  std::ostringstream header;
  header << "P5\n# min=" << lo << " max=" << hi << "\n" << img.cols() << " " << img.rows()
         << "\n65535\n";
  std::string out = header.str();
  for (Index r = 0; r < img.rows(); ++r) {
    for (Index c = 0; c < img.cols(); ++c) {
      const auto v = static_cast<std::uint16_t>((img(r, c) - lo) * scale + 0.5);
      out.push_back(static_cast<char>((v >> 8) & 0xFF));  // PGM samples are big-endian
      out.push_back(static_cast<char>(v & 0xFF));
    }
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace chem
