#include "coef_io.hpp"

#include <cstring>
#include <fstream>

#include "raster_io.hpp"

namespace chem {

namespace {

class ByteWriter {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) {
    for (int i = 0; i < 2; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    u64(bits);
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  void raw(const char* p, std::size_t n) { out_.append(p, n); }
  const std::string& bytes() const { return out_; }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint16_t u16() {
    const auto* p = take(2);
    return static_cast<std::uint16_t>(static_cast<unsigned char>(p[0]) |
                                      (static_cast<unsigned char>(p[1]) << 8));
  }
  std::uint32_t u32() {
    const auto* p = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
    return v;
  }
  std::uint64_t u64() {
    const auto* p = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(p[i]);
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    const auto* p = take(n);
    return std::string(p, n);
  }

 private:
  const char* take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw DataError("coefficient container truncated");
    const char* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + path.string());
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("write failed: " + path.string());
}

}  // namespace

void write_coefficients(const std::filesystem::path& path,
                        const CoefficientField<double>& field) {
  field.check_consistent();
  ByteWriter w;
  w.raw("CHCF", 4);
  w.u16(kCoefficientVersion);
  w.str(field.layout.transform_id());
  w.u32(static_cast<std::uint32_t>(field.layout.levels()));
  w.u32(static_cast<std::uint32_t>(field.layout.image_rows()));
  w.u32(static_cast<std::uint32_t>(field.layout.image_cols()));
  w.u32(static_cast<std::uint32_t>(field.layout.band_count()));
  for (const auto& b : field.layout.bands()) {
    w.u32(static_cast<std::uint32_t>(b.scale));
    w.str(b.orientation);
    w.f64(b.angle_deg);
    w.u64(static_cast<std::uint64_t>(b.offset));
    w.u64(static_cast<std::uint64_t>(b.rows));
    w.u64(static_cast<std::uint64_t>(b.cols));
    w.u8(b.is_approx ? 1 : 0);
  }
  w.u8(field.state == NormState::subband_rms ? 1 : 0);
  if (field.state == NormState::subband_rms) {
    for (Index i = 0; i < field.band_rms.size(); ++i) w.f64(field.band_rms[i]);
    for (std::uint8_t g : field.rms_guarded) w.u8(g);
  }
  w.u64(static_cast<std::uint64_t>(field.values.size()));
  for (Index i = 0; i < field.values.size(); ++i) w.f64(field.values[i]);
  write_file(path, w.bytes());
}

CoefficientField<double> read_coefficients(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() < 6 || bytes.compare(0, 4, "CHCF") != 0)
    throw DataError("not a coefficient container: " + path.string());
  const std::string body = bytes.substr(4);
  ByteReader r(body);
  if (r.u16() != kCoefficientVersion)
    throw DataError("unsupported coefficient container version in " + path.string());
  const std::string transform_id = r.str();
  const int levels = static_cast<int>(r.u32());
  const Index rows = static_cast<Index>(r.u32());
  const Index cols = static_cast<Index>(r.u32());
  const std::uint32_t band_count = r.u32();
  std::vector<SubbandRecord> bands;
  for (std::uint32_t i = 0; i < band_count; ++i) {
    SubbandRecord b;
    b.scale = static_cast<int>(r.u32());
    b.orientation = r.str();
    b.angle_deg = r.f64();
    b.offset = static_cast<Index>(r.u64());
    b.rows = static_cast<Index>(r.u64());
    b.cols = static_cast<Index>(r.u64());
    b.is_approx = r.u8() != 0;
    bands.push_back(std::move(b));
  }
  CoefficientField<double> field;
  field.layout = SubbandLayout(transform_id, levels, rows, cols, std::move(bands));
  const bool normalized = r.u8() != 0;
  if (normalized) {
    field.state = NormState::subband_rms;
    field.band_rms.resize(static_cast<Index>(band_count));
    for (std::uint32_t i = 0; i < band_count; ++i)
      field.band_rms[static_cast<Index>(i)] = r.f64();
    field.rms_guarded.resize(band_count);
    for (std::uint32_t i = 0; i < band_count; ++i) field.rms_guarded[i] = r.u8();
  }
  const std::uint64_t count = r.u64();
  if (static_cast<Index>(count) != field.layout.total_size())
    throw DataError("coefficient payload length mismatch in " + path.string());
  field.values.resize(static_cast<Index>(count));
  for (std::uint64_t i = 0; i < count; ++i) field.values[static_cast<Index>(i)] = r.f64();
  return field;
}

nlohmann::json coefficients_to_json(const CoefficientField<double>& field) {
  field.check_consistent();
  nlohmann::json j;
  j["kind"] = "chem-coefficients";
  j["version"] = kCoefficientVersion;
  j["transform_id"] = field.layout.transform_id();
  j["levels"] = field.layout.levels();
  j["image_rows"] = field.layout.image_rows();
  j["image_cols"] = field.layout.image_cols();
  nlohmann::json bands = nlohmann::json::array();
  for (const auto& b : field.layout.bands()) {
    bands.push_back({{"scale", b.scale},
                     {"orientation", b.orientation},
                     {"angle_deg", b.angle_deg},
                     {"offset", b.offset},
                     {"rows", b.rows},
                     {"cols", b.cols},
                     {"approx", b.is_approx}});
  }
  j["bands"] = std::move(bands);
  j["normalized"] = field.state == NormState::subband_rms;
  if (field.state == NormState::subband_rms) {
    j["band_rms"] = std::vector<double>(field.band_rms.data(),
                                        field.band_rms.data() + field.band_rms.size());
    j["rms_guarded"] = std::vector<int>(field.rms_guarded.begin(), field.rms_guarded.end());
  }
  j["values"] =
      std::vector<double>(field.values.data(), field.values.data() + field.values.size());
  return j;
}

CoefficientField<double> coefficients_from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "chem-coefficients")
    throw DataError("not a coefficient JSON container");
  std::vector<SubbandRecord> bands;
  for (const auto& e : j.at("bands")) {
    SubbandRecord b;
    b.scale = e.at("scale").get<int>();
    b.orientation = e.at("orientation").get<std::string>();
    b.angle_deg = e.value("angle_deg", -1.0);
    b.offset = e.at("offset").get<Index>();
    b.rows = e.at("rows").get<Index>();
    b.cols = e.at("cols").get<Index>();
    b.is_approx = e.at("approx").get<bool>();
    bands.push_back(std::move(b));
  }
  CoefficientField<double> field;
  field.layout =
      SubbandLayout(j.at("transform_id").get<std::string>(), j.at("levels").get<int>(),
                    j.at("image_rows").get<Index>(), j.at("image_cols").get<Index>(),
                    std::move(bands));
  const auto values = j.at("values").get<std::vector<double>>();
  field.values.resize(static_cast<Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) field.values[static_cast<Index>(i)] = values[i];
  if (j.value("normalized", false)) {
    field.state = NormState::subband_rms;
    const auto rms = j.at("band_rms").get<std::vector<double>>();
    field.band_rms.resize(static_cast<Index>(rms.size()));
    for (std::size_t i = 0; i < rms.size(); ++i) field.band_rms[static_cast<Index>(i)] = rms[i];
    const auto guarded = j.at("rms_guarded").get<std::vector<int>>();
    field.rms_guarded.assign(guarded.begin(), guarded.end());
  }
  field.check_consistent();
  return field;
}

void write_score_matrix(const std::filesystem::path& path,
                        const ResidualMatrix<double>& scores) {
  ByteWriter w;
  w.raw("CHSM", 4);
  w.u16(1);
  w.u32(static_cast<std::uint32_t>(scores.rows()));
  w.u64(static_cast<std::uint64_t>(scores.cols()));
  for (Index i = 0; i < scores.rows(); ++i)
    for (Index j = 0; j < scores.cols(); ++j) w.f64(scores(i, j));
  write_file(path, w.bytes());
}

ResidualMatrix<double> read_score_matrix(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.size() < 6 || bytes.compare(0, 4, "CHSM") != 0)
    throw DataError("not a score matrix: " + path.string());
  const std::string body = bytes.substr(4);
  ByteReader r(body);
  if (r.u16() != 1) throw DataError("unsupported score matrix version in " + path.string());
  const Index rows = static_cast<Index>(r.u32());
  const Index cols = static_cast<Index>(r.u64());
  ResidualMatrix<double> m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = r.f64();
  return m;
}

}  // namespace chem
