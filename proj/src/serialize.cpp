#include "serialize.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "chem/hash.hpp"
#include "raster_io.hpp"

namespace chem {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot open for writing: " + path.string());
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw DataError("write failed: " + path.string());
}

Json parse_json_file(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  Json j = Json::parse(bytes, nullptr, false);
  if (j.is_discarded()) throw DataError("invalid JSON: " + path.string());
  return j;
}

void write_doubles_le(std::string& out, const VectorD& v) {
  for (Index i = 0; i < v.size(); ++i) {
    std::uint64_t bits;
    const double x = v[i];
    std::memcpy(&bits, &x, sizeof(bits));
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
  }
}

VectorD read_doubles_le(const std::string& bytes, std::size_t offset, Index count) {
  if (bytes.size() < offset + static_cast<std::size_t>(count) * 8)
    throw DataError("calibration binary truncated");
  VectorD v(count);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data()) + offset;
  for (Index i = 0; i < count; ++i, p += 8) {
    std::uint64_t bits = 0;
    for (int b = 7; b >= 0; --b) bits = (bits << 8) | p[b];
    double x;
    std::memcpy(&x, &bits, sizeof(x));
    v[i] = x;
  }
  return v;
}

}  // namespace

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

Json transform_config_to_json(const TransformConfig& cfg) {
  Json j;
  j["kind"] = cfg.kind == TransformKind::wavelet ? "wavelet" : "shearlet";
  j["family"] = cfg.wavelet_family;
  j["levels"] = cfg.wavelet_levels;
  j["scales"] = cfg.shearlet.scales;
  j["shear_levels"] = cfg.shearlet.shear_levels;
  j["normalize"] = cfg.normalize;
  return j;
}

TransformConfig transform_config_from_json(const Json& j) {
  TransformConfig cfg;
  const std::string kind = j.value("kind", "wavelet");
  if (kind == "wavelet")
    cfg.kind = TransformKind::wavelet;
  else if (kind == "shearlet")
    cfg.kind = TransformKind::shearlet;
  else
    throw std::invalid_argument("unknown transform kind: " + kind);
  cfg.wavelet_family = j.value("family", cfg.wavelet_family);
  cfg.wavelet_levels = j.value("levels", cfg.wavelet_levels);
  cfg.shearlet.scales = j.value("scales", cfg.shearlet.scales);
  if (j.contains("shear_levels"))
    cfg.shearlet.shear_levels = j.at("shear_levels").get<std::vector<int>>();
  cfg.normalize = j.value("normalize", cfg.normalize);
  return cfg;
}

Json scene_config_to_json(const SceneConfig<double>& cfg) {
  Json j;
  j["side"] = cfg.side;
  j["min_sources"] = cfg.min_sources;
  j["max_sources"] = cfg.max_sources;
  j["flux_min"] = cfg.flux_min;
  j["flux_max"] = cfg.flux_max;
  j["radius_min"] = cfg.radius_min;
  j["radius_max"] = cfg.radius_max;
  j["max_ellipticity"] = cfg.max_ellipticity;
  j["sersic_fraction"] = cfg.sersic_fraction;
  j["border_margin"] = cfg.border_margin;
  j["seed"] = cfg.seed;
  return j;
}

SceneConfig<double> scene_config_from_json(const Json& j) {
  SceneConfig<double> cfg;
  cfg.side = j.value("side", cfg.side);
  cfg.min_sources = j.value("min_sources", cfg.min_sources);
  cfg.max_sources = j.value("max_sources", cfg.max_sources);
  cfg.flux_min = j.value("flux_min", cfg.flux_min);
  cfg.flux_max = j.value("flux_max", cfg.flux_max);
  cfg.radius_min = j.value("radius_min", cfg.radius_min);
  cfg.radius_max = j.value("radius_max", cfg.radius_max);
  cfg.max_ellipticity = j.value("max_ellipticity", cfg.max_ellipticity);
  cfg.sersic_fraction = j.value("sersic_fraction", cfg.sersic_fraction);
  cfg.border_margin = j.value("border_margin", cfg.border_margin);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

void RunConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("config: alpha must be in (0,1)");
  if (!(theta > 0.0)) throw std::invalid_argument("config: theta must be > 0");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("config: delta must be in (0,1)");
  if (d1 < 1 || d2 < 1 || test < 1)
    throw std::invalid_argument("config: split sizes d1, d2, test must all be >= 1");
  if (!(bound_lo < bound_hi)) throw std::invalid_argument("config: bounds must satisfy lo < hi");
  if (std_mode != "across_coefficients" && std_mode != "per_coefficient")
    throw std::invalid_argument("config: unknown std_mode " + std_mode);
  scene.validate();
  g_family_from_name(g_family);
}

Json RunConfig::to_json() const {
  Json j;
  j["transform"] = transform_config_to_json(transform);
  j["model"] = model;
  j["alpha"] = alpha;
  j["theta"] = theta;
  j["delta"] = delta;
  j["splits"] = Json{{"d1", d1}, {"d2", d2}, {"test", test}};
  j["scene"] = scene_config_to_json(scene);
  j["fwhm"] = fwhm;
  j["noise_sigma"] = noise_sigma;
  j["g_family"] = g_family;
  j["bounds"] = Json::array({bound_lo, bound_hi});
  j["map_scales"] = map_scales;
  j["map_threshold"] = map_threshold;
  j["std_mode"] = std_mode;
  return j;
}

RunConfig RunConfig::from_json(const Json& j) {
  RunConfig cfg;
  if (j.contains("transform")) cfg.transform = transform_config_from_json(j.at("transform"));
  cfg.model = j.value("model", cfg.model);
  cfg.alpha = j.value("alpha", cfg.alpha);
  cfg.theta = j.value("theta", cfg.theta);
  cfg.delta = j.value("delta", cfg.delta);
  if (j.contains("splits")) {
    cfg.d1 = j.at("splits").value("d1", cfg.d1);
    cfg.d2 = j.at("splits").value("d2", cfg.d2);
    cfg.test = j.at("splits").value("test", cfg.test);
  }
  if (j.contains("scene")) cfg.scene = scene_config_from_json(j.at("scene"));
  cfg.fwhm = j.value("fwhm", cfg.fwhm);
  cfg.noise_sigma = j.value("noise_sigma", cfg.noise_sigma);
  cfg.g_family = j.value("g_family", cfg.g_family);
  if (j.contains("bounds")) {
    cfg.bound_lo = j.at("bounds").at(0).get<double>();
    cfg.bound_hi = j.at("bounds").at(1).get<double>();
  }
  cfg.map_scales = j.value("map_scales", cfg.map_scales);
  cfg.map_threshold = j.value("map_threshold", cfg.map_threshold);
  cfg.std_mode = j.value("std_mode", cfg.std_mode);
  return cfg;
}

std::string RunConfig::config_hash() const { return fnv1a64_hex(to_json().dump()); }

std::string RunConfig::transform_hash() const {
  return fnv1a64_hex(transform.canonical_string());
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  Json j;
  j["kind"] = "chem-dataset-manifest";
  j["version"] = 1;
  j["config_hash"] = m.config_hash;
  j["count"] = m.count;
  j["fwhm"] = m.fwhm;
  j["noise_sigma"] = m.noise_sigma;
  j["normalization"] = Json{{"offset", m.norm_offset}, {"scale", m.norm_scale}};
  j["peak_snr"] = Json{{"min", m.min_peak_snr}, {"max", m.max_peak_snr}};
  j["seed"] = m.seed;
  Json pairs = Json::array();
  for (const auto& e : m.entries) {
    pairs.push_back(Json{{"x", e.degraded_path},
                         {"y", e.truth_path},
                         {"seed", e.seed},
                         {"min_peak_snr", e.min_peak_snr}});
  }
  j["pairs"] = std::move(pairs);
  write_text(path, dump_json(j));
}

Manifest read_manifest(const std::filesystem::path& path) {
  const Json j = parse_json_file(path);
  if (j.value("kind", "") != "chem-dataset-manifest")
    throw DataError("not a dataset manifest: " + path.string());
  Manifest m;
  m.config_hash = j.value("config_hash", "");
  m.count = j.value("count", 0);
  m.fwhm = j.value("fwhm", 0.0);
  m.noise_sigma = j.value("noise_sigma", 0.0);
  m.norm_offset = j.at("normalization").value("offset", 0.0);
  m.norm_scale = j.at("normalization").value("scale", 1.0);
  m.min_peak_snr = j.at("peak_snr").value("min", 0.0);
  m.max_peak_snr = j.at("peak_snr").value("max", 0.0);
  m.seed = j.value("seed", std::uint64_t{0});
  for (const auto& e : j.at("pairs")) {
    ManifestEntry entry;
    entry.degraded_path = e.at("x").get<std::string>();
    entry.truth_path = e.at("y").get<std::string>();
    entry.seed = e.value("seed", std::uint64_t{0});
    entry.min_peak_snr = e.value("min_peak_snr", 0.0);
    m.entries.push_back(std::move(entry));
  }
  if (static_cast<int>(m.entries.size()) != m.count)
    throw DataError("manifest pair count mismatch: " + path.string());
  return m;
}

void write_calibration(const std::filesystem::path& json_path,
                       const CalibrationSidecar& sidecar) {
  const auto& cal = sidecar.result;
  std::filesystem::path bin_path = json_path;
  bin_path.replace_extension(".bin");

  Json j;
  j["kind"] = "chem-calibration";
  j["version"] = 1;
  j["alpha"] = static_cast<double>(cal.model.alpha);
  j["g_family"] = g_family_name(cal.model.g);
  j["bounds"] = Json::array({cal.model.bound_lo, cal.model.bound_hi});
  j["transform_hash"] = sidecar.transform_hash;
  j["model_id"] = sidecar.model_id;
  j["n_calibration"] = cal.n_calibration;
  j["quantile_level"] = static_cast<double>(cal.quantile_level);
  j["level_overflow"] = cal.level_overflow;
  j["clipped_lo_fraction"] = static_cast<double>(cal.clipped_lo_fraction);
  j["clipped_hi_fraction"] = static_cast<double>(cal.clipped_hi_fraction);
  j["coefficient_count"] = cal.model.r_hat.size();
  j["warnings"] = sidecar.warnings;
  j["rms"] = sidecar.rms;
  j["binary"] = bin_path.filename().string();
  write_text(json_path, dump_json(j));

  std::string bytes;
  bytes.reserve(static_cast<std::size_t>(cal.model.r_hat.size()) * 16);
  write_doubles_le(bytes, cal.model.r_hat);
  write_doubles_le(bytes, cal.model.lambda);
  write_text(bin_path, bytes);
}

CalibrationSidecar read_calibration(const std::filesystem::path& json_path) {
  const Json j = parse_json_file(json_path);
  if (j.value("kind", "") != "chem-calibration")
    throw DataError("not a calibration sidecar: " + json_path.string());
  CalibrationSidecar out;
  auto& cal = out.result;
  cal.model.alpha = j.value("alpha", 0.01);
  cal.model.g = g_family_from_name(j.value("g_family", "multiplicative"));
  cal.model.bound_lo = j.at("bounds").at(0).get<double>();
  cal.model.bound_hi = j.at("bounds").at(1).get<double>();
  cal.n_calibration = j.value("n_calibration", Index{0});
  cal.quantile_level = j.value("quantile_level", 0.0);
  cal.level_overflow = j.value("level_overflow", false);
  cal.clipped_lo_fraction = j.value("clipped_lo_fraction", 0.0);
  cal.clipped_hi_fraction = j.value("clipped_hi_fraction", 0.0);
  out.transform_hash = j.value("transform_hash", "");
  out.model_id = j.value("model_id", "");
  if (j.contains("warnings")) out.warnings = j.at("warnings").get<std::vector<std::string>>();
  out.rms = j.value("rms", Json());

  const Index count = j.value("coefficient_count", Index{0});
  if (count < 1) throw DataError("calibration sidecar missing coefficient count");
  std::filesystem::path bin_path = json_path;
  bin_path = bin_path.parent_path() / j.at("binary").get<std::string>();
  const std::string bytes = read_file_bytes(bin_path);
  if (bytes.size() != static_cast<std::size_t>(count) * 16)
    throw DataError("calibration binary length mismatch: " + bin_path.string());
  cal.model.r_hat = read_doubles_le(bytes, 0, count);
  cal.model.lambda = read_doubles_le(bytes, static_cast<std::size_t>(count) * 8, count);
  return out;
}

void write_report(const std::filesystem::path& path, const EvalResult<double>& result,
                  const std::string& model_id, const std::string& config_hash,
                  const std::string& transform_hash, double delta) {
  const auto& rep = result.report;
  Json j;
  j["kind"] = "chem-report";
  j["version"] = 1;
  j["config_hash"] = config_hash;
  j["transform_hash"] = transform_hash;
  j["model_id"] = model_id;
  j["alpha"] = static_cast<double>(rep.alpha);
  j["theta"] = static_cast<double>(rep.theta);
  j["delta"] = delta;
  j["sample_count"] = rep.sample_count;
  j["aggregate"] = static_cast<double>(rep.aggregate);
  j["hoeffding_half_width"] = static_cast<double>(rep.hoeffding_half_width_value);
  j["mse"] = static_cast<double>(result.mse);
  j["chem_per_scale"] = result.chem_per_scale;
  j["mean_coverage"] = static_cast<double>(result.coverage.mean_coverage);
  j["mean_miscoverage"] = static_cast<double>(result.coverage.mean_miscoverage);
  j["std_mode"] =
      rep.std_mode == StdMode::across_coefficients ? "across_coefficients" : "per_coefficient";
  j["std_sigma"] = static_cast<double>(rep.std_sigma);
  j["degenerate_std"] = rep.degenerate_std;
  std::vector<double> per_j(rep.per_coefficient.data(),
                            rep.per_coefficient.data() + rep.per_coefficient.size());
  std::vector<double> tilde(rep.standardized.data(),
                            rep.standardized.data() + rep.standardized.size());
  j["per_coefficient"] = per_j;
  j["standardized"] = tilde;
  write_text(path, dump_json(j));
}

void write_sweep_csv(const std::filesystem::path& path,
                     const std::vector<SweepRecord<double>>& rows) {
  std::ostringstream os;
  os.precision(17);
  std::size_t scales = 0;
  for (const auto& r : rows) scales = std::max(scales, r.chem_per_scale.size());
  os << "fwhm,mse,chem";
  for (std::size_t s = 1; s <= scales; ++s) os << ",chem_scale" << s;
  os << ",model\n";
  for (const auto& r : rows) {
    os << r.fwhm << "," << r.mse << "," << r.chem;
    for (std::size_t s = 0; s < scales; ++s)
      os << "," << (s < r.chem_per_scale.size() ? r.chem_per_scale[s] : 0.0);
    os << "," << r.model_id << "\n";
  }
  write_text(path, os.str());
}

}  // namespace chem
