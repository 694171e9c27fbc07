#include "registry.hpp"

#include <map>
#include <stdexcept>
#include <vector>

namespace chem {

namespace {

// "k1=v1,k2=v2,..." where a value may itself contain ':' (nested model ids).
std::map<std::string, std::string> parse_options(const std::string& s) {
  std::map<std::string, std::string> out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t comma = s.find(',', pos);
    const std::string item = s.substr(pos, comma == std::string::npos ? comma : comma - pos);
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw std::invalid_argument("malformed model option: " + item);
    out[item.substr(0, eq)] = item.substr(eq + 1);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (...) {
    throw std::invalid_argument("bad numeric value for " + what + ": " + s);
  }
}

}  // namespace

std::shared_ptr<const Reconstructor<double>> make_reconstructor(const std::string& id) {
  const std::size_t colon = id.find(':');
  const std::string name = id.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : id.substr(colon + 1);

  if (name == "identity") return std::make_shared<IdentityReconstructor<double>>();
  if (name == "oracle") return std::make_shared<GroundTruthReconstructor<double>>();

  if (name == "tikhonov") {
    TikhonovConfig<double> cfg;
    if (rest.empty() || rest == "sure") {
      cfg.lambda = -1.0;
    } else {
      const auto opts = parse_options(rest);
      if (auto it = opts.find("lambda"); it != opts.end())
        cfg.lambda = to_double(it->second, "lambda");
      else
        throw std::invalid_argument("tikhonov: expected 'sure' or lambda=<v>, got " + rest);
    }
    return std::make_shared<TikhonovReconstructor<double>>(cfg);
  }

  if (name == "wiener") {
    const auto opts = parse_options(rest);
    const auto it = opts.find("snr");
    if (it == opts.end()) throw std::invalid_argument("wiener: missing snr=<v>");
    return std::make_shared<WienerReconstructor<double>>(to_double(it->second, "snr"));
  }

  if (name == "shrink") {
    auto opts = parse_options(rest);
    const auto base_it = opts.find("base");
    if (base_it == opts.end()) throw std::invalid_argument("shrink: missing base=<model>");
    const double t = opts.count("t") ? to_double(opts.at("t"), "t") : 0.01;
    const std::string family = opts.count("family") ? opts.at("family") : "db4";
    const int levels = opts.count("levels")
                           ? static_cast<int>(to_double(opts.at("levels"), "levels"))
                           : 3;
    return std::make_shared<WaveletShrinkReconstructor<double>>(
        make_reconstructor(base_it->second), family, levels, t);
  }

  if (name == "hallucinator") {
    auto opts = parse_options(rest);
    const auto base_it = opts.find("base");
    if (base_it == opts.end()) throw std::invalid_argument("hallucinator: missing base=<model>");
    TextureSpec<double> tex;
    if (opts.count("angle")) tex.angle_deg = to_double(opts.at("angle"), "angle");
    if (opts.count("wavelength")) tex.wavelength = to_double(opts.at("wavelength"), "wavelength");
    if (opts.count("patch"))
      tex.patch_side = static_cast<Index>(to_double(opts.at("patch"), "patch"));
    if (opts.count("placement")) {
      const std::string& p = opts.at("placement");
      if (p == "center")
        tex.placement = TexturePlacement::center;
      else if (p == "blob")
        tex.placement = TexturePlacement::brightest_blob;
      else
        throw std::invalid_argument("hallucinator: unknown placement " + p);
    }
    const double amp = opts.count("amp") ? to_double(opts.at("amp"), "amp") : 0.1;
    return std::make_shared<HallucinatorReconstructor<double>>(make_reconstructor(base_it->second),
                                                               tex, amp);
  }

  throw std::invalid_argument("unknown reconstructor id: " + id);
}

}  // namespace chem
