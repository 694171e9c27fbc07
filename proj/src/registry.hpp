#pragma once

#include <memory>
#include <string>

#include "chem/reconstructors.hpp"

namespace chem {

/// Builds a reconstructor from an identifier string, e.g.
///   identity | oracle | tikhonov:sure | tikhonov:lambda=0.05
///   wiener:snr=100 | shrink:base=tikhonov:sure,t=0.02
///   hallucinator:base=tikhonov:sure,amp=0.2,angle=45,wavelength=3,patch=16,placement=blob
/// Unknown names or malformed options throw std::invalid_argument.
std::shared_ptr<const Reconstructor<double>> make_reconstructor(const std::string& id);

}  // namespace chem
