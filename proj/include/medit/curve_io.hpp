#pragma once

#include <map>
#include <string>

#include "medit/similarity.hpp"

namespace medit {

// Curve records: JSON-lines, one object per triplet with the raw, combined,
// normalized, and quantized curves plus MotionSNR ("inf" when infinite).
void save_curves(const std::map<std::string, SimilarityCurve>& curves, const std::string& path,
                 const std::string& config_hash = "");

std::map<std::string, SimilarityCurve> load_curves(const std::string& path);

}  // namespace medit
