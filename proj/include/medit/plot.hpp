#pragma once

#include <string>

#include "medit/similarity.hpp"

namespace medit {

// Static plot of one similarity curve: normalized value over frame index on
// top of the K class bands, with a per-frame label strip along the bottom.
// Written as binary PPM (P6).
void write_curve_plot(const SimilarityCurve& curve, int classes, const std::string& path);

}  // namespace medit
