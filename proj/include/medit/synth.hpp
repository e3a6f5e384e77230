#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "medit/motion.hpp"
#include "medit/motion_io.hpp"

namespace medit {

enum class EditKind { kAmplitude, kSpeed, kFreeze, kMirror, kPhase };

const char* edit_kind_name(EditKind k);
EditKind edit_kind_from_name(const std::string& name);  // throws ConfigError

// Deterministic synthetic edit triplets: sinusoidal base motions, one edit
// kind applied on a contiguous window whose coarse position follows the
// instruction ("early"/"middle"/"late"), ground-truth mask over the window.
struct SynthSpec {
    int n_triplets = 100;
    int frames = 32;
    FeatureLayout layout = FeatureLayout::compact();
    std::vector<EditKind> edit_kinds = {EditKind::kAmplitude, EditKind::kSpeed, EditKind::kFreeze,
                                        EditKind::kMirror, EditKind::kPhase};
    std::uint64_t seed = 0;
    double frame_rate = 30.0;
    double magnitude = 1.0;  // 0 produces identity edits with an all-false mask

    void validate() const;
};

std::vector<EditTriplet> generate(const SynthSpec& spec);

struct SplitRatios {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

// Seeded disjoint split; entry paths are "<id>.json" relative to a triplet
// directory. Throws ConfigError if any split would be empty.
std::array<DatasetManifest, 3> split_manifest(const std::vector<EditTriplet>& triplets,
                                              const SplitRatios& ratios, std::uint64_t seed);

}  // namespace medit
