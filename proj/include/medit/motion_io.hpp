#pragma once

#include <optional>
#include <string>
#include <vector>

#include "medit/motion.hpp"

namespace medit {

// One manifest line. `snr` is absent until the similarity pipeline fills it;
// +infinity is legal and serialized as the string "inf".
struct ManifestEntry {
    std::string id;
    std::string path;  // triplet file, relative to the manifest's directory
    std::optional<double> snr;
    bool included = true;
};

struct DatasetManifest {
    std::string split;  // train | val | test
    double snr_threshold = 0.0;
    std::string config_hash;  // empty = not recorded
    std::vector<ManifestEntry> entries;

    void validate() const;  // unique ids, included flags consistent with threshold
};

// Triplet file format: one JSON document with fields
// {id, instruction, frame_rate, layout:{v,o,r,p}, source, target, edit_mask?}.
// Frames are row-major nested arrays of 64-bit reals; round trips are bit-exact.
EditTriplet load_triplet(const std::string& path);
EditTriplet load_triplet(const std::string& path, const FeatureLayout& expected);
void save_triplet(const EditTriplet& t, const std::string& path);

// Manifest format: JSON-lines; the first line is a header
// {split, snr_threshold, config_hash?}, each following line one entry.
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const DatasetManifest& m, const std::string& path);

// Bare motion file {frame_rate, layout, frames, config_hash?}, used for
// sampler output and as a sample-command source.
void save_motion(const MotionSequence& m, const std::string& path,
                 const std::string& config_hash = "");
MotionSequence load_motion(const std::string& path);

// True if `path` holds a triplet document rather than a bare motion.
bool is_triplet_file(const std::string& path);

}  // namespace medit
