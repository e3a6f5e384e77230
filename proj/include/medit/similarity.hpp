#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "medit/motion.hpp"
#include "medit/motion_io.hpp"

namespace medit {

// Per-frame similarity between a source motion and its edit, from raw
// windowed distances through normalization, class labels, and MotionSNR.
struct SimilarityCurve {
    Eigen::VectorXd raw_rotation;  // <= 0 elementwise
    Eigen::VectorXd raw_location;  // <= 0 elementwise
    Eigen::VectorXd combined;      // weighted sum, <= 0
    Eigen::VectorXd normalized;    // in [0, 1]
    std::vector<int> labels;       // quantized classes in {0..K-1}
    double snr = 0.0;              // may be +infinity
};

struct SimilarityConfig {
    int window = 2;            // sliding-window half width W
    double w_rotation = 0.5;   // weight on the rotation-space curve
    double w_location = 0.5;   // weight on the location-space curve
    int classes = 3;           // K
    int kappa = 5;             // top/bottom set size for MotionSNR
    double snr_threshold = 2.0;
    std::string metric = "euclidean";  // or "manhattan"

    void validate() const;
};

// output[i] = -min over j in the clamped window |i-j| <= W of metric(src[i], tgt[j]).
// Window indices are clamped to [0, F'-1], which also defines behavior when
// the two sequences have different lengths.
Eigen::VectorXd raw_similarity(const Eigen::MatrixXd& src_view, const Eigen::MatrixXd& tgt_view,
                               int window, const std::string& metric = "euclidean");

Eigen::VectorXd combine(const Eigen::VectorXd& raw_rot, const Eigen::VectorXd& raw_loc,
                        double w_rotation, double w_location);

// (S_i - min) / (max - min). A constant curve maps to all ones: every frame is
// equally similar, and for an identity edit similarity is maximal.
Eigen::VectorXd min_max_normalize(const Eigen::VectorXd& combined);

// Ratio of the summed kappa largest dissimilarity magnitudes d_i = -combined_i
// to the summed kappa smallest. +infinity when the bottom sum is zero and the
// top sum is not; exactly 1 when both are zero. kappa is clamped to floor(F/2)
// (minimum 1) so the two sets stay disjoint.
double motion_snr(const Eigen::VectorXd& combined, int kappa);

// label = floor(value * K) with the top interval closed at 1.
std::vector<int> quantize(const Eigen::VectorXd& normalized, int classes);

DatasetManifest filter_dataset(const DatasetManifest& manifest,
                               const std::map<std::string, SimilarityCurve>& curves,
                               double threshold);

// Full pipeline: raw curves on the rotation and position blocks, weighted
// combination, normalization, MotionSNR, quantization.
SimilarityCurve build_curve(const EditTriplet& triplet, const SimilarityConfig& config);

}  // namespace medit
