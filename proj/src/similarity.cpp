#include "medit/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>

namespace medit {

void SimilarityConfig::validate() const {
    if (window < 0) throw ConfigError("similarity config: window must be >= 0");
    if (w_rotation < 0.0 || w_location < 0.0 || w_rotation + w_location <= 0.0)
        throw ConfigError("similarity config: weights must be >= 0 with a positive sum");
    if (classes < 2) throw ConfigError("similarity config: classes must be >= 2");
    if (kappa < 1) throw ConfigError("similarity config: kappa must be >= 1");
    if (!(snr_threshold > 0.0)) throw ConfigError("similarity config: snr_threshold must be > 0");
    if (metric != "euclidean" && metric != "manhattan")
        throw ConfigError("similarity config: unknown metric '" + metric + "'");
}

namespace {

double frame_distance(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b,
                      Eigen::Index j, bool manhattan) {
    if (manhattan) return (a.row(i) - b.row(j)).cwiseAbs().sum();
    return (a.row(i) - b.row(j)).norm();
}

}  // namespace

Eigen::VectorXd raw_similarity(const Eigen::MatrixXd& src_view, const Eigen::MatrixXd& tgt_view,
                               int window, const std::string& metric) {
    if (src_view.cols() != tgt_view.cols())
        throw InputError("raw_similarity: views must share the feature dimension");
    if (window < 0) throw InputError("raw_similarity: window must be >= 0");
    if (tgt_view.rows() == 0) throw InputError("raw_similarity: empty edited sequence");
    if (metric != "euclidean" && metric != "manhattan")
        throw InputError("raw_similarity: unknown metric '" + metric + "'");
    const bool manhattan = metric == "manhattan";

    const Eigen::Index f_src = src_view.rows();
    const Eigen::Index f_tgt = tgt_view.rows();
    Eigen::VectorXd out(f_src);
    for (Eigen::Index i = 0; i < f_src; ++i) {
        const Eigen::Index lo = std::clamp<Eigen::Index>(i - window, 0, f_tgt - 1);
        const Eigen::Index hi = std::clamp<Eigen::Index>(i + window, 0, f_tgt - 1);
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = lo; j <= hi; ++j)
            best = std::min(best, frame_distance(src_view, i, tgt_view, j, manhattan));
        out[i] = best == 0.0 ? 0.0 : -best;  // avoid -0.0 in serialized curves
    }
    return out;
}

Eigen::VectorXd combine(const Eigen::VectorXd& raw_rot, const Eigen::VectorXd& raw_loc,
                        double w_rotation, double w_location) {
    if (raw_rot.size() != raw_loc.size())
        throw InputError("combine: curve lengths differ");
    if (w_rotation < 0.0 || w_location < 0.0 || w_rotation + w_location <= 0.0)
        throw InputError("combine: weights must be >= 0 with a positive sum");
    return w_rotation * raw_rot + w_location * raw_loc;
}

Eigen::VectorXd min_max_normalize(const Eigen::VectorXd& combined) {
    if (combined.size() < 1) throw InputError("min_max_normalize: empty input");
    if (!combined.allFinite()) throw InputError("min_max_normalize: non-finite input");
    const double lo = combined.minCoeff();
    const double hi = combined.maxCoeff();
    if (hi > lo) return (combined.array() - lo) / (hi - lo);
    return Eigen::VectorXd::Ones(combined.size());
}

double motion_snr(const Eigen::VectorXd& combined, int kappa) {
    if (kappa < 1) throw InputError("motion_snr: kappa must be >= 1");
    const int f = static_cast<int>(combined.size());
    if (f < 1) throw InputError("motion_snr: empty curve");

    int k = kappa;
    if (2 * k > f) {
        k = std::max(1, f / 2);
        std::cerr << "warning: motion_snr: kappa " << kappa << " clamped to " << k
                  << " for a " << f << "-frame curve\n";
    }

    // Dissimilarity magnitudes, sorted ascending with index tie-break.
    std::vector<int> order(f);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const double da = -combined[a], db = -combined[b];
        if (da != db) return da < db;
        return a < b;
    });

    double bottom = 0.0, top = 0.0;
    for (int i = 0; i < k; ++i) bottom += -combined[order[i]];
    for (int i = f - k; i < f; ++i) top += -combined[order[i]];

    if (bottom == 0.0) return top == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    return top / bottom;
}

std::vector<int> quantize(const Eigen::VectorXd& normalized, int classes) {
    if (classes < 2) throw InputError("quantize: classes must be >= 2");
    std::vector<int> labels(normalized.size());
    for (Eigen::Index i = 0; i < normalized.size(); ++i) {
        const double v = normalized[i];
        if (!(v >= 0.0 && v <= 1.0))
            throw InputError("quantize: value out of [0, 1] at index " + std::to_string(i));
        labels[i] = std::min(static_cast<int>(std::floor(v * classes)), classes - 1);
    }
    return labels;
}

DatasetManifest filter_dataset(const DatasetManifest& manifest,
                               const std::map<std::string, SimilarityCurve>& curves,
                               double threshold) {
    DatasetManifest out = manifest;
    out.snr_threshold = threshold;
    for (auto& entry : out.entries) {
        const auto it = curves.find(entry.id);
        if (it == curves.end())
            throw ConsistencyError("filter_dataset: no curve for manifest id '" + entry.id + "'");
        entry.snr = it->second.snr;
        entry.included = !(*entry.snr < threshold);
    }
    return out;
}

SimilarityCurve build_curve(const EditTriplet& triplet, const SimilarityConfig& config) {
    triplet.validate();
    config.validate();
    if (triplet.source.layout.rotation_dims == 0 || triplet.source.layout.position_dims == 0)
        throw ConfigError("build_curve: layout needs nonzero rotation and position blocks");

    SimilarityCurve c;
    c.raw_rotation = raw_similarity(slice_block(triplet.source, Block::kRotation),
                                    slice_block(triplet.target, Block::kRotation),
                                    config.window, config.metric);
    c.raw_location = raw_similarity(slice_block(triplet.source, Block::kPosition),
                                    slice_block(triplet.target, Block::kPosition),
                                    config.window, config.metric);
    c.combined = combine(c.raw_rotation, c.raw_location, config.w_rotation, config.w_location);
    c.normalized = min_max_normalize(c.combined);
    c.snr = motion_snr(c.combined, config.kappa);
    c.labels = quantize(c.normalized, config.classes);
    return c;
}

}  // namespace medit
