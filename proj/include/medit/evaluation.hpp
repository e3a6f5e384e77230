#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "medit/motion.hpp"

namespace medit {

using Featurizer = std::function<Eigen::VectorXd(const MotionSequence&)>;

// Statistical default featurizer: per-dimension mean, standard deviation, and
// mean absolute frame-to-frame delta, concatenated in block order. This is the
// pluggable stand-in for an external pretrained motion embedder.
Eigen::VectorXd stat_features(const MotionSequence& motion);

struct RetrievalReport {
    std::map<int, double> r_at;  // k in {1,2,3} -> percentage
    double avg_rank = 0.0;
    int batch_size = 0;
    std::string scope;  // "batch" | "full_set"
};

// Ranks each generated motion's true target among the candidates of its batch
// by descending cosine similarity of features. Ties break by candidate
// position after a seeded shuffle.
RetrievalReport retrieval_metrics(const std::vector<MotionSequence>& generated,
                                  const std::vector<MotionSequence>& targets,
                                  const std::string& scope, int batch_size,
                                  const Featurizer& featurizer, std::uint64_t seed);

// Mean per-frame Euclidean distance on the position block. Motions of unequal
// length are truncated to the common prefix when allowed; `truncated` reports
// whether that happened.
double l2_distance(const MotionSequence& generated, const MotionSequence& target,
                   bool allow_truncation = true, bool* truncated = nullptr);

// Frechet distance between Gaussians fit to the feature vectors of each set,
// with a small diagonal regularizer before the matrix square root.
double fid_like(const std::vector<MotionSequence>& generated_set,
                const std::vector<MotionSequence>& reference_set, const Featurizer& featurizer);

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace medit
