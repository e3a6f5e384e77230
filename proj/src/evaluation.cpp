#include "medit/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "medit/rng.hpp"

namespace medit {

Eigen::VectorXd stat_features(const MotionSequence& motion) {
    const Eigen::MatrixXd& m = motion.frames;
    const Eigen::Index d = m.cols();
    const Eigen::Index f = m.rows();
    Eigen::VectorXd out(3 * d);
    for (Eigen::Index c = 0; c < d; ++c) {
        const double mean = m.col(c).mean();
        const double var = (m.col(c).array() - mean).square().sum() / static_cast<double>(f);
        out[c] = mean;
        out[d + c] = std::sqrt(var);
        double delta = 0.0;
        if (f > 1) {
            for (Eigen::Index r = 1; r < f; ++r) delta += std::abs(m(r, c) - m(r - 1, c));
            delta /= static_cast<double>(f - 1);
        }
        out[2 * d + c] = delta;
    }
    return out;
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 && nb == 0.0) return 1.0;
    if (na == 0.0 || nb == 0.0) return 0.0;
    return a.dot(b) / (na * nb);
}

RetrievalReport retrieval_metrics(const std::vector<MotionSequence>& generated,
                                  const std::vector<MotionSequence>& targets,
                                  const std::string& scope, int batch_size,
                                  const Featurizer& featurizer, std::uint64_t seed) {
    if (generated.empty() || generated.size() != targets.size())
        throw InputError("retrieval_metrics: lists must be non-empty and aligned");
    if (scope != "batch" && scope != "full_set")
        throw InputError("retrieval_metrics: scope must be 'batch' or 'full_set'");
    const int n = static_cast<int>(generated.size());
    int group_size = scope == "batch" ? batch_size : n;
    if (group_size < 1) throw InputError("retrieval_metrics: batch_size must be >= 1");
    if (scope == "batch" && batch_size > n)
        throw InputError("retrieval_metrics: batch_size exceeds the list length");

    std::vector<Eigen::VectorXd> gen_feat(generated.size()), tgt_feat(targets.size());
    for (int i = 0; i < n; ++i) {
        gen_feat[static_cast<std::size_t>(i)] = featurizer(generated[static_cast<std::size_t>(i)]);
        tgt_feat[static_cast<std::size_t>(i)] = featurizer(targets[static_cast<std::size_t>(i)]);
    }

    Rng rng = Rng::substream(seed, "retrieval_batches");
    const std::vector<int> order = rng.permutation(n);

    double rank_sum = 0.0;
    std::map<int, int> hits{{1, 0}, {2, 0}, {3, 0}};
    for (int start = 0; start < n; start += group_size) {
        const int count = std::min(group_size, n - start);
        for (int qi = 0; qi < count; ++qi) {
            const int query = order[static_cast<std::size_t>(start + qi)];
            const Eigen::VectorXd& qf = gen_feat[static_cast<std::size_t>(query)];
            const double self_sim = cosine_similarity(qf, tgt_feat[static_cast<std::size_t>(query)]);
            // Candidates appear in shuffled order; earlier position wins ties.
            int rank = 1;
            for (int ci = 0; ci < count; ++ci) {
                const int cand = order[static_cast<std::size_t>(start + ci)];
                if (cand == query) continue;
                const double sim = cosine_similarity(qf, tgt_feat[static_cast<std::size_t>(cand)]);
                if (sim > self_sim || (sim == self_sim && ci < qi)) ++rank;
            }
            rank_sum += rank;
            for (auto& [k, count_k] : hits)
                if (rank <= k) ++count_k;
        }
    }

    RetrievalReport report;
    report.scope = scope;
    report.batch_size = group_size;
    report.avg_rank = rank_sum / n;
    for (const auto& [k, count_k] : hits)
        report.r_at[k] = 100.0 * static_cast<double>(count_k) / n;
    return report;
}

double l2_distance(const MotionSequence& generated, const MotionSequence& target,
                   bool allow_truncation, bool* truncated) {
    if (!(generated.layout == target.layout))
        throw LayoutError("l2_distance: layouts differ");
    if (generated.layout.position_dims == 0)
        throw ConfigError("l2_distance: layout has no position block");
    const int fg = generated.frame_count();
    const int ft = target.frame_count();
    if (truncated != nullptr) *truncated = fg != ft;
    if (fg != ft && !allow_truncation)
        throw InputError("l2_distance: lengths differ and truncation is disabled");
    const int f = std::min(fg, ft);

    const Eigen::MatrixXd gp = slice_block(generated, Block::kPosition).topRows(f);
    const Eigen::MatrixXd tp = slice_block(target, Block::kPosition).topRows(f);
    double sum = 0.0;
    for (int i = 0; i < f; ++i) sum += (gp.row(i) - tp.row(i)).norm();
    return sum / f;
}

namespace {

void fit_gaussian(const std::vector<MotionSequence>& set, const Featurizer& featurizer,
                  Eigen::VectorXd& mu, Eigen::MatrixXd& sigma) {
    const int n = static_cast<int>(set.size());
    const Eigen::VectorXd first = featurizer(set[0]);
    const Eigen::Index d = first.size();
    Eigen::MatrixXd feats(n, d);
    feats.row(0) = first.transpose();
    for (int i = 1; i < n; ++i) feats.row(i) = featurizer(set[static_cast<std::size_t>(i)]).transpose();
    mu = feats.colwise().mean();
    const Eigen::MatrixXd centered = feats.rowwise() - mu.transpose();
    sigma = centered.transpose() * centered / static_cast<double>(n - 1);
}

// Symmetric PSD square root via eigendecomposition; negative eigenvalues from
// roundoff clamp to zero.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    if (solver.info() != Eigen::Success)
        throw NumericalError("fid_like: eigendecomposition failed");
    Eigen::VectorXd vals = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return solver.eigenvectors() * vals.asDiagonal() * solver.eigenvectors().transpose();
}

}  // namespace

double fid_like(const std::vector<MotionSequence>& generated_set,
                const std::vector<MotionSequence>& reference_set, const Featurizer& featurizer) {
    if (generated_set.size() < 2 || reference_set.size() < 2)
        throw InputError("fid_like: each set needs at least two items");

    Eigen::VectorXd mu1, mu2;
    Eigen::MatrixXd sigma1, sigma2;
    fit_gaussian(generated_set, featurizer, mu1, sigma1);
    fit_gaussian(reference_set, featurizer, mu2, sigma2);
    if (mu1.size() != mu2.size()) throw InputError("fid_like: feature dimensions differ");

    constexpr double kReg = 1e-6;
    const Eigen::Index d = mu1.size();
    sigma1 += kReg * Eigen::MatrixXd::Identity(d, d);
    sigma2 += kReg * Eigen::MatrixXd::Identity(d, d);

    // tr((S1 S2)^(1/2)) = tr((sqrt(S1) S2 sqrt(S1))^(1/2)), the inner matrix
    // being symmetric PSD.
    const Eigen::MatrixXd root1 = psd_sqrt(sigma1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(root1 * sigma2 * root1);
    if (solver.info() != Eigen::Success)
        throw NumericalError("fid_like: covariance square root failed");
    const double tr_sqrt = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();

    const double value =
        (mu1 - mu2).squaredNorm() + sigma1.trace() + sigma2.trace() - 2.0 * tr_sqrt;
    if (!std::isfinite(value)) throw NumericalError("fid_like: non-finite result");
    return std::max(0.0, value);
}

}  // namespace medit
