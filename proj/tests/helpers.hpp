#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "medit/motion.hpp"
#include "medit/rng.hpp"

namespace medit::testing {

inline Eigen::MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols,
                                     double scale = 1.0) {
    Eigen::MatrixXd m(rows, cols);
    rng.fill_gaussian(m);
    return scale * m;
}

inline MotionSequence random_motion(Rng& rng, int frames, const FeatureLayout& layout) {
    MotionSequence m;
    m.layout = layout;
    m.frames = random_matrix(rng, frames, layout.total());
    return m;
}

inline EditTriplet random_triplet(Rng& rng, int frames_src, int frames_tgt,
                                  const FeatureLayout& layout, bool with_mask = false) {
    EditTriplet t;
    t.id = "rt_" + std::to_string(rng.next_u64() % 1000000);
    t.source = random_motion(rng, frames_src, layout);
    t.target = random_motion(rng, frames_tgt, layout);
    t.instruction = "wiggle the arms a bit";
    if (with_mask) {
        std::vector<std::uint8_t> mask(static_cast<std::size_t>(frames_tgt));
        for (auto& b : mask) b = rng.uniform() < 0.3 ? 1 : 0;
        t.edit_mask = mask;
    }
    return t;
}

// Independent double-loop oracle for the windowed raw similarity.
inline Eigen::VectorXd brute_force_raw_similarity(const Eigen::MatrixXd& src,
                                                  const Eigen::MatrixXd& tgt, int window) {
    const auto f_src = src.rows();
    const auto f_tgt = tgt.rows();
    Eigen::VectorXd out(f_src);
    for (Eigen::Index i = 0; i < f_src; ++i) {
        Eigen::Index lo = i - window, hi = i + window;
        if (lo < 0) lo = 0;
        if (lo > f_tgt - 1) lo = f_tgt - 1;
        if (hi < 0) hi = 0;
        if (hi > f_tgt - 1) hi = f_tgt - 1;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = lo; j <= hi; ++j) {
            double sq = 0.0;
            for (Eigen::Index c = 0; c < src.cols(); ++c) {
                const double d = src(i, c) - tgt(j, c);
                sq += d * d;
            }
            best = std::min(best, std::sqrt(sq));
        }
        out[i] = best == 0.0 ? 0.0 : -best;
    }
    return out;
}

// Direct evaluation of the min-max normalization.
inline Eigen::VectorXd brute_force_normalize(const Eigen::VectorXd& v) {
    double lo = v[0], hi = v[0];
    for (Eigen::Index i = 1; i < v.size(); ++i) {
        lo = std::min(lo, v[i]);
        hi = std::max(hi, v[i]);
    }
    Eigen::VectorXd out(v.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out[i] = hi > lo ? (v[i] - lo) / (hi - lo) : 1.0;
    return out;
}

// Direct evaluation of the interval quantizer.
inline std::vector<int> brute_force_quantize(const Eigen::VectorXd& v, int classes) {
    std::vector<int> out(static_cast<std::size_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        int label = classes - 1;
        for (int k = 0; k < classes - 1; ++k) {
            const double upper = static_cast<double>(k + 1) / classes;
            if (v[i] < upper) {
                label = k;
                break;
            }
        }
        out[static_cast<std::size_t>(i)] = label;
    }
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) {
        path = std::filesystem::temp_directory_path() / ("medit_" + name);
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace medit::testing
