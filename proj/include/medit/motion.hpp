#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "medit/errors.hpp"

namespace medit {

enum class Block { kVelocity, kOrientation, kRotation, kPosition };

const char* block_name(Block b);

// Contiguous column layout of one pose row:
// [velocity | orientation | rotation | position].
struct FeatureLayout {
    int velocity_dims = 3;
    int orientation_dims = 6;
    int rotation_dims = 126;  // 21 joints x 6D rotation
    int position_dims = 72;   // 24 joints x 3

    int total() const { return velocity_dims + orientation_dims + rotation_dims + position_dims; }

    int size(Block b) const;
    int offset(Block b) const;

    void validate() const;  // throws ConfigError

    bool operator==(const FeatureLayout&) const = default;

    static FeatureLayout compact();  // v=3, o=0, r=6, p=6 (D=15) for desk-scale runs
};

struct MotionSequence {
    Eigen::MatrixXd frames;  // F x D
    FeatureLayout layout;
    double frame_rate = 30.0;

    int frame_count() const { return static_cast<int>(frames.rows()); }

    void validate() const;  // throws LayoutError / InputError
};

// Columns of one feature block. Copy is fine by contract.
Eigen::MatrixXd slice_block(const MotionSequence& seq, Block b);

struct EditTriplet {
    std::string id;
    MotionSequence source;
    MotionSequence target;
    std::string instruction;
    std::optional<std::vector<std::uint8_t>> edit_mask;  // per target frame, 0/1

    void validate() const;
};

}  // namespace medit
