#include "medit/motion.hpp"

#include <string>

namespace medit {

const char* block_name(Block b) {
    switch (b) {
        case Block::kVelocity: return "velocity";
        case Block::kOrientation: return "orientation";
        case Block::kRotation: return "rotation";
        case Block::kPosition: return "position";
    }
    return "?";
}

int FeatureLayout::size(Block b) const {
    switch (b) {
        case Block::kVelocity: return velocity_dims;
        case Block::kOrientation: return orientation_dims;
        case Block::kRotation: return rotation_dims;
        case Block::kPosition: return position_dims;
    }
    return 0;
}

int FeatureLayout::offset(Block b) const {
    switch (b) {
        case Block::kVelocity: return 0;
        case Block::kOrientation: return velocity_dims;
        case Block::kRotation: return velocity_dims + orientation_dims;
        case Block::kPosition: return velocity_dims + orientation_dims + rotation_dims;
    }
    return 0;
}

void FeatureLayout::validate() const {
    if (velocity_dims < 0 || orientation_dims < 0 || rotation_dims < 0 || position_dims < 0)
        throw ConfigError("feature layout: block sizes must be >= 0");
    if (total() < 1) throw ConfigError("feature layout: total dimension must be >= 1");
}

FeatureLayout FeatureLayout::compact() { return FeatureLayout{3, 0, 6, 6}; }

void MotionSequence::validate() const {
    layout.validate();
    if (frames.rows() < 1) throw InputError("motion sequence: needs at least one frame");
    if (frames.cols() != layout.total())
        throw LayoutError("motion sequence: frame width " + std::to_string(frames.cols()) +
                          " does not match layout D=" + std::to_string(layout.total()));
    if (!frames.allFinite()) throw InputError("motion sequence: non-finite feature value");
    if (!(frame_rate > 0.0)) throw InputError("motion sequence: frame_rate must be positive");
}

Eigen::MatrixXd slice_block(const MotionSequence& seq, Block b) {
    const int n = seq.layout.size(b);
    if (n == 0)
        throw ConfigError(std::string("slice_block: layout has no ") + block_name(b) + " block");
    return seq.frames.middleCols(seq.layout.offset(b), n);
}

void EditTriplet::validate() const {
    source.validate();
    target.validate();
    if (!(source.layout == target.layout))
        throw LayoutError("edit triplet '" + id + "': source and target layouts differ");
    if (edit_mask && static_cast<int>(edit_mask->size()) != target.frame_count())
        throw LayoutError("edit triplet '" + id + "': edit_mask length " +
                          std::to_string(edit_mask->size()) + " != target frames " +
                          std::to_string(target.frame_count()));
}

}  // namespace medit
