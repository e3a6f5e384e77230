#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "medit/errors.hpp"

namespace medit {

struct TextFeatures {
    Eigen::MatrixXd tokens;  // token_count x embed_dim, never padded
    Eigen::VectorXd pooled;  // mean over token rows
    int token_count = 0;
};

struct TextEncoderConfig {
    std::string kind = "stub";  // stub | external
    int embed_dim = 512;
    int max_tokens = 77;
    int codebook_size = 4096;
    std::uint64_t seed = 0;
    std::string sidecar_path;  // external encoder: JSON file of precomputed features

    void validate() const;
};

class TextEncoder {
public:
    virtual ~TextEncoder() = default;

    // `id` keys external sidecar lookups; the stub ignores it.
    virtual TextFeatures encode(std::string_view id, std::string_view instruction) const = 0;

    TextFeatures encode(std::string_view instruction) const { return encode("", instruction); }

    virtual int embed_dim() const = 0;
};

// Deterministic desk-scale default: lowercase whitespace tokenization, each
// token hashed into a fixed seeded Gaussian codebook. Row 0 is the null token
// used for empty instructions.
class HashedStubEncoder : public TextEncoder {
public:
    explicit HashedStubEncoder(const TextEncoderConfig& config);

    TextFeatures encode(std::string_view id, std::string_view instruction) const override;
    int embed_dim() const override { return static_cast<int>(codebook_.cols()); }

private:
    Eigen::MatrixXd codebook_;  // codebook_size x embed_dim
    int max_tokens_;
};

// Reads precomputed per-token features from a sidecar JSON file keyed by
// triplet id (falling back to the raw instruction string).
class SidecarEncoder : public TextEncoder {
public:
    explicit SidecarEncoder(const TextEncoderConfig& config);

    TextFeatures encode(std::string_view id, std::string_view instruction) const override;
    int embed_dim() const override { return embed_dim_; }

private:
    struct Impl;
    std::shared_ptr<const Impl> impl_;
    int embed_dim_ = 0;
};

std::unique_ptr<TextEncoder> make_text_encoder(const TextEncoderConfig& config);

}  // namespace medit
