#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "medit/motion.hpp"
#include "medit/nn/tape.hpp"
#include "medit/text_encoder.hpp"

namespace medit {

struct ModelConfig {
    int latent_dim = 512;
    int cond_layers = 4;
    int diff_layers = 8;
    int heads = 8;
    int classes = 3;      // K, similarity classes
    int feature_dim = 207;  // D
    int text_dim = 512;     // text-token embedding width fed to the condition transformer
    int max_frames = 300;
    int max_tokens = 77;
    int ffn_mult = 4;
    double dropout = 0.0;
    bool use_positional = true;

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

enum class ParamGroup : int {
    kCondition = 0,       // condition transformer (incl. null tokens, projections)
    kDiffusion = 1,       // diffusion transformer (incl. timestep/text conditioning MLPs)
    kSimilarityHead = 2,  // K-way linear head on enhanced motion rows
};

namespace layers {

struct LinearP {
    nn::Parameter* w = nullptr;  // in x out
    nn::Parameter* b = nullptr;  // 1 x out
};

struct LayerNormP {
    nn::Parameter* gamma = nullptr;  // 1 x dim
    nn::Parameter* beta = nullptr;   // 1 x dim
};

struct AttentionP {
    LinearP q, k, v, o;
};

// Pre-LN transformer encoder layer.
struct EncoderLayerP {
    LayerNormP ln1;
    AttentionP attn;
    LayerNormP ln2;
    LinearP ffn1, ffn2;
};

// DiT block: non-affine LayerNorms modulated by shift/scale/gate regressed
// from the conditioning vector; gates start at zero.
struct DiTLayerP {
    AttentionP attn;
    LinearP ffn1, ffn2;
    LinearP adaln;  // latent -> 6 x latent, zero-initialized
};

}  // namespace layers

// All learnable state of both transformers plus the configuration that built
// it. Parameters live in `store` in a fixed creation order; the named members
// point into it.
struct ModelBundle {
    ModelConfig config;
    nn::ParamStore store;

    // condition transformer
    layers::LinearP motion_proj, text_proj;
    nn::Parameter* null_text = nullptr;    // 1 x latent, replaces dropped text
    nn::Parameter* null_source = nullptr;  // 1 x latent, replaces dropped source
    nn::Parameter* seg_motion = nullptr;
    nn::Parameter* seg_text = nullptr;
    nn::Parameter* pos_motion = nullptr;  // max_frames x latent
    nn::Parameter* pos_text = nullptr;    // max_tokens x latent
    std::vector<layers::EncoderLayerP> cond_blocks;
    layers::LayerNormP cond_final_ln;
    layers::LinearP sim_head;

    // diffusion transformer
    layers::LinearP noised_proj;
    nn::Parameter* seg_enhanced = nullptr;
    nn::Parameter* seg_noised = nullptr;
    nn::Parameter* pos_enhanced = nullptr;
    nn::Parameter* pos_noised = nullptr;
    layers::LinearP t_mlp1, t_mlp2;     // sinusoidal timestep embedding -> conditioning vector
    layers::LinearP text_cond_proj;     // pooled enhanced text -> conditioning vector
    std::vector<layers::DiTLayerP> diff_blocks;
    layers::LayerNormP diff_final_ln;
    layers::LinearP out_proj;

    ModelBundle() = default;
    ModelBundle(const ModelBundle&) = delete;
    ModelBundle(ModelBundle&&) = default;
    ModelBundle& operator=(ModelBundle&&) = default;

    std::vector<nn::Parameter*> group_params(ParamGroup g);
};

ModelBundle make_bundle(const ModelConfig& config, std::uint64_t seed);

// Adds N(0, stddev) noise to every parameter; test helper for gradient-flow
// checks, where zero-initialized gates would otherwise block gradients.
void randomize_parameters(ModelBundle& bundle, double stddev, Rng& rng);

struct ForwardOptions {
    bool ablate_residual_branches = false;  // drop every attention/FFN branch (test hook)
    Rng* dropout_rng = nullptr;             // enables config.dropout when set
};

// Tape-level handles used to stitch the two transformers into one graph.
struct CondVars {
    nn::Var enhanced_motion;    // F x latent (1 x latent when source dropped)
    nn::Var text_tokens;        // L x latent
    nn::Var pooled_text;        // 1 x latent
    nn::Var similarity_logits;  // F x classes
};

// Condition transformer: projects source frames and text tokens into the
// latent space, mixes them with full self-attention, and reads out enhanced
// features plus per-frame similarity logits. Sequences are processed one item
// at a time and never padded. use_source/use_text realize condition dropout
// by substituting the learned null embeddings.
CondVars condition_forward_tape(nn::Tape& tape, const Eigen::MatrixXd* source_frames,
                                const TextFeatures* text, bool use_source, bool use_text,
                                ModelBundle& bundle, const ForwardOptions& options = {});

// Diffusion transformer: noised edited motion concatenated with the enhanced
// source features along the sequence axis; AdaLN modulation from the timestep
// embedding plus pooled enhanced text; output projection read at the noised
// positions. Predicts the clean motion M_0.
nn::Var diffusion_forward_tape(nn::Tape& tape, nn::Var noised, int timestep, int total_steps,
                               const CondVars& cond, ModelBundle& bundle,
                               const ForwardOptions& options = {});

// Value-level results for inference and tests.
struct ConditionOutput {
    Eigen::MatrixXd enhanced_motion;      // F x latent
    Eigen::MatrixXd enhanced_text_tokens; // L x latent
    Eigen::VectorXd enhanced_text_pooled; // latent
    Eigen::MatrixXd similarity_logits;    // F x classes
};

ConditionOutput condition_forward(const MotionSequence& source, const TextFeatures& text,
                                  ModelBundle& bundle, const ForwardOptions& options = {});

// Condition-dropout variant; null embeddings stand in for dropped inputs.
ConditionOutput condition_forward_dropped(const MotionSequence* source, const TextFeatures* text,
                                          ModelBundle& bundle, const ForwardOptions& options = {});

Eigen::MatrixXd diffusion_forward(const Eigen::MatrixXd& noised, int timestep, int total_steps,
                                  const ConditionOutput& cond, ModelBundle& bundle,
                                  const ForwardOptions& options = {});

// Re-wraps value-level condition outputs as tape constants (inference path).
CondVars cond_constants(nn::Tape& tape, const ConditionOutput& cond);

// Sinusoidal timestep embedding, 1 x dim.
Eigen::MatrixXd timestep_embedding(int timestep, int dim);

}  // namespace medit
