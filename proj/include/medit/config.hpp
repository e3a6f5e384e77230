#pragma once

#include <cstdint>
#include <string>

#include "medit/diffusion.hpp"
#include "medit/model.hpp"
#include "medit/motion.hpp"
#include "medit/similarity.hpp"
#include "medit/synth.hpp"
#include "medit/text_encoder.hpp"

namespace medit {

// Merged configuration for every pipeline stage. Serialized as sorted
// "key = value" lines; the canonical text feeds the config hash embedded in
// every output artifact.
struct RunConfig {
    // global
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    int workers = 1;

    // data.* (synthetic dataset)
    int data_n_triplets = 500;
    int data_frames = 32;
    FeatureLayout data_layout = FeatureLayout::compact();
    std::string data_edit_kinds = "amplitude,speed,freeze,mirror,phase";
    double data_magnitude = 1.0;
    double data_frame_rate = 30.0;
    double data_split_train = 0.8;
    double data_split_val = 0.1;
    double data_split_test = 0.1;

    // sim.*
    SimilarityConfig sim;

    // text.*
    std::string text_encoder_kind = "stub";
    int text_embed_dim = 512;
    int text_max_tokens = 77;
    int text_codebook_size = 4096;
    std::string text_sidecar;

    // model.*
    int model_latent_dim = 512;
    int model_cond_layers = 4;
    int model_diff_layers = 8;
    int model_heads = 8;
    int model_ffn_mult = 4;
    int model_max_frames = 300;
    double model_dropout = 0.0;
    bool model_use_positional = true;

    // diffusion.* / guidance.*
    int diffusion_steps = 300;
    GuidanceConfig guidance;

    // train.*
    int train_steps = 2000;
    int train_batch_size = 128;
    double train_lr = 1e-4;
    double train_weight_decay = 1e-2;
    double train_grad_clip = 1.0;
    double train_aux_weight = 1.0;
    bool train_aux_enabled = true;
    bool train_timing = false;
    int train_log_every = 1;

    // eval.*
    int eval_batch_size = 32;
    std::string eval_scope = "batch";
    bool eval_allow_truncation = true;

    void set(const std::string& key, const std::string& value);  // throws ConfigError
    std::string get(const std::string& key) const;               // throws ConfigError
    void load_file(const std::string& path);                     // key = value lines
    std::string to_text() const;  // canonical form, sorted keys
    std::string hash() const;     // 16 hex digits over to_text()
    void validate() const;

    // derived module configurations
    ModelConfig model_config() const;
    TextEncoderConfig text_config() const;
    SynthSpec synth_spec() const;
    SplitRatios split_ratios() const;
};

}  // namespace medit
