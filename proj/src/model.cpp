#include "medit/model.hpp"

#include <array>
#include <cmath>
#include <string>

namespace medit {

using nn::Mat;
using nn::Tape;
using nn::Var;

void ModelConfig::validate() const {
    if (latent_dim < 2 || latent_dim % 2 != 0)
        throw ConfigError("model config: latent_dim must be a positive even number");
    if (heads < 1 || latent_dim % heads != 0)
        throw ConfigError("model config: latent_dim must be divisible by heads");
    if (cond_layers < 1 || diff_layers < 1)
        throw ConfigError("model config: both transformers need at least one layer");
    if (classes < 2) throw ConfigError("model config: classes must be >= 2");
    if (feature_dim < 1) throw ConfigError("model config: feature_dim must be >= 1");
    if (text_dim < 1) throw ConfigError("model config: text_dim must be >= 1");
    if (max_frames < 1 || max_tokens < 1)
        throw ConfigError("model config: max_frames and max_tokens must be >= 1");
    if (ffn_mult < 1) throw ConfigError("model config: ffn_mult must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0)
        throw ConfigError("model config: dropout must be in [0, 1)");
}

namespace {

constexpr double kInitStd = 0.02;

void init_normal(nn::Parameter& p, Rng& rng, double stddev = kInitStd) {
    rng.fill_gaussian(p.value);
    p.value *= stddev;
}

layers::LinearP make_linear(nn::ParamStore& store, const std::string& name, int in, int out,
                            ParamGroup g, Rng& rng, bool zero_init = false) {
    layers::LinearP l;
    l.w = &store.create(name + ".w", in, out, static_cast<int>(g));
    l.b = &store.create(name + ".b", 1, out, static_cast<int>(g));
    if (!zero_init) init_normal(*l.w, rng);
    return l;
}

layers::LayerNormP make_layer_norm(nn::ParamStore& store, const std::string& name, int dim,
                                   ParamGroup g) {
    layers::LayerNormP ln;
    ln.gamma = &store.create(name + ".gamma", 1, dim, static_cast<int>(g));
    ln.beta = &store.create(name + ".beta", 1, dim, static_cast<int>(g));
    ln.gamma->value.setOnes();
    return ln;
}

layers::AttentionP make_attention(nn::ParamStore& store, const std::string& name, int dim,
                                  ParamGroup g, Rng& rng) {
    layers::AttentionP a;
    a.q = make_linear(store, name + ".q", dim, dim, g, rng);
    a.k = make_linear(store, name + ".k", dim, dim, g, rng);
    a.v = make_linear(store, name + ".v", dim, dim, g, rng);
    a.o = make_linear(store, name + ".o", dim, dim, g, rng);
    return a;
}

Var linear(Tape& t, Var x, const layers::LinearP& l) {
    return t.add_rows(t.matmul(x, t.leaf(*l.w)), t.leaf(*l.b));
}

Var layer_norm_affine(Tape& t, Var x, const layers::LayerNormP& ln) {
    return t.add_rows(t.scale_rows(t.layer_norm_rows(x), t.leaf(*ln.gamma)), t.leaf(*ln.beta));
}

Var self_attention(Tape& t, Var x, const layers::AttentionP& a, int heads) {
    const int dim = static_cast<int>(t.val(x).cols());
    const int head_dim = dim / heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));

    Var q = linear(t, x, a.q);
    Var k = linear(t, x, a.k);
    Var v = linear(t, x, a.v);

    std::vector<Var> head_outputs;
    head_outputs.reserve(static_cast<std::size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        Var qh = t.slice_cols(q, h * head_dim, head_dim);
        Var kh = t.slice_cols(k, h * head_dim, head_dim);
        Var vh = t.slice_cols(v, h * head_dim, head_dim);
        Var scores = t.scale(t.matmul(qh, t.transpose(kh)), inv_sqrt);
        Var attn = t.softmax_rows(scores);
        head_outputs.push_back(t.matmul(attn, vh));
    }
    Var merged = heads == 1 ? head_outputs[0] : t.concat_cols(head_outputs);
    return linear(t, merged, a.o);
}

Var maybe_dropout(Tape& t, Var x, const ModelBundle& b, const ForwardOptions& o) {
    if (o.dropout_rng == nullptr || b.config.dropout <= 0.0) return x;
    return t.dropout(x, b.config.dropout, *o.dropout_rng);
}

Var encoder_block(Tape& t, Var x, const layers::EncoderLayerP& lp, ModelBundle& b,
                  const ForwardOptions& o) {
    if (o.ablate_residual_branches) return x;
    Var attn = self_attention(t, layer_norm_affine(t, x, lp.ln1), lp.attn, b.config.heads);
    x = t.add(x, maybe_dropout(t, attn, b, o));
    Var h = linear(t, t.gelu(linear(t, layer_norm_affine(t, x, lp.ln2), lp.ffn1)), lp.ffn2);
    return t.add(x, maybe_dropout(t, h, b, o));
}

Var modulate(Tape& t, Var x, Var shift, Var scale_delta, Var ones) {
    return t.add_rows(t.scale_rows(t.layer_norm_rows(x), t.add(ones, scale_delta)), shift);
}

Var dit_block(Tape& t, Var x, Var cond_vec, const layers::DiTLayerP& lp, ModelBundle& b,
              const ForwardOptions& o) {
    if (o.ablate_residual_branches) return x;
    const int dim = b.config.latent_dim;
    Var mod = linear(t, t.silu(cond_vec), lp.adaln);  // 1 x 6*dim
    auto piece = [&](int i) { return t.slice_cols(mod, i * dim, dim); };
    Var shift1 = piece(0), scale1 = piece(1), gate1 = piece(2);
    Var shift2 = piece(3), scale2 = piece(4), gate2 = piece(5);
    Var ones = t.constant(Mat::Ones(1, dim));

    Var attn = self_attention(t, modulate(t, x, shift1, scale1, ones), lp.attn, b.config.heads);
    x = t.add(x, t.scale_rows(maybe_dropout(t, attn, b, o), gate1));
    Var h = linear(t, t.gelu(linear(t, modulate(t, x, shift2, scale2, ones), lp.ffn1)), lp.ffn2);
    return t.add(x, t.scale_rows(maybe_dropout(t, h, b, o), gate2));
}

Var with_stream_embeddings(Tape& t, Var x, nn::Parameter& seg, nn::Parameter& pos,
                           ModelBundle& b) {
    x = t.add_rows(x, t.leaf(seg));
    if (b.config.use_positional) {
        const Eigen::Index n = t.val(x).rows();
        x = t.add(x, t.slice_rows(t.leaf(pos), 0, n));
    }
    return x;
}

}  // namespace

std::vector<nn::Parameter*> ModelBundle::group_params(ParamGroup g) {
    std::vector<nn::Parameter*> out;
    for (std::size_t i = 0; i < store.size(); ++i)
        if (store[i].group == static_cast<int>(g)) out.push_back(&store[i]);
    return out;
}

ModelBundle make_bundle(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    ModelBundle b;
    b.config = config;
    Rng rng = Rng::substream(seed, "model_init");
    auto& s = b.store;
    const int h = config.latent_dim;
    constexpr auto kCond = ParamGroup::kCondition;
    constexpr auto kDiff = ParamGroup::kDiffusion;

    b.motion_proj = make_linear(s, "cond.motion_proj", config.feature_dim, h, kCond, rng);
    b.text_proj = make_linear(s, "cond.text_proj", config.text_dim, h, kCond, rng);
    b.null_text = &s.create("cond.null_text", 1, h, static_cast<int>(kCond));
    b.null_source = &s.create("cond.null_source", 1, h, static_cast<int>(kCond));
    init_normal(*b.null_text, rng);
    init_normal(*b.null_source, rng);
    b.seg_motion = &s.create("cond.seg_motion", 1, h, static_cast<int>(kCond));
    b.seg_text = &s.create("cond.seg_text", 1, h, static_cast<int>(kCond));
    init_normal(*b.seg_motion, rng);
    init_normal(*b.seg_text, rng);
    b.pos_motion = &s.create("cond.pos_motion", config.max_frames, h, static_cast<int>(kCond));
    b.pos_text = &s.create("cond.pos_text", config.max_tokens, h, static_cast<int>(kCond));
    init_normal(*b.pos_motion, rng);
    init_normal(*b.pos_text, rng);

    for (int i = 0; i < config.cond_layers; ++i) {
        const std::string base = "cond.layer" + std::to_string(i);
        layers::EncoderLayerP lp;
        lp.ln1 = make_layer_norm(s, base + ".ln1", h, kCond);
        lp.attn = make_attention(s, base + ".attn", h, kCond, rng);
        lp.ln2 = make_layer_norm(s, base + ".ln2", h, kCond);
        lp.ffn1 = make_linear(s, base + ".ffn1", h, h * config.ffn_mult, kCond, rng);
        lp.ffn2 = make_linear(s, base + ".ffn2", h * config.ffn_mult, h, kCond, rng);
        b.cond_blocks.push_back(lp);
    }
    b.cond_final_ln = make_layer_norm(s, "cond.final_ln", h, kCond);
    b.sim_head = make_linear(s, "head.similarity", h, config.classes,
                             ParamGroup::kSimilarityHead, rng);

    b.noised_proj = make_linear(s, "diff.noised_proj", config.feature_dim, h, kDiff, rng);
    b.seg_enhanced = &s.create("diff.seg_enhanced", 1, h, static_cast<int>(kDiff));
    b.seg_noised = &s.create("diff.seg_noised", 1, h, static_cast<int>(kDiff));
    init_normal(*b.seg_enhanced, rng);
    init_normal(*b.seg_noised, rng);
    b.pos_enhanced = &s.create("diff.pos_enhanced", config.max_frames, h, static_cast<int>(kDiff));
    b.pos_noised = &s.create("diff.pos_noised", config.max_frames, h, static_cast<int>(kDiff));
    init_normal(*b.pos_enhanced, rng);
    init_normal(*b.pos_noised, rng);
    b.t_mlp1 = make_linear(s, "diff.t_mlp1", h, h, kDiff, rng);
    b.t_mlp2 = make_linear(s, "diff.t_mlp2", h, h, kDiff, rng);
    b.text_cond_proj = make_linear(s, "diff.text_cond", h, h, kDiff, rng);

    for (int i = 0; i < config.diff_layers; ++i) {
        const std::string base = "diff.layer" + std::to_string(i);
        layers::DiTLayerP lp;
        lp.attn = make_attention(s, base + ".attn", h, kDiff, rng);
        lp.ffn1 = make_linear(s, base + ".ffn1", h, h * config.ffn_mult, kDiff, rng);
        lp.ffn2 = make_linear(s, base + ".ffn2", h * config.ffn_mult, h, kDiff, rng);
        // AdaLN-Zero: modulation weights and bias start at exactly zero.
        lp.adaln = make_linear(s, base + ".adaln", h, 6 * h, kDiff, rng, /*zero_init=*/true);
        b.diff_blocks.push_back(lp);
    }
    b.diff_final_ln = make_layer_norm(s, "diff.final_ln", h, kDiff);
    b.out_proj = make_linear(s, "diff.out_proj", h, config.feature_dim, kDiff, rng);

    return b;
}

void randomize_parameters(ModelBundle& bundle, double stddev, Rng& rng) {
    for (std::size_t i = 0; i < bundle.store.size(); ++i) {
        nn::Parameter& p = bundle.store[i];
        Mat noise(p.value.rows(), p.value.cols());
        rng.fill_gaussian(noise);
        p.value += stddev * noise;
    }
}

Eigen::MatrixXd timestep_embedding(int timestep, int dim) {
    Mat emb(1, dim);
    const int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        const double freq = std::exp(-std::log(10000.0) * i / half);
        emb(0, i) = std::cos(timestep * freq);
        emb(0, half + i) = std::sin(timestep * freq);
    }
    return emb;
}

CondVars condition_forward_tape(Tape& t, const Eigen::MatrixXd* source_frames,
                                const TextFeatures* text, bool use_source, bool use_text,
                                ModelBundle& b, const ForwardOptions& o) {
    const ModelConfig& cfg = b.config;
    if (use_source) {
        if (source_frames == nullptr) throw InputError("condition_forward: missing source");
        if (source_frames->rows() > cfg.max_frames)
            throw CapacityError("condition_forward: source exceeds max_frames");
        if (source_frames->cols() != cfg.feature_dim)
            throw LayoutError("condition_forward: source feature width != model feature_dim");
    }
    if (use_text) {
        if (text == nullptr) throw InputError("condition_forward: missing text features");
        if (text->tokens.rows() > cfg.max_tokens)
            throw CapacityError("condition_forward: text exceeds max_tokens");
        if (text->tokens.cols() != cfg.text_dim)
            throw LayoutError("condition_forward: text embedding width != model text_dim");
    }

    Var motion = use_source ? linear(t, t.constant(*source_frames), b.motion_proj)
                            : t.leaf(*b.null_source);
    motion = with_stream_embeddings(t, motion, *b.seg_motion, *b.pos_motion, b);

    Var tokens = use_text ? linear(t, t.constant(text->tokens), b.text_proj)
                          : t.leaf(*b.null_text);
    tokens = with_stream_embeddings(t, tokens, *b.seg_text, *b.pos_text, b);

    const Eigen::Index motion_rows = t.val(motion).rows();
    const Eigen::Index text_rows = t.val(tokens).rows();
    std::array<Var, 2> streams{motion, tokens};
    Var x = t.concat_rows(streams);
    for (const auto& block : b.cond_blocks) x = encoder_block(t, x, block, b, o);
    x = layer_norm_affine(t, x, b.cond_final_ln);

    CondVars out;
    out.enhanced_motion = t.slice_rows(x, 0, motion_rows);
    out.text_tokens = t.slice_rows(x, motion_rows, text_rows);
    out.pooled_text = t.mean_rows(out.text_tokens);
    out.similarity_logits = linear(t, out.enhanced_motion, b.sim_head);
    return out;
}

Var diffusion_forward_tape(Tape& t, Var noised, int timestep, int total_steps,
                           const CondVars& cond, ModelBundle& b, const ForwardOptions& o) {
    const ModelConfig& cfg = b.config;
    if (timestep < 0 || timestep >= total_steps)
        throw InputError("diffusion_forward: timestep out of range");
    const Eigen::Index noised_rows = t.val(noised).rows();
    if (noised_rows > cfg.max_frames)
        throw CapacityError("diffusion_forward: noised motion exceeds max_frames");
    if (t.val(noised).cols() != cfg.feature_dim)
        throw LayoutError("diffusion_forward: noised feature width != model feature_dim");

    Var enhanced = with_stream_embeddings(t, cond.enhanced_motion, *b.seg_enhanced,
                                          *b.pos_enhanced, b);
    Var noised_lat = with_stream_embeddings(t, linear(t, noised, b.noised_proj), *b.seg_noised,
                                            *b.pos_noised, b);
    const Eigen::Index enhanced_rows = t.val(enhanced).rows();
    std::array<Var, 2> streams{enhanced, noised_lat};
    Var x = t.concat_rows(streams);

    Var t_emb = t.constant(timestep_embedding(timestep, cfg.latent_dim));
    Var cond_vec = t.add(linear(t, t.silu(linear(t, t_emb, b.t_mlp1)), b.t_mlp2),
                         linear(t, cond.pooled_text, b.text_cond_proj));

    for (const auto& block : b.diff_blocks) x = dit_block(t, x, cond_vec, block, b, o);
    x = layer_norm_affine(t, x, b.diff_final_ln);
    return linear(t, t.slice_rows(x, enhanced_rows, noised_rows), b.out_proj);
}

ConditionOutput condition_forward(const MotionSequence& source, const TextFeatures& text,
                                  ModelBundle& bundle, const ForwardOptions& options) {
    source.validate();
    return condition_forward_dropped(&source, &text, bundle, options);
}

ConditionOutput condition_forward_dropped(const MotionSequence* source, const TextFeatures* text,
                                          ModelBundle& bundle, const ForwardOptions& options) {
    Tape tape;
    const Eigen::MatrixXd* frames = source != nullptr ? &source->frames : nullptr;
    CondVars vars = condition_forward_tape(tape, frames, text, source != nullptr,
                                           text != nullptr, bundle, options);
    ConditionOutput out;
    out.enhanced_motion = tape.val(vars.enhanced_motion);
    out.enhanced_text_tokens = tape.val(vars.text_tokens);
    out.enhanced_text_pooled = tape.val(vars.pooled_text).row(0);
    out.similarity_logits = tape.val(vars.similarity_logits);
    return out;
}

CondVars cond_constants(Tape& tape, const ConditionOutput& cond) {
    CondVars v;
    v.enhanced_motion = tape.constant(cond.enhanced_motion);
    v.text_tokens = tape.constant(cond.enhanced_text_tokens);
    v.pooled_text = tape.constant(cond.enhanced_text_pooled.transpose());
    v.similarity_logits = tape.constant(cond.similarity_logits);
    return v;
}

Eigen::MatrixXd diffusion_forward(const Eigen::MatrixXd& noised, int timestep, int total_steps,
                                  const ConditionOutput& cond, ModelBundle& bundle,
                                  const ForwardOptions& options) {
    Tape tape;
    CondVars cv = cond_constants(tape, cond);
    Var out = diffusion_forward_tape(tape, tape.constant(noised), timestep, total_steps, cv,
                                     bundle, options);
    return tape.val(out);
}

}  // namespace medit
