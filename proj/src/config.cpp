#include "medit/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <vector>

#include "json.hpp"
#include "medit/rng.hpp"

namespace medit {

namespace {

int parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long val = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<int>(val);
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' needs an integer, got '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long val = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<std::uint64_t>(val);
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' needs an unsigned integer, got '" + v + "'");
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double val = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return val;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' needs a number, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config: key '" + key + "' needs true/false, got '" + v + "'");
}

std::string fmt_double(double v) { return nlohmann::json(v).dump(); }
std::string fmt_bool(bool v) { return v ? "true" : "false"; }

struct Binding {
    const char* key;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

const std::vector<Binding>& bindings() {
    static const std::vector<Binding> table = {
        {"seed", [](const RunConfig& c) { return std::to_string(c.seed); },
         [](RunConfig& c, const std::string& v) { c.seed = parse_u64("seed", v); }},
        {"out", [](const RunConfig& c) { return c.out_dir; },
         [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
        {"workers", [](const RunConfig& c) { return std::to_string(c.workers); },
         [](RunConfig& c, const std::string& v) { c.workers = parse_int("workers", v); }},

        {"data.n_triplets", [](const RunConfig& c) { return std::to_string(c.data_n_triplets); },
         [](RunConfig& c, const std::string& v) { c.data_n_triplets = parse_int("data.n_triplets", v); }},
        {"data.frames", [](const RunConfig& c) { return std::to_string(c.data_frames); },
         [](RunConfig& c, const std::string& v) { c.data_frames = parse_int("data.frames", v); }},
        {"data.layout.velocity",
         [](const RunConfig& c) { return std::to_string(c.data_layout.velocity_dims); },
         [](RunConfig& c, const std::string& v) {
             c.data_layout.velocity_dims = parse_int("data.layout.velocity", v);
         }},
        {"data.layout.orientation",
         [](const RunConfig& c) { return std::to_string(c.data_layout.orientation_dims); },
         [](RunConfig& c, const std::string& v) {
             c.data_layout.orientation_dims = parse_int("data.layout.orientation", v);
         }},
        {"data.layout.rotation",
         [](const RunConfig& c) { return std::to_string(c.data_layout.rotation_dims); },
         [](RunConfig& c, const std::string& v) {
             c.data_layout.rotation_dims = parse_int("data.layout.rotation", v);
         }},
        {"data.layout.position",
         [](const RunConfig& c) { return std::to_string(c.data_layout.position_dims); },
         [](RunConfig& c, const std::string& v) {
             c.data_layout.position_dims = parse_int("data.layout.position", v);
         }},
        {"data.edit_kinds", [](const RunConfig& c) { return c.data_edit_kinds; },
         [](RunConfig& c, const std::string& v) { c.data_edit_kinds = v; }},
        {"data.magnitude", [](const RunConfig& c) { return fmt_double(c.data_magnitude); },
         [](RunConfig& c, const std::string& v) { c.data_magnitude = parse_double("data.magnitude", v); }},
        {"data.frame_rate", [](const RunConfig& c) { return fmt_double(c.data_frame_rate); },
         [](RunConfig& c, const std::string& v) { c.data_frame_rate = parse_double("data.frame_rate", v); }},
        {"data.split_train", [](const RunConfig& c) { return fmt_double(c.data_split_train); },
         [](RunConfig& c, const std::string& v) { c.data_split_train = parse_double("data.split_train", v); }},
        {"data.split_val", [](const RunConfig& c) { return fmt_double(c.data_split_val); },
         [](RunConfig& c, const std::string& v) { c.data_split_val = parse_double("data.split_val", v); }},
        {"data.split_test", [](const RunConfig& c) { return fmt_double(c.data_split_test); },
         [](RunConfig& c, const std::string& v) { c.data_split_test = parse_double("data.split_test", v); }},

        {"sim.window", [](const RunConfig& c) { return std::to_string(c.sim.window); },
         [](RunConfig& c, const std::string& v) { c.sim.window = parse_int("sim.window", v); }},
        {"sim.w_rotation", [](const RunConfig& c) { return fmt_double(c.sim.w_rotation); },
         [](RunConfig& c, const std::string& v) { c.sim.w_rotation = parse_double("sim.w_rotation", v); }},
        {"sim.w_location", [](const RunConfig& c) { return fmt_double(c.sim.w_location); },
         [](RunConfig& c, const std::string& v) { c.sim.w_location = parse_double("sim.w_location", v); }},
        {"sim.classes", [](const RunConfig& c) { return std::to_string(c.sim.classes); },
         [](RunConfig& c, const std::string& v) { c.sim.classes = parse_int("sim.classes", v); }},
        {"sim.kappa", [](const RunConfig& c) { return std::to_string(c.sim.kappa); },
         [](RunConfig& c, const std::string& v) { c.sim.kappa = parse_int("sim.kappa", v); }},
        {"sim.snr_threshold", [](const RunConfig& c) { return fmt_double(c.sim.snr_threshold); },
         [](RunConfig& c, const std::string& v) {
             c.sim.snr_threshold = parse_double("sim.snr_threshold", v);
         }},
        {"sim.metric", [](const RunConfig& c) { return c.sim.metric; },
         [](RunConfig& c, const std::string& v) { c.sim.metric = v; }},

        {"text.encoder", [](const RunConfig& c) { return c.text_encoder_kind; },
         [](RunConfig& c, const std::string& v) { c.text_encoder_kind = v; }},
        {"text.embed_dim", [](const RunConfig& c) { return std::to_string(c.text_embed_dim); },
         [](RunConfig& c, const std::string& v) { c.text_embed_dim = parse_int("text.embed_dim", v); }},
        {"text.max_tokens", [](const RunConfig& c) { return std::to_string(c.text_max_tokens); },
         [](RunConfig& c, const std::string& v) { c.text_max_tokens = parse_int("text.max_tokens", v); }},
        {"text.codebook_size",
         [](const RunConfig& c) { return std::to_string(c.text_codebook_size); },
         [](RunConfig& c, const std::string& v) {
             c.text_codebook_size = parse_int("text.codebook_size", v);
         }},
        {"text.sidecar", [](const RunConfig& c) { return c.text_sidecar; },
         [](RunConfig& c, const std::string& v) { c.text_sidecar = v; }},

        {"model.latent_dim", [](const RunConfig& c) { return std::to_string(c.model_latent_dim); },
         [](RunConfig& c, const std::string& v) { c.model_latent_dim = parse_int("model.latent_dim", v); }},
        {"model.cond_layers", [](const RunConfig& c) { return std::to_string(c.model_cond_layers); },
         [](RunConfig& c, const std::string& v) {
             c.model_cond_layers = parse_int("model.cond_layers", v);
         }},
        {"model.diff_layers", [](const RunConfig& c) { return std::to_string(c.model_diff_layers); },
         [](RunConfig& c, const std::string& v) {
             c.model_diff_layers = parse_int("model.diff_layers", v);
         }},
        {"model.heads", [](const RunConfig& c) { return std::to_string(c.model_heads); },
         [](RunConfig& c, const std::string& v) { c.model_heads = parse_int("model.heads", v); }},
        {"model.ffn_mult", [](const RunConfig& c) { return std::to_string(c.model_ffn_mult); },
         [](RunConfig& c, const std::string& v) { c.model_ffn_mult = parse_int("model.ffn_mult", v); }},
        {"model.max_frames", [](const RunConfig& c) { return std::to_string(c.model_max_frames); },
         [](RunConfig& c, const std::string& v) {
             c.model_max_frames = parse_int("model.max_frames", v);
         }},
        {"model.dropout", [](const RunConfig& c) { return fmt_double(c.model_dropout); },
         [](RunConfig& c, const std::string& v) { c.model_dropout = parse_double("model.dropout", v); }},
        {"model.use_positional",
         [](const RunConfig& c) { return fmt_bool(c.model_use_positional); },
         [](RunConfig& c, const std::string& v) {
             c.model_use_positional = parse_bool("model.use_positional", v);
         }},

        {"diffusion.steps", [](const RunConfig& c) { return std::to_string(c.diffusion_steps); },
         [](RunConfig& c, const std::string& v) { c.diffusion_steps = parse_int("diffusion.steps", v); }},
        {"guidance.s_text", [](const RunConfig& c) { return fmt_double(c.guidance.s_text); },
         [](RunConfig& c, const std::string& v) { c.guidance.s_text = parse_double("guidance.s_text", v); }},
        {"guidance.s_motion", [](const RunConfig& c) { return fmt_double(c.guidance.s_motion); },
         [](RunConfig& c, const std::string& v) {
             c.guidance.s_motion = parse_double("guidance.s_motion", v);
         }},
        {"guidance.p_drop_text",
         [](const RunConfig& c) { return fmt_double(c.guidance.p_drop_text); },
         [](RunConfig& c, const std::string& v) {
             c.guidance.p_drop_text = parse_double("guidance.p_drop_text", v);
         }},
        {"guidance.p_drop_both",
         [](const RunConfig& c) { return fmt_double(c.guidance.p_drop_both); },
         [](RunConfig& c, const std::string& v) {
             c.guidance.p_drop_both = parse_double("guidance.p_drop_both", v);
         }},

        {"train.steps", [](const RunConfig& c) { return std::to_string(c.train_steps); },
         [](RunConfig& c, const std::string& v) { c.train_steps = parse_int("train.steps", v); }},
        {"train.batch_size", [](const RunConfig& c) { return std::to_string(c.train_batch_size); },
         [](RunConfig& c, const std::string& v) {
             c.train_batch_size = parse_int("train.batch_size", v);
         }},
        {"train.lr", [](const RunConfig& c) { return fmt_double(c.train_lr); },
         [](RunConfig& c, const std::string& v) { c.train_lr = parse_double("train.lr", v); }},
        {"train.weight_decay", [](const RunConfig& c) { return fmt_double(c.train_weight_decay); },
         [](RunConfig& c, const std::string& v) {
             c.train_weight_decay = parse_double("train.weight_decay", v);
         }},
        {"train.grad_clip", [](const RunConfig& c) { return fmt_double(c.train_grad_clip); },
         [](RunConfig& c, const std::string& v) { c.train_grad_clip = parse_double("train.grad_clip", v); }},
        {"train.aux_weight", [](const RunConfig& c) { return fmt_double(c.train_aux_weight); },
         [](RunConfig& c, const std::string& v) {
             c.train_aux_weight = parse_double("train.aux_weight", v);
         }},
        {"train.aux_enabled", [](const RunConfig& c) { return fmt_bool(c.train_aux_enabled); },
         [](RunConfig& c, const std::string& v) {
             c.train_aux_enabled = parse_bool("train.aux_enabled", v);
         }},
        {"train.timing", [](const RunConfig& c) { return fmt_bool(c.train_timing); },
         [](RunConfig& c, const std::string& v) { c.train_timing = parse_bool("train.timing", v); }},
        {"train.log_every", [](const RunConfig& c) { return std::to_string(c.train_log_every); },
         [](RunConfig& c, const std::string& v) { c.train_log_every = parse_int("train.log_every", v); }},

        {"eval.batch_size", [](const RunConfig& c) { return std::to_string(c.eval_batch_size); },
         [](RunConfig& c, const std::string& v) { c.eval_batch_size = parse_int("eval.batch_size", v); }},
        {"eval.scope", [](const RunConfig& c) { return c.eval_scope; },
         [](RunConfig& c, const std::string& v) { c.eval_scope = v; }},
        {"eval.allow_truncation",
         [](const RunConfig& c) { return fmt_bool(c.eval_allow_truncation); },
         [](RunConfig& c, const std::string& v) {
             c.eval_allow_truncation = parse_bool("eval.allow_truncation", v);
         }},
    };
    return table;
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    for (const Binding& b : bindings()) {
        if (key == b.key) {
            b.set(*this, value);
            return;
        }
    }
    throw ConfigError("config: unknown key '" + key + "'");
}

std::string RunConfig::get(const std::string& key) const {
    for (const Binding& b : bindings())
        if (key == b.key) return b.get(*this);
    throw ConfigError("config: unknown key '" + key + "'");
}

void RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open '" + path + "'");
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const std::string text = trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(line_no) + " is not 'key = value'");
        set(trim(text.substr(0, eq)), trim(text.substr(eq + 1)));
    }
}

std::string RunConfig::to_text() const {
    std::vector<std::pair<std::string, std::string>> rows;
    for (const Binding& b : bindings()) rows.emplace_back(b.key, b.get(*this));
    std::sort(rows.begin(), rows.end());
    std::ostringstream out;
    for (const auto& [k, v] : rows) out << k << " = " << v << "\n";
    return out.str();
}

std::string RunConfig::hash() const {
    // Hash the computational parameters only: the output location and worker
    // count never change what gets computed.
    std::ostringstream filtered;
    std::istringstream lines(to_text());
    std::string line;
    while (std::getline(lines, line))
        if (line.rfind("out ", 0) != 0 && line.rfind("workers ", 0) != 0) filtered << line << "\n";
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(filtered.str());
    return out.str();
}

void RunConfig::validate() const {
    if (workers < 1) throw ConfigError("config: workers must be >= 1");
    data_layout.validate();
    sim.validate();
    guidance.validate();
    model_config().validate();
    text_config().validate();
    if (diffusion_steps < 1) throw ConfigError("config: diffusion.steps must be >= 1");
    if (train_batch_size < 1) throw ConfigError("config: train.batch_size must be >= 1");
    if (train_steps < 0) throw ConfigError("config: train.steps must be >= 0");
    if (eval_scope != "batch" && eval_scope != "full_set")
        throw ConfigError("config: eval.scope must be batch or full_set");
    if (eval_batch_size < 1) throw ConfigError("config: eval.batch_size must be >= 1");
}

ModelConfig RunConfig::model_config() const {
    ModelConfig m;
    m.latent_dim = model_latent_dim;
    m.cond_layers = model_cond_layers;
    m.diff_layers = model_diff_layers;
    m.heads = model_heads;
    m.classes = sim.classes;
    m.feature_dim = data_layout.total();
    m.text_dim = text_embed_dim;
    m.max_frames = model_max_frames;
    m.max_tokens = text_max_tokens;
    m.ffn_mult = model_ffn_mult;
    m.dropout = model_dropout;
    m.use_positional = model_use_positional;
    return m;
}

TextEncoderConfig RunConfig::text_config() const {
    TextEncoderConfig t;
    t.kind = text_encoder_kind;
    t.embed_dim = text_embed_dim;
    t.max_tokens = text_max_tokens;
    t.codebook_size = text_codebook_size;
    t.seed = seed;
    t.sidecar_path = text_sidecar;
    return t;
}

SynthSpec RunConfig::synth_spec() const {
    SynthSpec s;
    s.n_triplets = data_n_triplets;
    s.frames = data_frames;
    s.layout = data_layout;
    s.seed = seed;
    s.frame_rate = data_frame_rate;
    s.magnitude = data_magnitude;
    s.edit_kinds.clear();
    std::string token;
    std::istringstream kinds(data_edit_kinds);
    while (std::getline(kinds, token, ','))
        if (!trim(token).empty()) s.edit_kinds.push_back(edit_kind_from_name(trim(token)));
    return s;
}

SplitRatios RunConfig::split_ratios() const {
    return SplitRatios{data_split_train, data_split_val, data_split_test};
}

}  // namespace medit
