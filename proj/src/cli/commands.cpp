#include "cli/commands.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <vector>

#include "json.hpp"
#include "medit/checkpoint.hpp"
#include "medit/curve_io.hpp"
#include "medit/evaluation.hpp"
#include "medit/motion_io.hpp"
#include "medit/plot.hpp"
#include "medit/schedule.hpp"
#include "medit/training.hpp"

namespace medit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void require_input_file(const std::string& path, const char* what) {
    if (path.empty()) throw UsageError(std::string(what) + ": no path given");
    if (!fs::exists(path)) throw UsageError(std::string(what) + ": file not found: " + path);
}

std::string resolve_against(const std::string& base_file, const std::string& relative) {
    const fs::path p(relative);
    if (p.is_absolute()) return relative;
    return (fs::path(base_file).parent_path() / p).string();
}

std::string default_in_out(const RunConfig& config, const char* name) {
    return (fs::path(config.out_dir) / name).string();
}

struct LoadedDataset {
    std::vector<EditTriplet> triplets;                 // included entries, manifest order
    std::map<std::string, SimilarityCurve> curves;     // keyed by id
    std::vector<TextFeatures> text;                    // aligned with triplets
    std::vector<TrainItem> items;                      // pointers into the above
};

LoadedDataset load_dataset(const RunConfig& config, const std::string& manifest_path,
                           const std::string& curves_path, const TextEncoder& encoder) {
    const DatasetManifest manifest = load_manifest(manifest_path);
    LoadedDataset data;
    data.curves = load_curves(curves_path);
    for (const ManifestEntry& e : manifest.entries) {
        if (!e.included) continue;
        data.triplets.push_back(
            load_triplet(resolve_against(manifest_path, e.path), config.data_layout));
    }
    data.text.reserve(data.triplets.size());
    for (const EditTriplet& t : data.triplets) data.text.push_back(encoder.encode(t.id, t.instruction));
    for (std::size_t i = 0; i < data.triplets.size(); ++i) {
        const EditTriplet& t = data.triplets[i];
        const auto it = data.curves.find(t.id);
        if (it == data.curves.end())
            throw ConsistencyError("train: no similarity curve for triplet '" + t.id + "'");
        data.items.push_back(TrainItem{&t, &it->second, &data.text[i]});
    }
    return data;
}

}  // namespace

void write_resolved_config(const RunConfig& config) {
    fs::create_directories(config.out_dir);
    const std::string path = default_in_out(config, "resolved.cfg");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("config: cannot write '" + path + "'");
    out << "# resolved configuration, hash " << config.hash() << "\n" << config.to_text();
}

void cmd_generate(const RunConfig& config) {
    config.validate();
    write_resolved_config(config);

    const SynthSpec spec = config.synth_spec();
    const std::vector<EditTriplet> triplets = generate(spec);

    const fs::path triplet_dir = fs::path(config.out_dir) / "triplets";
    fs::create_directories(triplet_dir);
    std::map<std::string, double> snr_by_id;
    for (const EditTriplet& t : triplets) {
        save_triplet(t, (triplet_dir / (t.id + ".json")).string());
        snr_by_id[t.id] = build_curve(t, config.sim).snr;
    }

    auto manifests = split_manifest(triplets, config.split_ratios(), config.seed);
    for (DatasetManifest& m : manifests) {
        m.config_hash = config.hash();
        for (ManifestEntry& e : m.entries) {
            e.path = "triplets/" + e.id + ".json";
            e.snr = snr_by_id.at(e.id);
        }
        save_manifest(m, default_in_out(config, ("manifest_" + m.split + ".jsonl").c_str()));
    }
}

void cmd_analyze(const RunConfig& config, const AnalyzeArgs& args) {
    config.validate();
    require_input_file(args.manifest, "analyze");
    write_resolved_config(config);

    const DatasetManifest manifest = load_manifest(args.manifest);
    std::map<std::string, SimilarityCurve> curves;
    for (const ManifestEntry& e : manifest.entries) {
        const EditTriplet t =
            load_triplet(resolve_against(args.manifest, e.path), config.data_layout);
        curves.emplace(t.id, build_curve(t, config.sim));
    }
    save_curves(curves, default_in_out(config, "curves.jsonl"), config.hash());

    if (args.plots) {
        const fs::path plot_dir = fs::path(config.out_dir) / "plots";
        fs::create_directories(plot_dir);
        for (const auto& [id, curve] : curves)
            write_curve_plot(curve, config.sim.classes, (plot_dir / (id + ".ppm")).string());
    }
}

void cmd_filter(const RunConfig& config, const FilterArgs& args) {
    config.validate();
    require_input_file(args.manifest, "filter");
    const std::string curves_path =
        args.curves.empty() ? default_in_out(config, "curves.jsonl") : args.curves;
    require_input_file(curves_path, "filter");
    write_resolved_config(config);

    const double threshold = args.threshold.value_or(config.sim.snr_threshold);
    if (threshold < 0.0) throw UsageError("filter: threshold must be >= 0");

    const DatasetManifest manifest = load_manifest(args.manifest);
    const auto curves = load_curves(curves_path);
    DatasetManifest filtered = filter_dataset(manifest, curves, threshold);
    filtered.config_hash = config.hash();

    std::string output = args.output;
    if (output.empty()) {
        fs::path p(args.manifest);
        output = (p.parent_path() / (p.stem().string() + "_filtered.jsonl")).string();
    }
    save_manifest(filtered, output);
}

void cmd_train(const RunConfig& config, const TrainArgs& args) {
    config.validate();
    require_input_file(args.manifest, "train");
    const std::string curves_path =
        args.curves.empty() ? default_in_out(config, "curves.jsonl") : args.curves;
    require_input_file(curves_path, "train");
    write_resolved_config(config);

    const auto encoder = make_text_encoder(config.text_config());
    const LoadedDataset data = load_dataset(config, args.manifest, curves_path, *encoder);
    if (data.items.empty()) throw ConsistencyError("train: manifest has no included triplets");

    ModelBundle bundle = make_bundle(config.model_config(), config.seed);
    const NoiseSchedule sched = NoiseSchedule::cosine(config.diffusion_steps);

    TrainLoopOptions options;
    options.steps = config.train_steps;
    options.batch_size = config.train_batch_size;
    options.hyper.lr = config.train_lr;
    options.hyper.weight_decay = config.train_weight_decay;
    options.hyper.grad_clip = config.train_grad_clip;
    options.hyper.aux_enabled = config.train_aux_enabled;
    options.hyper.aux_weight = config.train_aux_weight;
    options.hyper.workers = config.workers;
    options.seed = config.seed;
    options.metrics_path = args.metrics.empty() ? default_in_out(config, "metrics.jsonl") : args.metrics;
    options.config_hash = config.hash();
    options.timing = config.train_timing;
    options.log_every = config.train_log_every;

    train_loop(data.items, bundle, sched, config.guidance, options);

    const std::string checkpoint_path =
        args.checkpoint.empty() ? default_in_out(config, "checkpoint.bin") : args.checkpoint;
    save_bundle(bundle, checkpoint_path, config.hash());
}

void cmd_sample(const RunConfig& config, const SampleArgs& args) {
    config.validate();
    require_input_file(args.source, "sample");
    write_resolved_config(config);

    MotionSequence source;
    if (is_triplet_file(args.source)) {
        source = load_triplet(args.source).source;
    } else {
        source = load_motion(args.source);
    }
    const int frames = args.frames > 0 ? args.frames : source.frame_count();
    const NoiseSchedule sched = NoiseSchedule::cosine(config.diffusion_steps);
    Rng rng = Rng::substream(config.seed, "sample");
    const std::string output = args.output.empty() ? default_in_out(config, "sample.json") : args.output;

    if (args.inject != nullptr) {
        MotionSequence out;
        out.frames = guided_sample_with(*args.inject, frames, source.layout.total(), sched,
                                        config.guidance, rng);
        out.layout = source.layout;
        out.frame_rate = source.frame_rate;
        save_motion(out, output, config.hash());
        return;
    }

    require_input_file(args.checkpoint, "sample");
    ModelBundle bundle = load_bundle(args.checkpoint);
    if (source.layout.total() != bundle.config.feature_dim)
        throw LayoutError("sample: source feature dimension does not match the checkpoint");

    TextEncoderConfig text_config = config.text_config();
    text_config.embed_dim = bundle.config.text_dim;
    text_config.max_tokens = bundle.config.max_tokens;
    const auto encoder = make_text_encoder(text_config);
    const TextFeatures text = encoder->encode("", args.text);

    const MotionSequence edited =
        guided_sample(source, text, bundle, sched, config.guidance, frames, rng);
    save_motion(edited, output, config.hash());
}

void cmd_evaluate(const RunConfig& config, const EvaluateArgs& args) {
    config.validate();
    require_input_file(args.checkpoint, "evaluate");
    require_input_file(args.manifest, "evaluate");
    write_resolved_config(config);

    ModelBundle bundle = load_bundle(args.checkpoint);
    const NoiseSchedule sched = NoiseSchedule::cosine(config.diffusion_steps);

    TextEncoderConfig text_config = config.text_config();
    text_config.embed_dim = bundle.config.text_dim;
    text_config.max_tokens = bundle.config.max_tokens;
    const auto encoder = make_text_encoder(text_config);

    const DatasetManifest manifest = load_manifest(args.manifest);
    std::vector<MotionSequence> generated, targets;
    double l2_sum = 0.0;
    int l2_count = 0;
    int truncated_pairs = 0;
    for (const ManifestEntry& e : manifest.entries) {
        if (!e.included) continue;
        const EditTriplet t =
            load_triplet(resolve_against(args.manifest, e.path), config.data_layout);
        const TextFeatures text = encoder->encode(t.id, t.instruction);
        Rng rng = Rng::substream(config.seed, "eval_sample_" + t.id);
        MotionSequence edited = guided_sample(t.source, text, bundle, sched, config.guidance,
                                              t.target.frame_count(), rng);
        bool truncated = false;
        l2_sum += l2_distance(edited, t.target, config.eval_allow_truncation, &truncated);
        if (truncated) ++truncated_pairs;
        ++l2_count;
        generated.push_back(std::move(edited));
        targets.push_back(t.target);
    }
    if (generated.empty()) throw ConsistencyError("evaluate: manifest has no included triplets");

    const RetrievalReport retrieval =
        retrieval_metrics(generated, targets, config.eval_scope,
                          std::min<int>(config.eval_batch_size, static_cast<int>(generated.size())),
                          stat_features, config.seed);
    const double fid = generated.size() >= 2 ? fid_like(generated, targets, stat_features) : 0.0;

    json r_at;
    for (const auto& [k, v] : retrieval.r_at) r_at[std::to_string(k)] = v;
    json report{{"r_at", r_at},
                {"avg_rank", retrieval.avg_rank},
                {"l2", l2_sum / l2_count},
                {"fid", fid},
                {"scope", retrieval.scope},
                {"batch_size", retrieval.batch_size},
                {"truncated_pairs", truncated_pairs},
                {"config_hash", config.hash()}};
    const std::string output = args.output.empty() ? default_in_out(config, "report.json") : args.output;
    std::ofstream out(output, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("evaluate: cannot write '" + output + "'");
    out << report.dump(2) << "\n";
}

}  // namespace medit::cli
