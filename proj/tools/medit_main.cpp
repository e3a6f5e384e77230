#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "cli/commands.hpp"
#include "json.hpp"
#include "medit/errors.hpp"

namespace {

int exit_code_for(medit::ErrorCategory category) {
    using medit::ErrorCategory;
    switch (category) {
        case ErrorCategory::kUsage:
        case ErrorCategory::kConfig:
        case ErrorCategory::kFormat:
        case ErrorCategory::kLayout:
            return 2;
        default:
            return 1;
    }
}

void print_error(const std::string& category, const std::string& message) {
    nlohmann::json line{{"error", {{"category", category}, {"message", message}}}};
    std::cerr << line.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"text-conditioned motion editing: dataset generation, similarity analysis, "
                 "diffusion training, sampling, and evaluation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    int workers = 0;
    app.add_option("--config", config_path, "configuration file (key = value lines)");
    app.add_option("--seed", seed, "root random seed");
    app.add_option("--out", out_dir, "output directory (env MEL_OUT takes precedence)");
    app.add_option("--workers", workers, "parallel workers for batch processing");

    // generate
    auto* generate = app.add_subcommand("generate", "create a synthetic edit-triplet dataset");
    int gen_n = 0, gen_frames = 0;
    double gen_magnitude = -1.0;
    std::string gen_kinds;
    generate->add_option("--n", gen_n, "number of triplets");
    generate->add_option("--frames", gen_frames, "frames per motion");
    generate->add_option("--magnitude", gen_magnitude, "edit magnitude (0 = identity edits)");
    generate->add_option("--kinds", gen_kinds, "comma-separated edit kinds");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "compute similarity curves for a manifest");
    medit::cli::AnalyzeArgs analyze_args;
    analyze->add_option("--manifest", analyze_args.manifest, "dataset manifest")->required();
    analyze->add_flag("--plots", analyze_args.plots, "write per-triplet curve plots (PPM)");

    // filter
    auto* filter = app.add_subcommand("filter", "filter a manifest by MotionSNR threshold");
    medit::cli::FilterArgs filter_args;
    double filter_threshold = -1.0;
    filter->add_option("--manifest", filter_args.manifest, "dataset manifest")->required();
    filter->add_option("--curves", filter_args.curves, "curve records from analyze");
    filter->add_option("--threshold", filter_threshold, "MotionSNR threshold");
    filter->add_option("--output", filter_args.output, "filtered manifest path");

    // train
    auto* train = app.add_subcommand("train", "train the editing model");
    medit::cli::TrainArgs train_args;
    int train_steps = -1, train_batch = -1;
    double train_lr = -1.0;
    bool no_aux = false, timing = false;
    train->add_option("--manifest", train_args.manifest, "training manifest")->required();
    train->add_option("--curves", train_args.curves, "curve records from analyze");
    train->add_option("--steps", train_steps, "optimizer steps");
    train->add_option("--batch", train_batch, "batch size");
    train->add_option("--lr", train_lr, "learning rate");
    train->add_flag("--no-aux", no_aux, "disable the auxiliary similarity loss");
    train->add_flag("--timing", timing, "record wall-clock times in the metrics log");
    train->add_option("--checkpoint", train_args.checkpoint, "checkpoint output path");
    train->add_option("--metrics", train_args.metrics, "metrics log path");

    // sample
    auto* sample = app.add_subcommand("sample", "generate an edited motion");
    medit::cli::SampleArgs sample_args;
    double s_text = -1.0, s_motion = -1.0;
    sample->add_option("--checkpoint", sample_args.checkpoint, "model checkpoint");
    sample->add_option("--source", sample_args.source, "source motion or triplet file")->required();
    sample->add_option("--text", sample_args.text, "edit instruction")->required();
    sample->add_option("--frames", sample_args.frames, "edited motion length (default: source length)");
    sample->add_option("--s-text", s_text, "text guidance scale");
    sample->add_option("--s-motion", s_motion, "source-motion guidance scale");
    sample->add_option("--output", sample_args.output, "edited motion output path");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "sample over a manifest and report metrics");
    medit::cli::EvaluateArgs evaluate_args;
    evaluate->add_option("--checkpoint", evaluate_args.checkpoint, "model checkpoint")->required();
    evaluate->add_option("--manifest", evaluate_args.manifest, "evaluation manifest")->required();
    evaluate->add_option("--output", evaluate_args.output, "report output path");

    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return 2;
    }

    try {
        medit::RunConfig config;
        if (!config_path.empty()) config.load_file(config_path);
        if (app.count("--seed") > 0) config.seed = seed;
        if (app.count("--out") > 0) config.out_dir = out_dir;
        if (app.count("--workers") > 0) config.workers = workers;
        if (const char* env_out = std::getenv("MEL_OUT"); env_out != nullptr && *env_out != '\0')
            config.out_dir = env_out;

        if (generate->parsed()) {
            if (generate->count("--n") > 0) config.data_n_triplets = gen_n;
            if (generate->count("--frames") > 0) config.data_frames = gen_frames;
            if (generate->count("--magnitude") > 0) config.data_magnitude = gen_magnitude;
            if (generate->count("--kinds") > 0) config.data_edit_kinds = gen_kinds;
            medit::cli::cmd_generate(config);
        } else if (analyze->parsed()) {
            medit::cli::cmd_analyze(config, analyze_args);
        } else if (filter->parsed()) {
            if (filter->count("--threshold") > 0) filter_args.threshold = filter_threshold;
            medit::cli::cmd_filter(config, filter_args);
        } else if (train->parsed()) {
            if (train->count("--steps") > 0) config.train_steps = train_steps;
            if (train->count("--batch") > 0) config.train_batch_size = train_batch;
            if (train->count("--lr") > 0) config.train_lr = train_lr;
            if (no_aux) config.train_aux_enabled = false;
            if (timing) config.train_timing = true;
            medit::cli::cmd_train(config, train_args);
        } else if (sample->parsed()) {
            if (sample->count("--s-text") > 0) config.guidance.s_text = s_text;
            if (sample->count("--s-motion") > 0) config.guidance.s_motion = s_motion;
            medit::cli::cmd_sample(config, sample_args);
        } else if (evaluate->parsed()) {
            medit::cli::cmd_evaluate(config, evaluate_args);
        }
        return 0;
    } catch (const medit::Error& e) {
        print_error(e.category_name(), e.what());
        return exit_code_for(e.category());
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 1;
    }
}
