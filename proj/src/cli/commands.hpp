#pragma once

#include <optional>
#include <string>

#include "medit/config.hpp"
#include "medit/diffusion.hpp"

namespace medit::cli {

struct AnalyzeArgs {
    std::string manifest;
    bool plots = false;
};

struct FilterArgs {
    std::string manifest;
    std::string curves;  // default: <out>/curves.jsonl
    std::string output;  // default: next to the input with a _filtered suffix
    std::optional<double> threshold;  // default: sim.snr_threshold from the config
};

struct TrainArgs {
    std::string manifest;
    std::string curves;      // default: <out>/curves.jsonl
    std::string checkpoint;  // default: <out>/checkpoint.bin
    std::string metrics;     // default: <out>/metrics.jsonl
};

struct SampleArgs {
    std::string checkpoint;
    std::string source;  // triplet or bare motion file
    std::string text;
    int frames = 0;  // 0 = match the source length
    std::string output;  // default: <out>/sample.json
    const DenoiseFn* inject = nullptr;  // test hook: bypass the checkpoint model
};

struct EvaluateArgs {
    std::string checkpoint;
    std::string manifest;
    std::string output;  // default: <out>/report.json
};

// Writes <out>/resolved.cfg; every command calls this before doing work.
void write_resolved_config(const RunConfig& config);

void cmd_generate(const RunConfig& config);
void cmd_analyze(const RunConfig& config, const AnalyzeArgs& args);
void cmd_filter(const RunConfig& config, const FilterArgs& args);
void cmd_train(const RunConfig& config, const TrainArgs& args);
void cmd_sample(const RunConfig& config, const SampleArgs& args);
void cmd_evaluate(const RunConfig& config, const EvaluateArgs& args);

}  // namespace medit::cli
