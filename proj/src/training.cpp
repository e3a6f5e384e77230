#include "medit/training.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "json.hpp"

namespace medit {

using nn::GradSink;
using nn::Mat;
using nn::Tape;
using nn::Var;

void AdamW::step(nn::ParamStore& store, double lr, double weight_decay, double grad_clip) {
    if (m_.size() != store.size()) {
        m_.resize(store.size());
        v_.resize(store.size());
    }

    if (grad_clip > 0.0) {
        const double norm = store.grad_norm();
        if (norm > grad_clip) {
            const double scale = grad_clip / norm;
            for (std::size_t i = 0; i < store.size(); ++i)
                if (store[i].has_grad()) store[i].grad *= scale;
        }
    }

    ++step_count_;
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(step_count_));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(step_count_));

    for (std::size_t i = 0; i < store.size(); ++i) {
        nn::Parameter& p = store[i];
        if (!p.has_grad()) continue;
        if (m_[i].size() == 0) {
            m_[i] = Mat::Zero(p.value.rows(), p.value.cols());
            v_[i] = Mat::Zero(p.value.rows(), p.value.cols());
        }
        p.value -= lr * weight_decay * p.value;
        m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * p.grad;
        v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * p.grad.cwiseProduct(p.grad);
        const Mat m_hat = m_[i] / bc1;
        const Mat v_hat = v_[i] / bc2;
        p.value -= lr * (m_hat.array() / (v_hat.array().sqrt() + kEps)).matrix();
    }
}

namespace {

struct ItemDraws {
    int timestep = 0;
    Mat eps;
    int drop_kind = 0;  // 0 keep all, 1 drop text, 2 drop both
    std::uint64_t dropout_seed = 0;
};

struct ItemResult {
    double loss_editing = 0.0;
    double loss_aux = 0.0;
    bool aux_counted = false;
};

ItemResult run_item(const TrainItem& item, const ItemDraws& draws, ModelBundle& bundle,
                    const NoiseSchedule& sched, const TrainHyper& hyper, double inv_batch,
                    GradSink& sink) {
    const EditTriplet& trip = *item.triplet;
    const bool use_source = draws.drop_kind != 2;
    const bool use_text = draws.drop_kind == 0;

    Rng dropout_rng(draws.dropout_seed);
    ForwardOptions options;
    if (bundle.config.dropout > 0.0) options.dropout_rng = &dropout_rng;

    Tape tape;
    CondVars cond = condition_forward_tape(tape, &trip.source.frames, item.text, use_source,
                                           use_text, bundle, options);
    const Mat noised = forward_noise(trip.target.frames, draws.timestep, draws.eps, sched);
    Var pred = diffusion_forward_tape(tape, tape.constant(noised), draws.timestep, sched.steps,
                                      cond, bundle, options);
    Var loss_e = tape.mse(pred, trip.target.frames);
    Var item_loss = loss_e;

    ItemResult result;
    result.loss_editing = tape.val(loss_e)(0, 0);
    if (hyper.aux_enabled && use_source && use_text) {
        Var loss_aux = tape.cross_entropy_rows(cond.similarity_logits, item.curve->labels);
        result.loss_aux = tape.val(loss_aux)(0, 0);
        result.aux_counted = true;
        item_loss = tape.add(loss_e, tape.scale(loss_aux, hyper.aux_weight));
    }
    tape.backward(tape.scale(item_loss, inv_batch), &sink);
    return result;
}

}  // namespace

StepReport train_step(std::span<const TrainItem> batch, ModelBundle& bundle,
                      const NoiseSchedule& sched, const GuidanceConfig& guidance,
                      const TrainHyper& hyper, AdamW& optimizer, Rng& rng) {
    if (batch.empty()) throw InputError("train_step: empty batch");
    guidance.validate();
    const int n = static_cast<int>(batch.size());

    // Draw all randomness up front, in item order.
    std::vector<ItemDraws> draws(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const TrainItem& item = batch[static_cast<std::size_t>(i)];
        if (item.triplet == nullptr || item.text == nullptr)
            throw InputError("train_step: incomplete batch item");
        if (item.curve == nullptr)
            throw ConsistencyError("train_step: missing similarity curve for triplet '" +
                                   item.triplet->id + "'");
        ItemDraws& d = draws[static_cast<std::size_t>(i)];
        d.timestep = rng.uniform_int(sched.steps);
        d.eps = rng.gaussian_matrix(item.triplet->target.frames.rows(),
                                    item.triplet->target.frames.cols());
        d.drop_kind = sample_condition_dropout(guidance, rng);
        d.dropout_seed = rng.next_u64();
    }

    bundle.store.zero_grads();
    const double inv_batch = 1.0 / static_cast<double>(n);
    const int workers = std::max(1, hyper.workers);

    std::vector<GradSink> sinks(static_cast<std::size_t>(std::min(workers, n)));
    std::vector<ItemResult> results(static_cast<std::size_t>(n));

    for (int wave = 0; wave < n; wave += workers) {
        const int lanes = std::min(workers, n - wave);
        std::vector<std::thread> threads;
        threads.reserve(static_cast<std::size_t>(lanes));
        for (int lane = 0; lane < lanes; ++lane) {
            const int idx = wave + lane;
            GradSink& sink = sinks[static_cast<std::size_t>(lane)];
            sink.reset();
            threads.emplace_back([&, idx, lane]() {
                results[static_cast<std::size_t>(idx)] =
                    run_item(batch[static_cast<std::size_t>(idx)],
                             draws[static_cast<std::size_t>(idx)], bundle, sched, hyper,
                             inv_batch, sinks[static_cast<std::size_t>(lane)]);
            });
        }
        for (auto& th : threads) th.join();
        // Merge in item order so results do not depend on the worker count.
        for (int lane = 0; lane < lanes; ++lane)
            sinks[static_cast<std::size_t>(lane)].merge_into(bundle.store);
    }

    StepReport report;
    for (const ItemResult& r : results) {
        report.loss_editing += r.loss_editing * inv_batch;
        if (r.aux_counted) report.loss_aux += r.loss_aux * inv_batch;
    }
    report.loss_total = report.loss_editing + hyper.aux_weight * report.loss_aux;

    optimizer.step(bundle.store, hyper.lr, hyper.weight_decay, hyper.grad_clip);
    return report;
}

StepReport train_loop(std::span<const TrainItem> items, ModelBundle& bundle,
                      const NoiseSchedule& sched, const GuidanceConfig& guidance,
                      const TrainLoopOptions& options) {
    if (items.empty()) throw InputError("train_loop: no training items");
    if (options.batch_size < 1) throw ConfigError("train_loop: batch_size must be >= 1");

    std::ofstream metrics;
    if (!options.metrics_path.empty()) {
        metrics.open(options.metrics_path, std::ios::binary | std::ios::trunc);
        if (!metrics) throw IoError("train_loop: cannot open metrics log '" +
                                    options.metrics_path + "'");
        nlohmann::json header{{"kind", "train_metrics"}, {"config_hash", options.config_hash}};
        metrics << header.dump() << "\n";
    }

    Rng order_rng = Rng::substream(options.seed, "batch_order");
    Rng step_rng = Rng::substream(options.seed, "train_step");
    AdamW optimizer;

    const int n = static_cast<int>(items.size());
    std::vector<int> perm = order_rng.permutation(n);
    int cursor = 0;

    StepReport report;
    std::vector<TrainItem> batch(static_cast<std::size_t>(options.batch_size));
    const auto t0 = std::chrono::steady_clock::now();

    for (int step = 0; step < options.steps; ++step) {
        for (int i = 0; i < options.batch_size; ++i) {
            if (cursor == n) {
                perm = order_rng.permutation(n);
                cursor = 0;
            }
            batch[static_cast<std::size_t>(i)] = items[static_cast<std::size_t>(perm[cursor++])];
        }
        report = train_step(batch, bundle, sched, guidance, options.hyper, optimizer, step_rng);

        if (metrics.is_open() && (step % std::max(1, options.log_every) == 0 ||
                                  step == options.steps - 1)) {
            double wall_ms = 0.0;
            if (options.timing) {
                wall_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
            }
            nlohmann::json line{{"step", step},
                                {"L_e", report.loss_editing},
                                {"L_aux", report.loss_aux},
                                {"L", report.loss_total},
                                {"lr", options.hyper.lr},
                                {"wall_ms", wall_ms}};
            metrics << line.dump() << "\n";
        }
    }
    return report;
}

}  // namespace medit
