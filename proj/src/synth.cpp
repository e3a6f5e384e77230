#include "medit/synth.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "medit/rng.hpp"

namespace medit {

const char* edit_kind_name(EditKind k) {
    switch (k) {
        case EditKind::kAmplitude: return "amplitude";
        case EditKind::kSpeed: return "speed";
        case EditKind::kFreeze: return "freeze";
        case EditKind::kMirror: return "mirror";
        case EditKind::kPhase: return "phase";
    }
    return "?";
}

EditKind edit_kind_from_name(const std::string& name) {
    for (EditKind k : {EditKind::kAmplitude, EditKind::kSpeed, EditKind::kFreeze,
                       EditKind::kMirror, EditKind::kPhase})
        if (name == edit_kind_name(k)) return k;
    throw ConfigError("synth: unknown edit kind '" + name + "'");
}

void SynthSpec::validate() const {
    layout.validate();
    if (n_triplets < 1) throw ConfigError("synth: n_triplets must be >= 1");
    if (frames < 8) throw ConfigError("synth: frames must be >= 8");
    if (edit_kinds.empty()) throw ConfigError("synth: at least one edit kind required");
    if (magnitude < 0.0) throw ConfigError("synth: magnitude must be >= 0");
    if (!(frame_rate > 0.0)) throw ConfigError("synth: frame_rate must be positive");
}

namespace {

struct Oscillator {
    double amplitude, cycles, phase;
};

Eigen::MatrixXd render(const std::vector<Oscillator>& osc, int frames,
                       const std::vector<double>& phase_shift) {
    const int dims = static_cast<int>(osc.size());
    Eigen::MatrixXd m(frames, dims);
    for (int d = 0; d < dims; ++d) {
        const Oscillator& o = osc[static_cast<std::size_t>(d)];
        for (int i = 0; i < frames; ++i) {
            const double t = static_cast<double>(i) / frames;
            m(i, d) = o.amplitude *
                      std::sin(2.0 * M_PI * o.cycles * t + o.phase +
                               phase_shift[static_cast<std::size_t>(d)]);
        }
    }
    return m;
}

std::string location_word(int a, int b, int frames) {
    const double center = 0.5 * (a + b) / frames;
    if (center < 1.0 / 3.0) return "early";
    if (center < 2.0 / 3.0) return "middle";
    return "late";
}

std::string instruction_for(EditKind kind, const std::string& loc) {
    switch (kind) {
        case EditKind::kAmplitude: return "amplify the motion " + loc;
        case EditKind::kSpeed: return "speed up the motion " + loc;
        case EditKind::kFreeze: return "freeze the motion " + loc;
        case EditKind::kMirror: return "mirror the motion " + loc;
        case EditKind::kPhase: return "shift the motion phase " + loc;
    }
    return "edit the motion " + loc;
}

}  // namespace

std::vector<EditTriplet> generate(const SynthSpec& spec) {
    spec.validate();
    const int f = spec.frames;
    const int d = spec.layout.total();

    std::vector<EditTriplet> out;
    out.reserve(static_cast<std::size_t>(spec.n_triplets));

    for (int n = 0; n < spec.n_triplets; ++n) {
        Rng rng = Rng::substream(spec.seed, "synth_triplet_" + std::to_string(n));

        std::vector<Oscillator> osc(static_cast<std::size_t>(d));
        for (auto& o : osc) {
            o.amplitude = 0.5 + rng.uniform();
            o.cycles = 0.5 + 2.0 * rng.uniform();
            o.phase = 2.0 * M_PI * rng.uniform();
        }
        const std::vector<double> no_shift(static_cast<std::size_t>(d), 0.0);

        EditTriplet t;
        t.id = (std::ostringstream() << "synth_" << std::setw(6) << std::setfill('0') << n).str();
        t.source.layout = spec.layout;
        t.source.frame_rate = spec.frame_rate;
        t.source.frames = render(osc, f, no_shift);
        t.target = t.source;

        const EditKind kind =
            spec.edit_kinds[static_cast<std::size_t>(n) % spec.edit_kinds.size()];

        if (spec.magnitude == 0.0) {
            t.edit_mask = std::vector<std::uint8_t>(static_cast<std::size_t>(f), 0);
            t.instruction = "keep the motion unchanged";
            t.validate();
            out.push_back(std::move(t));
            continue;
        }

        // Window position tracks the coarse location word so the edit site is
        // predictable from the instruction (plus or minus one frame of jitter).
        const int len = std::max(3, f / 4) + rng.uniform_int(std::max(1, f / 12));
        const int bucket = rng.uniform_int(3);
        int a_base;
        if (bucket == 0)
            a_base = 2;
        else if (bucket == 1)
            a_base = (f - len) / 2;
        else
            a_base = f - len - 2;
        const int jitter = rng.uniform_int(3) - 1;
        const int a = std::clamp(a_base + jitter, 1, f - len - 1);
        const int b = a + len;

        switch (kind) {
            case EditKind::kAmplitude: {
                const double c = 1.0 + spec.magnitude * (0.6 + 0.4 * rng.uniform());
                for (int i = a; i < b; ++i) t.target.frames.row(i) = c * t.source.frames.row(i);
                break;
            }
            case EditKind::kSpeed: {
                for (int i = a; i < b; ++i) {
                    const int src = a + std::min(2 * (i - a), len - 1);
                    t.target.frames.row(i) = t.source.frames.row(src);
                }
                break;
            }
            case EditKind::kFreeze: {
                for (int i = a; i < b; ++i) t.target.frames.row(i) = t.source.frames.row(a);
                break;
            }
            case EditKind::kMirror: {
                for (int i = a; i < b; ++i) t.target.frames.row(i) = -t.source.frames.row(i);
                break;
            }
            case EditKind::kPhase: {
                std::vector<double> shift(static_cast<std::size_t>(d));
                const double delta =
                    spec.magnitude * (M_PI / 2.0) * (0.9 + 0.2 * rng.uniform());
                for (auto& s : shift) s = delta;
                const Eigen::MatrixXd shifted = render(osc, f, shift);
                for (int i = a; i < b; ++i) t.target.frames.row(i) = shifted.row(i);
                break;
            }
        }

        std::vector<std::uint8_t> mask(static_cast<std::size_t>(f), 0);
        for (int i = a; i < b; ++i) mask[static_cast<std::size_t>(i)] = 1;
        t.edit_mask = std::move(mask);
        t.instruction = instruction_for(kind, location_word(a, b, f));
        t.validate();
        out.push_back(std::move(t));
    }
    return out;
}

std::array<DatasetManifest, 3> split_manifest(const std::vector<EditTriplet>& triplets,
                                              const SplitRatios& ratios, std::uint64_t seed) {
    const double sum = ratios.train + ratios.val + ratios.test;
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split: ratios must sum to 1");
    const int n = static_cast<int>(triplets.size());
    const int n_train = static_cast<int>(std::floor(ratios.train * n));
    const int n_val = static_cast<int>(std::floor(ratios.val * n));
    const int n_test = n - n_train - n_val;
    if (n_train < 1 || n_val < 1 || n_test < 1)
        throw ConfigError("split: every split must receive at least one triplet");

    Rng rng = Rng::substream(seed, "split");
    const std::vector<int> perm = rng.permutation(n);

    std::array<std::vector<int>, 3> index_sets;
    for (int i = 0; i < n; ++i) {
        const int which = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);
        index_sets[static_cast<std::size_t>(which)].push_back(perm[static_cast<std::size_t>(i)]);
    }

    const char* names[3] = {"train", "val", "test"};
    std::array<DatasetManifest, 3> manifests;
    for (int s = 0; s < 3; ++s) {
        auto& idx = index_sets[static_cast<std::size_t>(s)];
        std::sort(idx.begin(), idx.end());
        DatasetManifest& m = manifests[static_cast<std::size_t>(s)];
        m.split = names[s];
        m.snr_threshold = 0.0;
        for (int i : idx) {
            const EditTriplet& t = triplets[static_cast<std::size_t>(i)];
            m.entries.push_back(ManifestEntry{t.id, t.id + ".json", std::nullopt, true});
        }
    }
    return manifests;
}

}  // namespace medit
