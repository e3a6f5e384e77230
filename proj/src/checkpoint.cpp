#include "medit/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "json.hpp"

namespace medit {

using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'M', 'D', 'T', 'C', 'K', 'P', 'T', '\n'};
constexpr const char* kVersion = "mdt-1";

json config_to_json(const ModelConfig& c) {
    return json{{"latent_dim", c.latent_dim},   {"cond_layers", c.cond_layers},
                {"diff_layers", c.diff_layers}, {"heads", c.heads},
                {"classes", c.classes},         {"feature_dim", c.feature_dim},
                {"text_dim", c.text_dim},       {"max_frames", c.max_frames},
                {"max_tokens", c.max_tokens},   {"ffn_mult", c.ffn_mult},
                {"dropout", c.dropout},         {"use_positional", c.use_positional}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    auto get = [&](const char* k, auto& out) {
        auto it = j.find(k);
        if (it == j.end()) throw CheckpointError(std::string("checkpoint: header missing '") + k + "'");
        out = it->get<std::decay_t<decltype(out)>>();
    };
    get("latent_dim", c.latent_dim);
    get("cond_layers", c.cond_layers);
    get("diff_layers", c.diff_layers);
    get("heads", c.heads);
    get("classes", c.classes);
    get("feature_dim", c.feature_dim);
    get("text_dim", c.text_dim);
    get("max_frames", c.max_frames);
    get("max_tokens", c.max_tokens);
    get("ffn_mult", c.ffn_mult);
    get("dropout", c.dropout);
    get("use_positional", c.use_positional);
    return c;
}

void write_u64(std::ostream& out, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    if (!in) throw CheckpointError("checkpoint: truncated file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

json read_header(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw CheckpointError("checkpoint: bad magic bytes");
    const std::uint64_t len = read_u64(in);
    std::string text(len, '\0');
    in.read(text.data(), static_cast<std::streamsize>(len));
    if (!in) throw CheckpointError("checkpoint: truncated header");
    json header = json::parse(text, nullptr, false);
    if (header.is_discarded()) throw CheckpointError("checkpoint: invalid header JSON");
    const json& ver = header.at("version");
    if (!ver.is_string() || ver.get<std::string>() != kVersion)
        throw CheckpointError("checkpoint: version mismatch, expected " + std::string(kVersion));
    return header;
}

}  // namespace

void save_bundle(const ModelBundle& bundle, const std::string& path,
                 const std::string& config_hash) {
    json params = json::array();
    for (std::size_t i = 0; i < bundle.store.size(); ++i) {
        const nn::Parameter& p = bundle.store[i];
        params.push_back(json{{"name", p.name},
                              {"rows", static_cast<std::int64_t>(p.value.rows())},
                              {"cols", static_cast<std::int64_t>(p.value.cols())}});
    }
    json header{{"version", kVersion}, {"config", config_to_json(bundle.config)},
                {"params", std::move(params)}};
    if (!config_hash.empty()) header["config_hash"] = config_hash;
    const std::string header_text = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("checkpoint: cannot open '" + path + "' for writing");
    out.write(kMagic, 8);
    write_u64(out, header_text.size());
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));

    std::vector<double> row_major;
    for (std::size_t i = 0; i < bundle.store.size(); ++i) {
        const nn::Mat& m = bundle.store[i].value;
        row_major.resize(static_cast<std::size_t>(m.size()));
        std::size_t k = 0;
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) row_major[k++] = m(r, c);
        out.write(reinterpret_cast<const char*>(row_major.data()),
                  static_cast<std::streamsize>(row_major.size() * sizeof(double)));
    }
    if (!out) throw IoError("checkpoint: write failed for '" + path + "'");
}

ModelBundle load_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open '" + path + "'");
    const json header = read_header(in);

    const ModelConfig config = config_from_json(header.at("config"));
    config.validate();
    ModelBundle bundle = make_bundle(config, /*seed=*/0);

    const json& params = header.at("params");
    if (!params.is_array() || params.size() != bundle.store.size())
        throw CheckpointError("checkpoint: parameter table does not match the stored config");

    std::vector<double> row_major;
    for (std::size_t i = 0; i < bundle.store.size(); ++i) {
        nn::Parameter& p = bundle.store[i];
        const json& meta = params[i];
        if (meta.at("name").get<std::string>() != p.name ||
            meta.at("rows").get<std::int64_t>() != p.value.rows() ||
            meta.at("cols").get<std::int64_t>() != p.value.cols())
            throw CheckpointError("checkpoint: parameter '" + p.name +
                                  "' does not match the stored config");
        row_major.resize(static_cast<std::size_t>(p.value.size()));
        in.read(reinterpret_cast<char*>(row_major.data()),
                static_cast<std::streamsize>(row_major.size() * sizeof(double)));
        if (!in) throw CheckpointError("checkpoint: truncated parameter data");
        std::size_t k = 0;
        for (Eigen::Index r = 0; r < p.value.rows(); ++r)
            for (Eigen::Index c = 0; c < p.value.cols(); ++c) p.value(r, c) = row_major[k++];
    }
    return bundle;
}

ModelBundle load_bundle(const std::string& path, const ModelConfig& expected) {
    ModelBundle bundle = load_bundle(path);
    if (!(bundle.config == expected))
        throw CheckpointError("checkpoint: stored config does not match the expected config");
    return bundle;
}

std::string checkpoint_config_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open '" + path + "'");
    const json header = read_header(in);
    if (auto it = header.find("config_hash"); it != header.end()) return it->get<std::string>();
    return "";
}

}  // namespace medit
