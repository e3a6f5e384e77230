#include "medit/text_encoder.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <vector>

#include "json.hpp"
#include "medit/rng.hpp"

namespace medit {

void TextEncoderConfig::validate() const {
    if (kind != "stub" && kind != "external")
        throw ConfigError("text encoder: unknown kind '" + kind + "'");
    if (embed_dim < 1) throw ConfigError("text encoder: embed_dim must be >= 1");
    if (max_tokens < 1) throw ConfigError("text encoder: max_tokens must be >= 1");
    if (codebook_size < 2) throw ConfigError("text encoder: codebook_size must be >= 2");
    if (kind == "external" && sidecar_path.empty())
        throw ConfigError("text encoder: external kind needs a sidecar path");
}

namespace {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        if (std::isspace(static_cast<unsigned char>(ch))) {
            if (!current.empty()) tokens.push_back(std::move(current)), current.clear();
        } else {
            current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

TextFeatures finish(Eigen::MatrixXd tokens) {
    TextFeatures f;
    f.token_count = static_cast<int>(tokens.rows());
    f.pooled = tokens.colwise().mean();
    f.tokens = std::move(tokens);
    return f;
}

}  // namespace

HashedStubEncoder::HashedStubEncoder(const TextEncoderConfig& config) {
    config.validate();
    max_tokens_ = config.max_tokens;
    Rng rng = Rng::substream(config.seed, "text_codebook");
    codebook_ = rng.gaussian_matrix(config.codebook_size, config.embed_dim);
}

TextFeatures HashedStubEncoder::encode(std::string_view, std::string_view instruction) const {
    const auto words = tokenize(instruction);
    const int rows = static_cast<int>(codebook_.rows());
    const int count = std::max(1, std::min<int>(static_cast<int>(words.size()), max_tokens_));

    Eigen::MatrixXd tokens(count, codebook_.cols());
    if (words.empty()) {
        tokens.row(0) = codebook_.row(0);  // null token
    } else {
        for (int i = 0; i < count; ++i) {
            const auto idx = 1 + static_cast<Eigen::Index>(fnv1a64(words[i]) %
                                                           static_cast<std::uint64_t>(rows - 1));
            tokens.row(i) = codebook_.row(idx);
        }
    }
    return finish(std::move(tokens));
}

struct SidecarEncoder::Impl {
    std::map<std::string, Eigen::MatrixXd, std::less<>> features;
};

SidecarEncoder::SidecarEncoder(const TextEncoderConfig& config) {
    config.validate();
    std::ifstream in(config.sidecar_path, std::ios::binary);
    if (!in) throw IoError("text encoder: cannot open sidecar '" + config.sidecar_path + "'");
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw FormatError("text encoder: sidecar must be a JSON object of id -> token rows");

    auto impl = std::make_shared<Impl>();
    for (const auto& [key, rows] : j.items()) {
        if (!rows.is_array() || rows.empty() || !rows[0].is_array())
            throw FormatError("text encoder: sidecar entry '" + key + "' must be rows of numbers");
        const auto n = static_cast<Eigen::Index>(rows.size());
        const auto dim = static_cast<Eigen::Index>(rows[0].size());
        Eigen::MatrixXd m(n, dim);
        for (Eigen::Index r = 0; r < n; ++r) {
            const auto& row = rows[static_cast<std::size_t>(r)];
            if (static_cast<Eigen::Index>(row.size()) != dim)
                throw FormatError("text encoder: ragged rows in sidecar entry '" + key + "'");
            for (Eigen::Index c = 0; c < dim; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
        }
        if (embed_dim_ == 0) embed_dim_ = static_cast<int>(dim);
        if (static_cast<int>(dim) != embed_dim_)
            throw FormatError("text encoder: sidecar entries disagree on embed_dim");
        impl->features.emplace(key, std::move(m));
    }
    if (impl->features.empty()) throw FormatError("text encoder: sidecar has no entries");
    impl_ = std::move(impl);
}

TextFeatures SidecarEncoder::encode(std::string_view id, std::string_view instruction) const {
    auto it = impl_->features.find(id);
    if (it == impl_->features.end()) it = impl_->features.find(instruction);
    if (it == impl_->features.end())
        throw ConsistencyError("text encoder: sidecar has no features for id '" + std::string(id) +
                               "'");
    return finish(it->second);
}

std::unique_ptr<TextEncoder> make_text_encoder(const TextEncoderConfig& config) {
    config.validate();
    if (config.kind == "stub") return std::make_unique<HashedStubEncoder>(config);
    return std::make_unique<SidecarEncoder>(config);
}

}  // namespace medit
