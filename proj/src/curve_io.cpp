#include "medit/curve_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace medit {

using nlohmann::json;

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vector_from_json(const json& j, const char* field) {
    if (!j.is_array()) throw FormatError(std::string("curves: field '") + field + "' must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const json& e = j[static_cast<std::size_t>(i)];
        if (!e.is_number()) throw FormatError(std::string("curves: non-numeric entry in '") + field + "'");
        v[i] = e.get<double>();
    }
    return v;
}

}  // namespace

void save_curves(const std::map<std::string, SimilarityCurve>& curves, const std::string& path,
                 const std::string& config_hash) {
    std::ostringstream out;
    for (const auto& [id, c] : curves) {
        json labels = json::array();
        for (int l : c.labels) labels.push_back(l);
        json line{{"id", id},
                  {"raw_rotation", vector_to_json(c.raw_rotation)},
                  {"raw_location", vector_to_json(c.raw_location)},
                  {"combined", vector_to_json(c.combined)},
                  {"normalized", vector_to_json(c.normalized)},
                  {"labels", std::move(labels)},
                  {"snr", std::isinf(c.snr) ? json("inf") : json(c.snr)}};
        if (!config_hash.empty()) line["config_hash"] = config_hash;
        out << line.dump() << "\n";
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("curves: cannot open '" + path + "' for writing");
    file << out.str();
    if (!file) throw IoError("curves: write failed for '" + path + "'");
}

std::map<std::string, SimilarityCurve> load_curves(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("curves: cannot open '" + path + "'");
    std::map<std::string, SimilarityCurve> curves;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw FormatError("curves: invalid JSON line");
        SimilarityCurve c;
        const std::string id = j.at("id").get<std::string>();
        c.raw_rotation = vector_from_json(j.at("raw_rotation"), "raw_rotation");
        c.raw_location = vector_from_json(j.at("raw_location"), "raw_location");
        c.combined = vector_from_json(j.at("combined"), "combined");
        c.normalized = vector_from_json(j.at("normalized"), "normalized");
        const json& labels = j.at("labels");
        if (!labels.is_array()) throw FormatError("curves: 'labels' must be an array");
        for (const json& l : labels) c.labels.push_back(l.get<int>());
        const json& snr = j.at("snr");
        c.snr = snr.is_string() ? std::numeric_limits<double>::infinity() : snr.get<double>();
        curves.emplace(id, std::move(c));
    }
    return curves;
}

}  // namespace medit
