#include "medit/motion_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace medit {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, const std::string& field, int expected_cols) {
    if (!j.is_array() || j.empty())
        throw FormatError("triplet file: field '" + field + "' must be a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    Eigen::MatrixXd m(rows, expected_cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array())
            throw FormatError("triplet file: field '" + field + "' row " + std::to_string(r) +
                              " is not an array");
        if (static_cast<int>(row.size()) != expected_cols)
            throw LayoutError("triplet file: field '" + field + "' row " + std::to_string(r) +
                              " has " + std::to_string(row.size()) + " entries, layout needs " +
                              std::to_string(expected_cols));
        for (Eigen::Index c = 0; c < expected_cols; ++c) {
            const json& v = row[static_cast<std::size_t>(c)];
            if (!v.is_number())
                throw FormatError("triplet file: field '" + field + "' has a non-numeric entry");
            m(r, c) = v.get<double>();
        }
    }
    return m;
}

const json& require(const json& j, const char* field, const char* where) {
    auto it = j.find(field);
    if (it == j.end())
        throw FormatError(std::string(where) + ": missing field '" + field + "'");
    return *it;
}

json layout_to_json(const FeatureLayout& l) {
    return json{{"v", l.velocity_dims},
                {"o", l.orientation_dims},
                {"r", l.rotation_dims},
                {"p", l.position_dims}};
}

FeatureLayout layout_from_json(const json& j, const char* where) {
    FeatureLayout l;
    l.velocity_dims = require(j, "v", where).get<int>();
    l.orientation_dims = require(j, "o", where).get<int>();
    l.rotation_dims = require(j, "r", where).get<int>();
    l.position_dims = require(j, "p", where).get<int>();
    l.validate();
    return l;
}

json parse_file(const std::string& path, const char* what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(std::string(what) + ": cannot open '" + path + "'");
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw FormatError(std::string(what) + ": invalid JSON in '" + path + "'");
    return j;
}

void write_file(const std::string& path, const std::string& content, const char* what) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(std::string(what) + ": cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw IoError(std::string(what) + ": write failed for '" + path + "'");
}

json snr_to_json(double snr) {
    if (std::isinf(snr)) return json("inf");
    return json(snr);
}

double snr_from_json(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        throw FormatError("manifest: snr string must be \"inf\"");
    }
    if (!j.is_number()) throw FormatError("manifest: snr must be a number or \"inf\"");
    return j.get<double>();
}

}  // namespace

void DatasetManifest::validate() const {
    std::set<std::string> ids;
    for (const auto& e : entries) {
        if (!ids.insert(e.id).second)
            throw ConsistencyError("manifest: duplicate id '" + e.id + "'");
        if (e.snr) {
            const bool should_include = !(*e.snr < snr_threshold);
            if (e.included != should_include)
                throw ConsistencyError("manifest: entry '" + e.id +
                                       "' inclusion flag inconsistent with threshold");
        }
    }
}

EditTriplet load_triplet(const std::string& path) {
    const json j = parse_file(path, "triplet file");
    EditTriplet t;
    t.id = require(j, "id", "triplet file").get<std::string>();
    t.instruction = require(j, "instruction", "triplet file").get<std::string>();
    const double frame_rate = require(j, "frame_rate", "triplet file").get<double>();
    const FeatureLayout layout = layout_from_json(require(j, "layout", "triplet file"), "triplet file");

    t.source.layout = layout;
    t.source.frame_rate = frame_rate;
    t.source.frames = matrix_from_json(require(j, "source", "triplet file"), "source", layout.total());
    t.target.layout = layout;
    t.target.frame_rate = frame_rate;
    t.target.frames = matrix_from_json(require(j, "target", "triplet file"), "target", layout.total());

    if (auto it = j.find("edit_mask"); it != j.end()) {
        if (!it->is_array()) throw FormatError("triplet file: 'edit_mask' must be an array of 0/1");
        std::vector<std::uint8_t> mask;
        mask.reserve(it->size());
        for (const json& v : *it) {
            if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1))
                throw FormatError("triplet file: 'edit_mask' entries must be 0 or 1");
            mask.push_back(static_cast<std::uint8_t>(v.get<int>()));
        }
        t.edit_mask = std::move(mask);
    }

    t.validate();
    return t;
}

EditTriplet load_triplet(const std::string& path, const FeatureLayout& expected) {
    EditTriplet t = load_triplet(path);
    if (!(t.source.layout == expected))
        throw LayoutError("triplet file '" + path + "': layout does not match the expected layout");
    return t;
}

void save_triplet(const EditTriplet& t, const std::string& path) {
    t.validate();
    json j{{"id", t.id},
           {"instruction", t.instruction},
           {"frame_rate", t.source.frame_rate},
           {"layout", layout_to_json(t.source.layout)},
           {"source", matrix_to_json(t.source.frames)},
           {"target", matrix_to_json(t.target.frames)}};
    if (t.edit_mask) {
        json mask = json::array();
        for (std::uint8_t b : *t.edit_mask) mask.push_back(static_cast<int>(b));
        j["edit_mask"] = std::move(mask);
    }
    write_file(path, j.dump() + "\n", "triplet file");
}

DatasetManifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("manifest: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw FormatError("manifest: empty file '" + path + "'");

    json header = json::parse(line, nullptr, false);
    if (header.is_discarded()) throw FormatError("manifest: invalid header line");
    DatasetManifest m;
    m.split = require(header, "split", "manifest header").get<std::string>();
    m.snr_threshold = require(header, "snr_threshold", "manifest header").get<double>();
    if (auto it = header.find("config_hash"); it != header.end())
        m.config_hash = it->get<std::string>();

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json e = json::parse(line, nullptr, false);
        if (e.is_discarded()) throw FormatError("manifest: invalid entry line");
        ManifestEntry entry;
        entry.id = require(e, "id", "manifest entry").get<std::string>();
        entry.path = require(e, "path", "manifest entry").get<std::string>();
        entry.included = require(e, "included", "manifest entry").get<bool>();
        if (auto it = e.find("snr"); it != e.end()) entry.snr = snr_from_json(*it);
        m.entries.push_back(std::move(entry));
    }
    m.validate();
    return m;
}

void save_manifest(const DatasetManifest& m, const std::string& path) {
    m.validate();
    std::ostringstream out;
    json header{{"split", m.split}, {"snr_threshold", m.snr_threshold}};
    if (!m.config_hash.empty()) header["config_hash"] = m.config_hash;
    out << header.dump() << "\n";
    for (const auto& e : m.entries) {
        json line{{"id", e.id}, {"path", e.path}, {"included", e.included}};
        if (e.snr) line["snr"] = snr_to_json(*e.snr);
        out << line.dump() << "\n";
    }
    write_file(path, out.str(), "manifest");
}

void save_motion(const MotionSequence& m, const std::string& path, const std::string& config_hash) {
    m.validate();
    json j{{"frame_rate", m.frame_rate},
           {"layout", layout_to_json(m.layout)},
           {"frames", matrix_to_json(m.frames)}};
    if (!config_hash.empty()) j["config_hash"] = config_hash;
    write_file(path, j.dump() + "\n", "motion file");
}

MotionSequence load_motion(const std::string& path) {
    const json j = parse_file(path, "motion file");
    MotionSequence m;
    m.frame_rate = require(j, "frame_rate", "motion file").get<double>();
    m.layout = layout_from_json(require(j, "layout", "motion file"), "motion file");
    m.frames = matrix_from_json(require(j, "frames", "motion file"), "frames", m.layout.total());
    m.validate();
    return m;
}

bool is_triplet_file(const std::string& path) {
    const json j = parse_file(path, "motion file");
    return j.contains("source") && j.contains("target");
}

}  // namespace medit
