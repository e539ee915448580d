#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "vitl/data.hpp"

namespace vitl {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

bool is_skippable(const std::string& line) {
    const std::string t = trim(line);
    return t.empty() || t.front() == '#';
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::vector<std::string> split_fields(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, delim)) out.push_back(trim(field));
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

char detect_delimiter(const std::string& header_line) {
    return header_line.find('\t') != std::string::npos ? '\t' : ',';
}

double parse_double(const std::string& field, const std::string& context) {
    std::string s = trim(field);
    if (!s.empty() && s.front() == '+') s.erase(0, 1);
    double value = 0.0;
    const auto* begin = s.data();
    const auto* end = s.data() + s.size();
    const auto res = std::from_chars(begin, end, value);
    if (s.empty() || res.ec != std::errc() || res.ptr != end || !std::isfinite(value)) {
        throw DataError(context + (context.empty() ? "" : ": ") + "cannot parse '" + field + "' as a number");
    }
    return value;
}

DelimitedTable read_delimited(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    DelimitedTable table;
    std::string line;
    std::size_t line_no = 0;
    char delim = ',';
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_skippable(line)) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!have_header) {
            delim = detect_delimiter(line);
            table.header = split_fields(line, delim);
            have_header = true;
            continue;
        }
        table.rows.push_back(split_fields(line, delim));
        table.line_numbers.push_back(line_no);
    }
    return table;
}

TrajectoryDataset load_dataset(const std::filesystem::path& path, const EmotionEmbedding* embedding) {
    if (!std::filesystem::exists(path)) throw DataError("dataset file not found: " + path.string());
    const DelimitedTable table = read_delimited(path);
    const auto& header = table.header;
    if (header.size() < 3) throw DataError(path.string() + ": header needs identity_id, emotion_label and landmark columns");

    std::size_t p = 0;
    while (2 + p < header.size() && header[2 + p].rfind("theta", 0) == 0) ++p;
    const std::size_t d = header.size() - 2 - p;
    if (d == 0) throw DataError(path.string() + ": no landmark columns");
    if (p == 0 && embedding == nullptr) {
        throw ConfigError(path.string() + ": no theta columns and no emotion embedding supplied");
    }

    std::vector<std::string> identity_order;
    std::unordered_map<std::string, std::size_t> identity_index;
    std::vector<std::string> label_order;
    std::unordered_map<std::string, std::size_t> label_index;
    std::vector<std::unordered_map<std::size_t, Observation>> per_identity;

    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const auto& fields = table.rows[r];
        const std::string where = path.string() + ":" + std::to_string(table.line_numbers[r]);
        if (fields.size() != header.size()) {
            throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                            std::to_string(fields.size()));
        }
        const std::string& id = fields[0];
        const std::string& label = fields[1];
        if (id.empty() || label.empty()) throw DataError(where + ": empty identity or emotion label");

        Observation obs;
        obs.emotion.label = label;
        if (p > 0) {
            obs.emotion.coords.resize(static_cast<Index>(p));
            for (std::size_t k = 0; k < p; ++k) obs.emotion.coords(static_cast<Index>(k)) = parse_double(fields[2 + k], where);
        } else {
            obs.emotion = embedding->lookup(label);
        }
        obs.landmarks.resize(static_cast<Index>(d));
        for (std::size_t k = 0; k < d; ++k) obs.landmarks(static_cast<Index>(k)) = parse_double(fields[2 + p + k], where);

        auto [id_it, new_id] = identity_index.emplace(id, identity_order.size());
        if (new_id) {
            identity_order.push_back(id);
            per_identity.emplace_back();
        }
        auto [label_it, new_label] = label_index.emplace(label, label_order.size());
        if (new_label) label_order.push_back(label);
        auto& slot = per_identity[id_it->second];
        if (!slot.emplace(label_it->second, std::move(obs)).second) {
            throw DataError(where + ": duplicate observation for identity '" + id + "', emotion '" + label + "'");
        }
    }
    if (identity_order.empty()) throw DataError(path.string() + ": no observations");

    TrajectoryDataset out;
    out.identities.reserve(identity_order.size());
    for (std::size_t i = 0; i < identity_order.size(); ++i) {
        IdentityRecord rec;
        rec.id = identity_order[i];
        for (std::size_t l = 0; l < label_order.size(); ++l) {
            auto it = per_identity[i].find(l);
            if (it == per_identity[i].end()) {
                throw DataError(path.string() + ": identity '" + rec.id + "' has no observation for emotion '" +
                                label_order[l] + "' (trajectories must share the same emotions)");
            }
            rec.observations.push_back(std::move(it->second));
        }
        out.identities.push_back(std::move(rec));
    }
    out.validate();
    return out;
}

void save_dataset(const TrajectoryDataset& data, const std::filesystem::path& path) {
    data.validate();
    std::ostringstream os;
    os << "identity_id,emotion_label";
    for (Index k = 0; k < data.p(); ++k) os << ",theta_" << k;
    for (Index k = 0; k < data.d(); ++k) os << ",l_" << k;
    os << '\n';
    for (const auto& rec : data.identities) {
        for (const auto& obs : rec.observations) {
            os << rec.id << ',' << obs.emotion.label;
            for (Index k = 0; k < obs.emotion.dim(); ++k) os << ',' << format_double(obs.emotion.coords(k));
            for (Index k = 0; k < obs.landmarks.size(); ++k) os << ',' << format_double(obs.landmarks(k));
            os << '\n';
        }
    }
    write_file_atomic(path, os.str());
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace vitl
