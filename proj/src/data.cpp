#include "vitl/data.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "vitl/random.hpp"

namespace vitl {

Index TrajectoryDataset::d() const {
    if (identities.empty() || identities.front().observations.empty()) return 0;
    return identities.front().observations.front().landmarks.size();
}

Index TrajectoryDataset::p() const {
    if (identities.empty() || identities.front().observations.empty()) return 0;
    return identities.front().observations.front().emotion.dim();
}

Index TrajectoryDataset::n_observed() const {
    if (!mask) return n() * m();
    return static_cast<Index>((mask->cast<int>() != 0).count());
}

void TrajectoryDataset::validate() const {
    if (identities.empty()) throw DataError("dataset has no identities");
    const Index m0 = m(), d0 = d(), p0 = p();
    if (m0 < 1) throw DataError("identity '" + identities.front().id + "' has no observations");
    if (d0 < 1) throw DataError("landmark dimension must be >= 1");
    for (const auto& rec : identities) {
        if (static_cast<Index>(rec.observations.size()) != m0) {
            throw DataError("identity '" + rec.id + "' has " + std::to_string(rec.observations.size()) +
                            " observations, expected " + std::to_string(m0));
        }
        for (const auto& obs : rec.observations) {
            if (obs.landmarks.size() != d0) throw DataError("identity '" + rec.id + "' has inconsistent landmark dimension");
            if (obs.emotion.dim() != p0) throw DataError("identity '" + rec.id + "' has inconsistent emotion dimension");
            if (!obs.landmarks.allFinite() || !obs.emotion.coords.allFinite()) {
                throw DataError("identity '" + rec.id + "' has non-finite values");
            }
        }
    }
    if (mask) {
        if (mask->rows() != n() || mask->cols() != m0) throw DataError("mask shape does not match n x m");
        if ((mask->cast<int>() > 1).any()) throw DataError("mask entries must be 0 or 1");
    }
}

bool TripletDataset::shared_grid(double tol) const {
    if (t() == 0) return true;
    const Eigen::MatrixXd first = grid(0);
    for (Index i = 1; i < t(); ++i) {
        if ((thetas.middleRows(m * i, m) - first).cwiseAbs().maxCoeff() > tol) return false;
    }
    return true;
}

void TripletDataset::validate() const {
    if (t() < 1 || m < 1) throw DataError("triplet dataset is empty");
    if (outputs.rows() != t() * m || thetas.rows() != t() * m || observed.size() != t() * m) {
        throw DataError("triplet dataset has inconsistent row counts");
    }
    if (outputs.cols() != d()) throw DataError("triplet outputs and inputs disagree on d");
    if (static_cast<Index>(source_identity.size()) != t() || static_cast<Index>(input_emotion.size()) != t()) {
        throw DataError("triplet bookkeeping has wrong length");
    }
}

namespace {

bool matches(const Observation& obs, const EmotionRef& ref) {
    if (const auto* label = std::get_if<std::string>(&ref)) return obs.emotion.label == *label;
    const auto& point = std::get<EmotionPoint>(ref);
    if (!point.label.empty() && obs.emotion.label == point.label) return true;
    if (point.coords.size() != obs.emotion.coords.size()) return false;
    return point.coords.size() == 0 || (point.coords - obs.emotion.coords).cwiseAbs().maxCoeff() <= 1e-10;
}

TripletDataset allocate(Index t, Index m, Index d, Index p) {
    TripletDataset out;
    out.m = m;
    out.inputs.resize(t, d);
    out.outputs.resize(t * m, d);
    out.thetas.resize(t * m, p);
    out.observed.resize(t * m);
    out.source_identity.reserve(t);
    out.input_emotion.reserve(t);
    return out;
}

void fill_block(TripletDataset& out, Index row, const TrajectoryDataset& data, Index i) {
    const auto& rec = data.identities[i];
    const Index m = data.m();
    for (Index j = 0; j < m; ++j) {
        out.outputs.row(m * row + j) = rec.observations[j].landmarks.transpose();
        out.thetas.row(m * row + j) = rec.observations[j].emotion.coords.transpose();
        out.observed(m * row + j) = data.observed(i, j);
    }
}

}  // namespace

TripletDataset build_single(const TrajectoryDataset& data, const EmotionRef& theta0) {
    data.validate();
    const Index n = data.n(), m = data.m();
    TripletDataset out = allocate(n, m, data.d(), data.p());
    for (Index i = 0; i < n; ++i) {
        const auto& obs = data.identities[i].observations;
        const auto it = std::find_if(obs.begin(), obs.end(), [&](const Observation& o) { return matches(o, theta0); });
        if (it == obs.end()) {
            throw DataError("identity '" + data.identities[i].id + "' has no observation at the reference emotion");
        }
        out.inputs.row(i) = it->landmarks.transpose();
        fill_block(out, i, data, i);
        out.source_identity.push_back(i);
        out.input_emotion.push_back(static_cast<Index>(it - obs.begin()));
    }
    return out;
}

TripletDataset build_joint(const TrajectoryDataset& data) {
    data.validate();
    const Index n = data.n(), m = data.m();
    const Index t = data.n_observed();
    if (t == 0) throw DataError("joint dataset: no observed entries");
    TripletDataset out = allocate(t, m, data.d(), data.p());
    Index row = 0;
    for (Index i = 0; i < n; ++i) {
        for (Index l = 0; l < m; ++l) {
            if (!data.observed(i, l)) continue;  // the input face itself is unavailable
            out.inputs.row(row) = data.identities[i].observations[l].landmarks.transpose();
            fill_block(out, row, data, i);
            out.source_identity.push_back(i);
            out.input_emotion.push_back(l);
            ++row;
        }
    }
    return out;
}

TripletDataset select_triplets(const TripletDataset& data, std::span<const Index> rows) {
    const Index m = data.m;
    TripletDataset out = allocate(static_cast<Index>(rows.size()), m, data.d(), data.p());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const Index r = rows[k];
        if (r < 0 || r >= data.t()) throw InvalidArgument("select_triplets: row out of range");
        const Index dst = static_cast<Index>(k);
        out.inputs.row(dst) = data.inputs.row(r);
        out.outputs.middleRows(m * dst, m) = data.outputs.middleRows(m * r, m);
        out.thetas.middleRows(m * dst, m) = data.thetas.middleRows(m * r, m);
        out.observed.segment(m * dst, m) = data.observed.segment(m * r, m);
        out.source_identity.push_back(data.source_identity[r]);
        out.input_emotion.push_back(data.input_emotion[r]);
    }
    return out;
}

TrajectoryDataset apply_mask(const TrajectoryDataset& data, double observed_fraction, std::uint64_t seed) {
    if (!(observed_fraction >= 0.0 && observed_fraction <= 1.0)) {
        throw InvalidArgument("apply_mask: observed_fraction must lie in [0, 1]");
    }
    data.validate();
    const Index n = data.n(), m = data.m();
    const Index total = n * m;
    const auto keep = static_cast<Index>(std::llround(observed_fraction * static_cast<double>(total)));

    std::vector<Index> order(static_cast<std::size_t>(total));
    std::iota(order.begin(), order.end(), Index{0});
    auto engine = make_engine(seed, {stream::kMask});
    std::shuffle(order.begin(), order.end(), engine);

    MaskMatrix drawn = MaskMatrix::Zero(n, m);
    for (Index k = 0; k < keep; ++k) {
        const Index e = order[static_cast<std::size_t>(k)];
        drawn(e / m, e % m) = 1;
    }
    TrajectoryDataset out = data;
    if (out.mask) {
        out.mask = (*out.mask).min(drawn);
    } else {
        out.mask = drawn;
    }
    return out;
}

TrajectoryDataset subset_identities(const TrajectoryDataset& data, std::span<const Index> indices) {
    TrajectoryDataset out;
    out.identities.reserve(indices.size());
    for (const Index i : indices) {
        if (i < 0 || i >= data.n()) throw InvalidArgument("subset_identities: index out of range");
        out.identities.push_back(data.identities[i]);
    }
    if (data.mask) {
        MaskMatrix sub(static_cast<Index>(indices.size()), data.m());
        for (std::size_t k = 0; k < indices.size(); ++k) sub.row(static_cast<Index>(k)) = data.mask->row(indices[k]);
        out.mask = sub;
    }
    return out;
}

// ---------------------------------------------------------------------------

EmotionEmbedding::EmotionEmbedding(const std::map<std::string, Eigen::VectorXd>& table) {
    bool have_dim = false;
    for (const auto& [label, coords] : table) {
        if (!have_dim) {
            dim_ = coords.size();
            have_dim = true;
        }
        if (coords.size() != dim_ || dim_ < 1) throw ConfigError("embedding: inconsistent dimension for '" + label + "'");
        if (!coords.allFinite()) throw ConfigError("embedding: non-finite coordinates for '" + label + "'");
        if (label == kNeutralLabel) {
            table_[label] = Eigen::VectorXd::Zero(dim_);
            continue;
        }
        const double norm = coords.norm();
        if (!(norm > 0.0)) throw ConfigError("embedding: zero vector for non-neutral label '" + label + "'");
        table_[label] = coords / norm;
    }
    table_[kNeutralLabel] = Eigen::VectorXd::Zero(dim_);
}

EmotionEmbedding EmotionEmbedding::builtin() {
    // Placeholder layout in the (valence, arousal) plane, angles in degrees.
    const std::pair<const char*, double> entries[] = {
        {"happy", 15.0}, {"surprised", 70.0}, {"fearful", 110.0},
        {"angry", 135.0}, {"disgusted", 160.0}, {"sad", 200.0},
    };
    std::map<std::string, Eigen::VectorXd> table;
    for (const auto& [label, deg] : entries) {
        const double rad = deg * std::numbers::pi / 180.0;
        table[label] = Eigen::Vector2d(std::cos(rad), std::sin(rad));
    }
    return EmotionEmbedding(table);
}

EmotionEmbedding EmotionEmbedding::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("embedding file not found: " + path.string());
    DelimitedTable raw = read_delimited(path);
    // The first line is a header only if its coordinates do not parse.
    std::vector<std::vector<std::string>> rows = raw.rows;
    std::vector<std::size_t> lines = raw.line_numbers;
    bool header_is_data = raw.header.size() >= 2;
    for (std::size_t k = 1; k < raw.header.size() && header_is_data; ++k) {
        try {
            parse_double(raw.header[k], "");
        } catch (const Error&) {
            header_is_data = false;
        }
    }
    if (header_is_data) {
        rows.insert(rows.begin(), raw.header);
        lines.insert(lines.begin(), 1);
    }
    std::map<std::string, Eigen::VectorXd> table;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& fields = rows[r];
        const std::string where = path.string() + ":" + std::to_string(lines[r]);
        if (fields.size() < 2) throw ConfigError(where + ": expected label and coordinates");
        Eigen::VectorXd coords(static_cast<Index>(fields.size() - 1));
        try {
            for (std::size_t k = 1; k < fields.size(); ++k) coords(static_cast<Index>(k - 1)) = parse_double(fields[k], where);
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
        if (table.count(fields[0])) throw ConfigError(where + ": duplicate label '" + fields[0] + "'");
        table[fields[0]] = coords;
    }
    if (table.empty()) throw ConfigError("embedding file has no entries: " + path.string());
    return EmotionEmbedding(table);
}

EmotionPoint EmotionEmbedding::lookup(const std::string& label) const {
    const auto it = table_.find(label);
    if (it == table_.end()) throw ConfigError("unknown emotion label '" + label + "'");
    return EmotionPoint{it->second, label};
}

std::vector<EmotionPoint> default_emotion_embedding(const std::vector<std::string>& labels,
                                                    const EmotionEmbedding& table) {
    std::vector<EmotionPoint> out;
    out.reserve(labels.size());
    for (const auto& label : labels) out.push_back(table.lookup(label));
    return out;
}

}  // namespace vitl
