#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "vitl/errors.hpp"

namespace vitl {

using Index = Eigen::Index;
using MaskMatrix = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// A point of the style space, valence-arousal by default (p = 2).
struct EmotionPoint {
    Eigen::VectorXd coords;
    std::string label;

    Index dim() const { return coords.size(); }
};

/// Landmarks interleaved as (x1, y1, ..., xM, yM), so d = 2M.
using LandmarkVector = Eigen::VectorXd;

struct Observation {
    EmotionPoint emotion;
    LandmarkVector landmarks;
};

struct IdentityRecord {
    std::string id;
    std::vector<Observation> observations;  // m per identity
};

/// Per-identity trajectories observed at m emotions each, with an optional
/// n x m observation mask (1 = used for learning).
struct TrajectoryDataset {
    std::vector<IdentityRecord> identities;
    std::optional<MaskMatrix> mask;

    Index n() const { return static_cast<Index>(identities.size()); }
    Index m() const { return identities.empty() ? 0 : static_cast<Index>(identities.front().observations.size()); }
    Index d() const;
    Index p() const;

    bool observed(Index i, Index j) const { return !mask || (*mask)(i, j) != 0; }
    Index n_observed() const;

    /// Throws DataError when identities disagree on m, d or p, or the mask shape is off.
    void validate() const;
};

/// Triplets (x_i, Y_i, (theta_{i,j})_j) flattened into matrices.
/// Row m*i + j of `outputs`/`thetas`/`observed` belongs to triplet i, emotion j.
struct TripletDataset {
    Eigen::MatrixXd inputs;   // t x d
    Eigen::MatrixXd outputs;  // (t m) x d
    Eigen::MatrixXd thetas;   // (t m) x p
    Eigen::Array<bool, Eigen::Dynamic, 1> observed;  // t m
    Index m = 0;
    std::vector<Index> source_identity;  // t, index into the originating TrajectoryDataset
    std::vector<Index> input_emotion;    // t, emotion index j the input was taken from

    Index t() const { return inputs.rows(); }
    Index d() const { return inputs.cols(); }
    Index p() const { return thetas.cols(); }
    Index n_pairs() const { return t() * m; }
    Index n_observed() const { return observed.count(); }
    bool fully_observed() const { return n_observed() == n_pairs(); }

    /// True when every triplet carries the same emotion list (within `tol`).
    bool shared_grid(double tol = 1e-12) const;
    /// Emotion grid of triplet `i` (m x p).
    Eigen::MatrixXd grid(Index i = 0) const { return thetas.middleRows(m * i, m); }

    void validate() const;
};

/// Single emotional input: x_i = z_i(theta0), outputs are all of identity i's observations.
/// The reference emotion is matched by label or by coordinates (within 1e-10).
using EmotionRef = std::variant<std::string, EmotionPoint>;

TripletDataset build_single(const TrajectoryDataset& data, const EmotionRef& theta0);

/// Joint emotional input: one triplet per observed (i, l), t = nm when unmasked.
TripletDataset build_joint(const TrajectoryDataset& data);

/// Keeps the triplets at the given indices, in that order.
TripletDataset select_triplets(const TripletDataset& data, std::span<const Index> rows);

/// Draws a uniform subset of exactly round(observed_fraction * n * m) entries
/// and intersects it with any existing mask.
TrajectoryDataset apply_mask(const TrajectoryDataset& data, double observed_fraction, std::uint64_t seed);

/// Identities at the given indices (mask rows follow).
TrajectoryDataset subset_identities(const TrajectoryDataset& data, std::span<const Index> indices);

// ---------------------------------------------------------------------------
// Emotion embedding

class EmotionEmbedding {
public:
    EmotionEmbedding() = default;
    /// Entries are l2-normalized on insertion; "neutral" always maps to the origin.
    explicit EmotionEmbedding(const std::map<std::string, Eigen::VectorXd>& table);

    static EmotionEmbedding load(const std::filesystem::path& path);
    /// Placeholder table with distinct angles; substitute measured centroids for real work.
    static EmotionEmbedding builtin();

    EmotionPoint lookup(const std::string& label) const;
    bool contains(const std::string& label) const { return table_.count(label) != 0; }
    Index dim() const { return dim_; }
    const std::map<std::string, Eigen::VectorXd>& table() const { return table_; }

private:
    std::map<std::string, Eigen::VectorXd> table_;
    Index dim_ = 2;
};

inline constexpr const char* kNeutralLabel = "neutral";

std::vector<EmotionPoint> default_emotion_embedding(const std::vector<std::string>& labels,
                                                    const EmotionEmbedding& table);

// ---------------------------------------------------------------------------
// Text formats

struct DelimitedTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
};

/// Reads a delimited text file; blank lines and lines starting with '#' are skipped.
DelimitedTable read_delimited(const std::filesystem::path& path);

/// Splits a line on `delim`, trimming surrounding whitespace from each field.
std::vector<std::string> split_fields(const std::string& line, char delim);
/// Comma unless the header contains a tab.
char detect_delimiter(const std::string& header_line);
double parse_double(const std::string& field, const std::string& context);

/// Dataset file: header, then one row per observation:
/// identity_id, emotion_label, p emotion coordinates (columns named theta*), d landmark coordinates.
/// With no theta columns the coordinates come from `embedding`.
TrajectoryDataset load_dataset(const std::filesystem::path& path, const EmotionEmbedding* embedding = nullptr);
void save_dataset(const TrajectoryDataset& data, const std::filesystem::path& path);

/// Writes `contents` to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace vitl
