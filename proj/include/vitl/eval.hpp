#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vitl/data.hpp"
#include "vitl/model.hpp"

namespace vitl {

/// Which triplet construction an experiment trains and tests on.
struct TaskMode {
    enum class Kind { Single, Joint };
    Kind kind = Kind::Single;
    std::string theta0 = kNeutralLabel;

    static TaskMode single(std::string label = kNeutralLabel) { return {Kind::Single, std::move(label)}; }
    static TaskMode joint() { return {Kind::Joint, {}}; }
};

TripletDataset build_triplets(const TrajectoryDataset& data, const TaskMode& mode);

/// Test error over observed pairs. `mse_half` is the training loss convention.
struct Score {
    double mse = 0.0;
    double mse_half = 0.0;
    Index n_pairs = 0;
};

Score score(const VitlModel& model, const TripletDataset& test);

/// 1 / median of the pairwise squared distances between rows (1.0 if all coincide).
double median_heuristic_gamma(const Eigen::MatrixXd& rows);

// ---------------------------------------------------------------------------
// Splits by identity

struct SplitPlan {
    Index n_splits = 10;
    double test_fraction = 0.10;
    Index fold_count = 6;
    std::uint64_t seed = 0;
};

struct IdentitySplit {
    Index split_id = 0;
    std::vector<Index> train_ids;
    std::vector<Index> test_ids;
    TrajectoryDataset train;
    TrajectoryDataset test;
};

/// round(test_fraction * n) identities go to the test side of each split.
std::vector<IdentitySplit> identity_split(const TrajectoryDataset& data, const SplitPlan& plan);

/// Fold label per identity (balanced, shuffled with `seed`).
std::vector<Index> assign_folds(Index n, Index folds, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Cross-validation

struct GridSpec {
    std::vector<double> gamma_x;
    std::vector<double> gamma_theta;
    std::vector<double> lambda;

    void validate() const;
    static std::vector<double> log_space(double lo, double hi, Index count);
};

struct Hyperparameters {
    double gamma_x = 1.0;
    double gamma_theta = 1.0;
    double lambda = 1.0;
};

struct CvRecord {
    Index fold = 0;
    Hyperparameters hp;
    Score score;
};

struct CvSummary {
    Hyperparameters hp;
    double mean_mse = 0.0;
    double mean_mse_half = 0.0;
};

struct CvResult {
    Hyperparameters best;
    std::vector<CvRecord> records;   // every (grid point, fold)
    std::vector<CvSummary> summary;  // one per grid point, grid order

    std::string to_csv() const;
    std::string to_json() const;
};

/// K-fold CV by identity. Selects the grid point with the smallest mean
/// validation error; ties go to the larger lambda, then the smaller gamma_x,
/// then the smaller gamma_theta.
CvResult cross_validate(const TrajectoryDataset& train, const GridSpec& grid, Index folds, const TaskMode& mode,
                        std::uint64_t seed, const AStructure<double>& a = IdentityA{});

// ---------------------------------------------------------------------------
// Sweeps

struct SplitScore {
    Index split_id = 0;
    Score score;
};

struct RankRow {
    Index rank = 0;
    double mean = 0.0;  // test mse_half over splits
    double std = 0.0;
    std::vector<SplitScore> splits;
};

struct RankSweepResult {
    std::vector<RankRow> rows;
    Index increases = 0;  // adjacent rank pairs where the mean error goes up

    bool monotone_nonincreasing() const { return increases == 0; }
    std::string to_csv() const;
    std::string to_json() const;
};

/// For each rank r, A is the rank-r projection onto the top eigenvectors of
/// the training outputs' Y^T Y, recomputed per split.
RankSweepResult rank_sweep(const TrajectoryDataset& data, const KernelSpec<double>& spec, double lambda,
                           const std::vector<Index>& ranks, const SplitPlan& plan, const TaskMode& mode);

struct MaskRow {
    double observed_fraction = 1.0;
    double mean_mse_half = 0.0;  // mean over splits of the per-split mask average
    double log_min = 0.0;
    double log_mean = 0.0;
    double log_max = 0.0;
    std::vector<SplitScore> splits;  // mask-averaged
};

struct MaskSweepResult {
    std::vector<MaskRow> rows;

    std::string to_csv() const;
    std::string to_json() const;
};

/// Trains on masked copies of each split's training identities and scores on
/// the untouched test identities.
MaskSweepResult missing_data_sweep(const TrajectoryDataset& data, const KernelSpec<double>& spec, double lambda,
                                   const std::vector<double>& fractions, Index masks_per_split, const SplitPlan& plan,
                                   const TaskMode& mode);

// ---------------------------------------------------------------------------
// Paths through the style space

/// r * direction / ||direction|| for each radius.
std::vector<EmotionPoint> radial_path(const EmotionPoint& direction, const std::vector<double>& radii);

/// `steps` points on the arc of radius ||from|| along the shorter way from
/// `from` towards `to`. Endpoints are returned verbatim when the norms agree.
std::vector<EmotionPoint> angular_path(const EmotionPoint& from, const EmotionPoint& to, Index steps);

/// Rows "path_index, theta..., landmarks...".
std::string format_trajectory(const std::vector<EmotionPoint>& thetas, const std::vector<LandmarkVector>& landmarks);

// ---------------------------------------------------------------------------
// Synthetic data with known ground truth

/// Identities live on a smooth latent manifold: identity i with latent s_i has
///   z_i(theta) = U sum_k k_Theta(theta, w_k) b_k(s_i) (+ noise),
/// where the anchors w_k are the emotion grid (neutral at the origin) and
/// b_k(s) = W0_k + sum_l exp(-|s - v_l|^2 / (2 width^2)) W_{l,k}.
struct SyntheticTask {
    Index n = 50;
    Index m = 7;
    Index d = 10;
    Index p = 2;
    std::uint64_t seed = 0;
    double noise_sigma = 0.0;
    double gamma_theta = 1.0;
    Index output_rank = 0;  // 0 means full rank d
    Index latent_dim = 1;
    Index n_bumps = 4;
    double bump_width = 0.5;
    double amplitude = 1.0;
    double theta_jitter = 0.0;  // per-identity perturbation of the non-neutral emotions
};

struct SyntheticData {
    TrajectoryDataset data;
    Eigen::MatrixXd grid;     // m x p anchors w_k
    Eigen::MatrixXd latent;   // n x latent_dim
    Eigen::MatrixXd basis;    // d x r
    std::vector<Eigen::MatrixXd> coefficients;  // per identity, m x r
    double gamma_theta = 1.0;

    /// Noiseless z_i(theta).
    LandmarkVector oracle(Index identity, const Eigen::VectorXd& theta) const;
};

SyntheticData generate_synthetic(const SyntheticTask& task);

// Random h*(x)(theta) = sum_l sum_k k_X(x, a_l) k_Theta(theta, w_k) W_{l,k} with anchors a_l drawn
// from the rows of `inputs` and w_k the rows of `grid`: a target inside the hypothesis space of `spec`.
VitlModel random_rkhs_function(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& grid,
                               const KernelSpec<double>& spec, Index n_anchors, std::uint64_t seed);

// Same triplets and mask with every output replaced by the truth's prediction.
TripletDataset relabel(const TripletDataset& data, const VitlModel& truth);

}  // namespace vitl
