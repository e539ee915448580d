#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vitl/data.hpp"
#include "vitl/kernel.hpp"

namespace vitl {

enum class SolverPath { Ridge, Sylvester, Kronecker };

const char* to_string(SolverPath path);

struct FitOptions {
    /// Skip the Kronecker path even when the emotion grid is shared.
    bool force_dense = false;
};

/// Fitted estimator
///   h(x)(theta) = sum over observed (i, j) of k_X(x, x_i) k_Theta(theta, theta_{i,j}) A c_{i,j}.
/// Immutable once built; safe to share between threads.
class VitlModel {
public:
    /// `observed` has t*m entries; `coefficients` has one row per observed pair,
    /// in increasing pair index m*i + j.
    VitlModel(Eigen::MatrixXd coefficients, Eigen::MatrixXd anchors_x, Eigen::MatrixXd anchors_theta,
              Eigen::Array<bool, Eigen::Dynamic, 1> observed, Index m, KernelSpec<double> spec, double lambda,
              SolverPath path = SolverPath::Ridge);

    const Eigen::MatrixXd& coefficients() const { return coefficients_; }
    /// Rows are (A c_{i,j})^T; predictions are linear in these.
    const Eigen::MatrixXd& effective_coefficients() const { return effective_; }
    const Eigen::MatrixXd& anchors_x() const { return anchors_x_; }
    const Eigen::MatrixXd& anchors_theta() const { return anchors_theta_; }
    const Eigen::Array<bool, Eigen::Dynamic, 1>& observed() const { return observed_; }
    const KernelSpec<double>& spec() const { return spec_; }
    const Eigen::MatrixXd& a_matrix() const { return a_; }
    double lambda() const { return lambda_; }
    SolverPath solver_path() const { return path_; }

    Index t() const { return anchors_x_.rows(); }
    Index m() const { return m_; }
    Index d() const { return anchors_x_.cols(); }
    Index p() const { return anchors_theta_.cols(); }
    Index n_observed() const { return coefficients_.rows(); }
    /// Pair index (m*i + j) of coefficient row r.
    Index pair_of_row(Index r) const { return pair_rows_(r); }
    /// Numerical rank of A (eigenvalues above 1/2 for projections, 1e-10 ||A|| otherwise).
    Index rank_A() const;

    VitlModel with_coefficients(Eigen::MatrixXd coefficients) const;

    /// Gram matrix over the observed anchor pairs.
    Eigen::MatrixXd observed_gram() const;

private:
    Eigen::MatrixXd coefficients_;
    Eigen::MatrixXd anchors_x_;
    Eigen::MatrixXd anchors_theta_;
    Eigen::Array<bool, Eigen::Dynamic, 1> observed_;
    Index m_;
    KernelSpec<double> spec_;
    double lambda_;
    SolverPath path_;

    Eigen::MatrixXd a_;
    Eigen::MatrixXd effective_;
    Eigen::Matrix<Index, Eigen::Dynamic, 1> pair_rows_;
    Eigen::Matrix<Index, Eigen::Dynamic, 1> owner_;  // anchor input row of each coefficient row
    Eigen::MatrixXd observed_thetas_;
};

/// Fits the regularized least-squares problem with n_obs lambda shift, choosing
/// the Kronecker solver for fully observed shared grids, Sylvester for A != I,
/// and the Cholesky ridge solve otherwise.
VitlModel fit(const TripletDataset& data, const KernelSpec<double>& spec, double lambda, const FitOptions& options = {});

LandmarkVector predict(const VitlModel& model, const LandmarkVector& x, const EmotionPoint& theta);
LandmarkVector predict(const VitlModel& model, const LandmarkVector& x, const Eigen::VectorXd& theta);
std::vector<LandmarkVector> predict_curve(const VitlModel& model, const LandmarkVector& x,
                                          std::span<const EmotionPoint> thetas);

/// Predictions for every pair of `data`, (t m) x d in the triplet row layout.
Eigen::MatrixXd predict_triplets(const VitlModel& model, const TripletDataset& data);

/// Mean over observed pairs of 1/2 ||prediction - target||^2.
double empirical_risk(const Eigen::MatrixXd& predictions, const TripletDataset& data);
double empirical_risk(const VitlModel& model, const TripletDataset& data);

/// ||h||^2 = Tr(K C A C^T), clamped at zero within round-off.
double rkhs_norm_sq(const VitlModel& model);

/// empirical_risk + lambda/2 ||h||^2.
double regularized_risk(const VitlModel& model, const TripletDataset& data);

/// The same function expressed with a new output matrix: each c_{i,j} becomes
/// A_new^{-1} A_old c_{i,j}. Both matrices must be invertible.
VitlModel reparameterize(const VitlModel& model, const Eigen::MatrixXd& a_new);

struct Metrics {
    double mse = 0.0;       // mean over observed pairs of ||delta||^2
    double mse_half = 0.0;  // mean of 1/2 ||delta||^2 (the training loss)
    double rkhs_norm_sq = 0.0;
    Index n_observed = 0;
    double lambda = 0.0;
    double gamma_x = 0.0;
    double gamma_theta = 0.0;
    Index rank_A = 0;

    std::string to_json() const;
};

Metrics evaluate(const VitlModel& model, const TripletDataset& data);

// ---------------------------------------------------------------------------
// Model container: "VITL-MODEL <version>\n", a one-line JSON header, then
// little-endian float64 arrays in header order.

inline constexpr int kModelFormatVersion = 1;

void save_model(const VitlModel& model, const std::filesystem::path& path);
VitlModel load_model(const std::filesystem::path& path);
std::string serialize_model(const VitlModel& model);
VitlModel deserialize_model(const std::string& bytes);

}  // namespace vitl
