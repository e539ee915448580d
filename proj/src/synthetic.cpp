#include <cmath>
#include <numbers>
#include <random>

#include "vitl/eval.hpp"
#include "vitl/kernel.hpp"
#include "vitl/random.hpp"

namespace vitl {

namespace {

Eigen::MatrixXd gaussian_matrix(Index rows, Index cols, std::mt19937_64& engine, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd out(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) out(r, c) = scale * normal(engine);
    }
    return out;
}

Eigen::MatrixXd uniform_matrix(Index rows, Index cols, std::mt19937_64& engine) {
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    Eigen::MatrixXd out(rows, cols);
    for (Index r = 0; r < rows; ++r) {
        for (Index c = 0; c < cols; ++c) out(r, c) = uniform(engine);
    }
    return out;
}

// Neutral at the origin, the rest spread over the unit sphere.
Eigen::MatrixXd emotion_grid(Index m, Index p, std::mt19937_64& engine) {
    Eigen::MatrixXd grid = Eigen::MatrixXd::Zero(m, p);
    const Index k_other = m - 1;
    for (Index k = 1; k < m; ++k) {
        if (p == 2) {
            const double angle = 2.0 * std::numbers::pi * static_cast<double>(k - 1) / static_cast<double>(k_other) + 0.3;
            grid.row(k) << std::cos(angle), std::sin(angle);
        } else if (p == 1) {
            grid(k, 0) = k_other == 1 ? 1.0 : -1.0 + 2.0 * static_cast<double>(k - 1) / static_cast<double>(k_other - 1);
        } else {
            Eigen::VectorXd v = gaussian_matrix(p, 1, engine);
            grid.row(k) = (v / v.norm()).transpose();
        }
    }
    return grid;
}

}  // namespace

LandmarkVector SyntheticData::oracle(Index identity, const Eigen::VectorXd& theta) const {
    if (identity < 0 || identity >= static_cast<Index>(coefficients.size())) {
        throw InvalidArgument("oracle: identity out of range");
    }
    if (theta.size() != grid.cols()) throw DimensionError("oracle: emotion has the wrong dimension");
    const Eigen::MatrixXd& b = coefficients[static_cast<std::size_t>(identity)];
    Eigen::VectorXd mixed = Eigen::VectorXd::Zero(b.cols());
    for (Index k = 0; k < grid.rows(); ++k) mixed += gaussian_kernel(theta, grid.row(k), gamma_theta) * b.row(k).transpose();
    return basis * mixed;
}

SyntheticData generate_synthetic(const SyntheticTask& task) {
    if (task.n < 1 || task.m < 1 || task.d < 1 || task.p < 1) throw InvalidArgument("synthetic: n, m, d, p must be >= 1");
    if (!(task.noise_sigma >= 0.0) || !(task.gamma_theta > 0.0) || !(task.bump_width > 0.0) ||
        !(task.theta_jitter >= 0.0)) {
        throw InvalidArgument("synthetic: sigma, jitter >= 0 and gamma_theta, bump_width > 0 required");
    }
    if (task.output_rank < 0 || task.output_rank > task.d) throw InvalidArgument("synthetic: output_rank outside [0, d]");
    if (task.latent_dim < 1 || task.n_bumps < 1) throw InvalidArgument("synthetic: latent_dim and n_bumps must be >= 1");
    const Index r = task.output_rank == 0 ? task.d : task.output_rank;

    SyntheticData out;
    out.gamma_theta = task.gamma_theta;

    // Shared structure first, then per-identity draws, so that growing n keeps
    // the leading identities unchanged.
    auto engine = make_engine(task.seed, {stream::kSynthetic});
    out.grid = emotion_grid(task.m, task.p, engine);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian_matrix(task.d, r, engine));
    out.basis = qr.householderQ() * Eigen::MatrixXd::Identity(task.d, r);
    const Eigen::MatrixXd centers = uniform_matrix(task.n_bumps, task.latent_dim, engine);
    const Eigen::MatrixXd base = gaussian_matrix(task.m, r, engine, task.amplitude);
    std::vector<Eigen::MatrixXd> weights;
    for (Index l = 0; l < task.n_bumps; ++l) weights.push_back(gaussian_matrix(task.m, r, engine, task.amplitude));
    out.latent = uniform_matrix(task.n, task.latent_dim, engine);

    const double inv_two_w2 = 1.0 / (2.0 * task.bump_width * task.bump_width);
    for (Index i = 0; i < task.n; ++i) {
        Eigen::MatrixXd b = base;
        for (Index l = 0; l < task.n_bumps; ++l) {
            const double phi = std::exp(-(out.latent.row(i) - centers.row(l)).squaredNorm() * inv_two_w2);
            b += phi * weights[static_cast<std::size_t>(l)];
        }
        out.coefficients.push_back(std::move(b));
    }

    auto jitter_engine = make_engine(task.seed, {stream::kSynthetic, 1});
    auto noise_engine = make_engine(task.seed, {stream::kNoise});
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Index i = 0; i < task.n; ++i) {
        IdentityRecord rec;
        rec.id = "id" + std::to_string(i);
        for (Index k = 0; k < task.m; ++k) {
            Observation obs;
            obs.emotion.label = k == 0 ? std::string(kNeutralLabel) : "e" + std::to_string(k);
            obs.emotion.coords = out.grid.row(k).transpose();
            if (k > 0 && task.theta_jitter > 0.0) {
                for (Index c = 0; c < task.p; ++c) obs.emotion.coords(c) += task.theta_jitter * normal(jitter_engine);
            }
            obs.landmarks = out.oracle(i, obs.emotion.coords);
            if (task.noise_sigma > 0.0) {
                for (Index c = 0; c < task.d; ++c) obs.landmarks(c) += task.noise_sigma * normal(noise_engine);
            }
            rec.observations.push_back(std::move(obs));
        }
        out.data.identities.push_back(std::move(rec));
    }
    return out;
}

VitlModel random_rkhs_function(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& grid,
                               const KernelSpec<double>& spec, Index n_anchors, std::uint64_t seed) {
    if (inputs.rows() < 1 || grid.rows() < 1) throw InvalidArgument("random_rkhs_function: no inputs or grid");
    if (n_anchors < 1) throw InvalidArgument("random_rkhs_function: n_anchors must be >= 1");
    auto engine = make_engine(seed, {stream::kSynthetic, 2});
    std::uniform_int_distribution<Index> pick(0, inputs.rows() - 1);
    const Index m = grid.rows();
    Eigen::MatrixXd anchors(n_anchors, inputs.cols());
    Eigen::MatrixXd thetas(n_anchors * m, grid.cols());
    for (Index l = 0; l < n_anchors; ++l) {
        anchors.row(l) = inputs.row(pick(engine));
        thetas.middleRows(m * l, m) = grid;
    }
    Eigen::MatrixXd weights = gaussian_matrix(n_anchors * m, inputs.cols(), engine);
    return VitlModel(std::move(weights), std::move(anchors), std::move(thetas),
                     Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(n_anchors * m, true), m, spec, 1.0);
}

TripletDataset relabel(const TripletDataset& data, const VitlModel& truth) {
    TripletDataset out = data;
    out.outputs = predict_triplets(truth, data);
    return out;
}

}  // namespace vitl
