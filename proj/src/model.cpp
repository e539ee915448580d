#include "vitl/model.hpp"

#include <cmath>

#include "json.hpp"
#include "vitl/solver.hpp"

namespace vitl {

const char* to_string(SolverPath path) {
    switch (path) {
        case SolverPath::Ridge: return "ridge";
        case SolverPath::Sylvester: return "sylvester";
        case SolverPath::Kronecker: return "kronecker";
    }
    return "unknown";
}

VitlModel::VitlModel(Eigen::MatrixXd coefficients, Eigen::MatrixXd anchors_x, Eigen::MatrixXd anchors_theta,
                     Eigen::Array<bool, Eigen::Dynamic, 1> observed, Index m, KernelSpec<double> spec, double lambda,
                     SolverPath path)
    : coefficients_(std::move(coefficients)),
      anchors_x_(std::move(anchors_x)),
      anchors_theta_(std::move(anchors_theta)),
      observed_(std::move(observed)),
      m_(m),
      spec_(std::move(spec)),
      lambda_(lambda),
      path_(path) {
    const Index t = anchors_x_.rows();
    if (t < 1 || m_ < 1 || anchors_x_.cols() < 1) throw InvalidArgument("VitlModel: empty anchor set");
    if (anchors_theta_.rows() != t * m_) throw DimensionError("VitlModel: anchors_theta must have t*m rows");
    if (observed_.size() != t * m_) throw DimensionError("VitlModel: observed flags must have t*m entries");
    if (coefficients_.rows() != observed_.count()) {
        throw DimensionError("VitlModel: coefficient rows (" + std::to_string(coefficients_.rows()) +
                             ") differ from observed pairs (" + std::to_string(observed_.count()) + ")");
    }
    if (coefficients_.cols() != anchors_x_.cols()) throw DimensionError("VitlModel: coefficient width differs from d");
    if (!(lambda_ > 0.0)) throw InvalidArgument("VitlModel: lambda must be positive");
    spec_.validate(d());

    a_ = materialize_A(spec_, d());
    effective_ = coefficients_ * a_;

    const Index n_obs = coefficients_.rows();
    pair_rows_.resize(n_obs);
    owner_.resize(n_obs);
    observed_thetas_.resize(n_obs, p());
    Index r = 0;
    for (Index pair = 0; pair < t * m_; ++pair) {
        if (!observed_(pair)) continue;
        pair_rows_(r) = pair;
        owner_(r) = pair / m_;
        observed_thetas_.row(r) = anchors_theta_.row(pair);
        ++r;
    }
}

Index VitlModel::rank_A() const {
    if (const auto* low = std::get_if<LowRankA<double>>(&spec_.a)) return low->rank;
    if (spec_.is_identity()) return d();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a_, Eigen::EigenvaluesOnly);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    return (es.eigenvalues().array() > 1e-10 * top).count();
}

VitlModel VitlModel::with_coefficients(Eigen::MatrixXd coefficients) const {
    return VitlModel(std::move(coefficients), anchors_x_, anchors_theta_, observed_, m_, spec_, lambda_, path_);
}

Eigen::MatrixXd VitlModel::observed_gram() const {
    return build_gram_pairs(anchors_x_, observed_thetas_, owner_, spec_);
}

// ---------------------------------------------------------------------------

VitlModel fit(const TripletDataset& data, const KernelSpec<double>& spec, double lambda, const FitOptions& options) {
    data.validate();
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidArgument("fit: lambda must be positive and finite");
    spec.validate(data.d());
    const Index n_obs = data.n_observed();
    if (n_obs == 0) throw DataError("fit: no observed pairs");
    const Eigen::MatrixXd a = materialize_A(spec, data.d());

    if (!options.force_dense && data.fully_observed() && data.shared_grid()) {
        const auto gram = build_gram_kron(data.inputs, data.grid(0), spec);
        Eigen::MatrixXd c = solve_kron(gram.kx(), gram.ktheta(), data.outputs, a, lambda);
        return VitlModel(std::move(c), data.inputs, data.thetas, data.observed, data.m, spec, lambda,
                         SolverPath::Kronecker);
    }

    Eigen::Matrix<Index, Eigen::Dynamic, 1> owner(n_obs);
    Eigen::MatrixXd thetas(n_obs, data.p());
    Eigen::MatrixXd y(n_obs, data.d());
    Index r = 0;
    for (Index pair = 0; pair < data.n_pairs(); ++pair) {
        if (!data.observed(pair)) continue;
        owner(r) = pair / data.m;
        thetas.row(r) = data.thetas.row(pair);
        y.row(r) = data.outputs.row(pair);
        ++r;
    }
    const Eigen::MatrixXd k = build_gram_pairs(data.inputs, thetas, owner, spec);
    if (spec.is_identity()) {
        return VitlModel(solve_ridge_identity(k, y, lambda), data.inputs, data.thetas, data.observed, data.m, spec,
                         lambda, SolverPath::Ridge);
    }
    return VitlModel(solve_sylvester(k, y, a, lambda), data.inputs, data.thetas, data.observed, data.m, spec, lambda,
                     SolverPath::Sylvester);
}

namespace {

Eigen::VectorXd input_weights(const VitlModel& model, const LandmarkVector& x) {
    if (x.size() != model.d()) {
        throw DimensionError("predict: input has dimension " + std::to_string(x.size()) + ", model expects " +
                             std::to_string(model.d()));
    }
    Eigen::VectorXd kx(model.t());
    for (Index i = 0; i < model.t(); ++i) kx(i) = gaussian_kernel(x, model.anchors_x().row(i), model.spec().gamma_x);
    return kx;
}

LandmarkVector predict_with_weights(const VitlModel& model, const Eigen::VectorXd& kx, const Eigen::VectorXd& theta) {
    if (theta.size() != model.p()) {
        throw DimensionError("predict: emotion has dimension " + std::to_string(theta.size()) + ", model expects " +
                             std::to_string(model.p()));
    }
    const Index n_obs = model.n_observed();
    Eigen::VectorXd w(n_obs);
    for (Index r = 0; r < n_obs; ++r) {
        const Index pair = model.pair_of_row(r);
        w(r) = kx(pair / model.m()) *
               gaussian_kernel(theta, model.anchors_theta().row(pair), model.spec().gamma_theta);
    }
    return model.effective_coefficients().transpose() * w;
}

}  // namespace

LandmarkVector predict(const VitlModel& model, const LandmarkVector& x, const Eigen::VectorXd& theta) {
    return predict_with_weights(model, input_weights(model, x), theta);
}

LandmarkVector predict(const VitlModel& model, const LandmarkVector& x, const EmotionPoint& theta) {
    return predict(model, x, theta.coords);
}

std::vector<LandmarkVector> predict_curve(const VitlModel& model, const LandmarkVector& x,
                                          std::span<const EmotionPoint> thetas) {
    std::vector<LandmarkVector> out;
    out.reserve(thetas.size());
    if (thetas.empty()) return out;
    const Eigen::VectorXd kx = input_weights(model, x);
    for (const auto& theta : thetas) out.push_back(predict_with_weights(model, kx, theta.coords));
    return out;
}

Eigen::MatrixXd predict_triplets(const VitlModel& model, const TripletDataset& data) {
    if (data.d() != model.d() || data.p() != model.p()) throw DimensionError("predict_triplets: dimension mismatch");
    Eigen::MatrixXd out(data.n_pairs(), data.d());
    for (Index i = 0; i < data.t(); ++i) {
        const Eigen::VectorXd kx = input_weights(model, data.inputs.row(i).transpose());
        for (Index j = 0; j < data.m; ++j) {
            const Index row = data.m * i + j;
            out.row(row) = predict_with_weights(model, kx, data.thetas.row(row).transpose()).transpose();
        }
    }
    return out;
}

double empirical_risk(const Eigen::MatrixXd& predictions, const TripletDataset& data) {
    if (predictions.rows() != data.n_pairs() || predictions.cols() != data.d()) {
        throw DimensionError("empirical_risk: prediction shape mismatch");
    }
    const Index n_obs = data.n_observed();
    if (n_obs == 0) throw DataError("empirical_risk: no observed pairs");
    double total = 0.0;
    for (Index row = 0; row < data.n_pairs(); ++row) {
        if (data.observed(row)) total += 0.5 * (predictions.row(row) - data.outputs.row(row)).squaredNorm();
    }
    return total / static_cast<double>(n_obs);
}

double empirical_risk(const VitlModel& model, const TripletDataset& data) {
    return empirical_risk(predict_triplets(model, data), data);
}

double rkhs_norm_sq(const VitlModel& model) {
    const Eigen::MatrixXd k = model.observed_gram();
    const Eigen::MatrixXd kc = k * model.coefficients();
    const double value = kc.cwiseProduct(model.effective_coefficients()).sum();
    if (value >= 0.0) return value;
    const double scale = kc.norm() * model.effective_coefficients().norm();
    if (value >= -1e-10 * scale) return 0.0;
    throw NumericalError("rkhs_norm_sq: negative squared norm " + std::to_string(value));
}

double regularized_risk(const VitlModel& model, const TripletDataset& data) {
    return empirical_risk(model, data) + 0.5 * model.lambda() * rkhs_norm_sq(model);
}

namespace {

void require_invertible(const Eigen::MatrixXd& a, const char* what) {
    if (a.rows() != a.cols()) throw InvalidArgument(std::string(what) + " is not square");
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw InvalidArgument(std::string(what) + " is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    if (!(es.eigenvalues()(0) > 1e-10 * top)) throw InvalidArgument(std::string(what) + " is not invertible PSD");
}

}  // namespace

VitlModel reparameterize(const VitlModel& model, const Eigen::MatrixXd& a_new) {
    if (a_new.rows() != model.d() || a_new.cols() != model.d()) throw DimensionError("reparameterize: A_new has wrong size");
    require_invertible(a_new, "reparameterize: A_new");
    const Eigen::MatrixXd& a_old = model.a_matrix();
    require_invertible(a_old, "reparameterize: A_old");

    KernelSpec<double> spec = model.spec();
    spec.a = ExplicitA<double>{a_new};
    if (a_new == a_old) {
        return VitlModel(model.coefficients(), model.anchors_x(), model.anchors_theta(), model.observed(), model.m(),
                         spec, model.lambda(), model.solver_path());
    }
    // c -> A_new^{-1} A_old c, i.e. C -> C A_old A_new^{-1} in row layout
    const Eigen::MatrixXd rhs = a_old * model.coefficients().transpose();
    Eigen::MatrixXd c_new = a_new.ldlt().solve(rhs).transpose();
    return VitlModel(std::move(c_new), model.anchors_x(), model.anchors_theta(), model.observed(), model.m(), spec,
                     model.lambda(), model.solver_path());
}

std::string Metrics::to_json() const {
    nlohmann::ordered_json j;
    j["mse"] = mse;
    j["mse_half"] = mse_half;
    j["rkhs_norm_sq"] = rkhs_norm_sq;
    j["n_observed"] = n_observed;
    j["lambda"] = lambda;
    j["gamma_x"] = gamma_x;
    j["gamma_theta"] = gamma_theta;
    j["rank_A"] = rank_A;
    return j.dump(2);
}

Metrics evaluate(const VitlModel& model, const TripletDataset& data) {
    Metrics out;
    out.mse_half = empirical_risk(model, data);
    out.mse = 2.0 * out.mse_half;
    out.rkhs_norm_sq = rkhs_norm_sq(model);
    out.n_observed = model.n_observed();
    out.lambda = model.lambda();
    out.gamma_x = model.spec().gamma_x;
    out.gamma_theta = model.spec().gamma_theta;
    out.rank_A = model.rank_A();
    return out;
}

}  // namespace vitl
