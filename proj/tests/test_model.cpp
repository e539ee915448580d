#include <filesystem>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "vitl/model.hpp"
#include "vitl/solver.hpp"

using namespace vitl;

namespace {

TripletDataset tiny() {
    TripletDataset data;
    data.m = 2;
    data.inputs.resize(2, 2);
    data.inputs << 0, 0, 1, 0;
    data.outputs.resize(4, 2);
    data.outputs << 1, 0, 0, 1, 2, 1, 1, -1;
    data.thetas.resize(4, 1);
    data.thetas << 0, 1, 0, 1;
    data.observed = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(4, true);
    data.source_identity = {0, 1};
    data.input_emotion = {0, 0};
    return data;
}

KernelSpec<double> tiny_spec() {
    KernelSpec<double> spec;
    spec.gamma_x = 0.5;
    spec.gamma_theta = 1.0;
    return spec;
}

TripletDataset random_triplets(Index t, Index m, Index d, std::mt19937_64& rng, bool shared = true) {
    TripletDataset data;
    data.m = m;
    data.inputs = oracle::random_normal(t, d, rng);
    data.outputs = oracle::random_normal(t * m, d, rng);
    const Eigen::MatrixXd grid = oracle::random_normal(m, 2, rng);
    data.thetas.resize(t * m, 2);
    for (Index i = 0; i < t; ++i) {
        data.thetas.middleRows(m * i, m) = shared ? grid : oracle::random_normal(m, 2, rng);
        data.source_identity.push_back(i);
        data.input_emotion.push_back(0);
    }
    data.observed = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(t * m, true);
    return data;
}

}  // namespace

TEST_CASE("frozen predictions of the 4-pair problem") {
    const Eigen::Vector2d x(0.5, 0.5);
    const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 0.5);

    const VitlModel plain = fit(tiny(), tiny_spec(), 0.1);
    CHECK(plain.solver_path() == SolverPath::Kronecker);
    const LandmarkVector y = predict(plain, x, theta);
    CHECK(y(0) == doctest::Approx(0.9340077130839795).epsilon(1e-12));
    CHECK(y(1) == doctest::Approx(0.23350192827099486).epsilon(1e-12));

    KernelSpec<double> spec = tiny_spec();
    Eigen::Matrix2d a2;
    a2 << 2, 1, 1, 2;
    spec.a = ExplicitA<double>{a2};
    const VitlModel shaped = fit(tiny(), spec, 0.1);
    const LandmarkVector z = predict(shaped, x, theta);
    CHECK(z(0) == doctest::Approx(1.0007929529858526).epsilon(1e-12));
    CHECK(z(1) == doctest::Approx(0.3002871681728678).epsilon(1e-12));
    CHECK(regularized_risk(shaped, tiny()) == doctest::Approx(0.26357845209838343).epsilon(1e-12));
}

TEST_CASE("solver paths agree") {
    std::mt19937_64 rng(31);
    TripletDataset data = random_triplets(5, 3, 4, rng);
    KernelSpec<double> spec;
    spec.gamma_x = 0.3;
    spec.gamma_theta = 0.7;
    const VitlModel kron = fit(data, spec, 1e-3);
    const VitlModel dense = fit(data, spec, 1e-3, FitOptions{true});
    CHECK(kron.solver_path() == SolverPath::Kronecker);
    CHECK(dense.solver_path() == SolverPath::Ridge);
    CHECK(oracle::rel_err(kron.coefficients(), dense.coefficients()) < 1e-9);

    spec.a = ExplicitA<double>{oracle::random_spd(4, rng)};
    const VitlModel syl = fit(data, spec, 1e-3, FitOptions{true});
    CHECK(syl.solver_path() == SolverPath::Sylvester);
    CHECK(oracle::rel_err(syl.coefficients(), fit(data, spec, 1e-3).coefficients()) < 1e-9);

    // a masked pair drops out of the system
    data.observed(4) = false;
    const VitlModel masked = fit(data, KernelSpec<double>{0.3, 0.7, IdentityA{}}, 1e-3);
    CHECK(masked.solver_path() == SolverPath::Ridge);
    CHECK(masked.n_observed() == 14);
    CHECK(masked.pair_of_row(4) == 5);

    // non-shared grids take the dense path
    const TripletDataset ragged = random_triplets(3, 2, 2, rng, false);
    CHECK(fit(ragged, KernelSpec<double>{}, 0.1).solver_path() == SolverPath::Ridge);
}

TEST_CASE("risk and norm against loop oracles") {
    std::mt19937_64 rng(5);
    TripletDataset data = random_triplets(4, 3, 3, rng);
    data.observed(2) = false;
    KernelSpec<double> spec{0.5, 1.5, ExplicitA<double>{oracle::random_spd(3, rng)}};
    const VitlModel model = fit(data, spec, 0.01);

    const Eigen::MatrixXd k = model.observed_gram();
    Eigen::MatrixXd y(model.n_observed(), 3);
    for (Index r = 0; r < model.n_observed(); ++r) y.row(r) = data.outputs.row(model.pair_of_row(r));
    CHECK(regularized_risk(model, data) ==
          doctest::Approx(oracle::loop_objective(model.coefficients(), k, y, model.a_matrix(), 0.01)).epsilon(1e-10));

    double loop_norm = 0.0;
    const Eigen::MatrixXd& c = model.coefficients();
    const Eigen::MatrixXd& a = model.a_matrix();
    for (Index r = 0; r < c.rows(); ++r)
        for (Index s = 0; s < c.rows(); ++s) loop_norm += k(r, s) * c.row(s).dot(a * c.row(r).transpose());
    CHECK(rkhs_norm_sq(model) == doctest::Approx(loop_norm).epsilon(1e-12));

    const Metrics metrics = evaluate(model, data);
    CHECK(metrics.mse == doctest::Approx(2.0 * metrics.mse_half));
    CHECK(metrics.n_observed == 11);
    CHECK(metrics.to_json().find("\"rank_A\": 3") != std::string::npos);
}

TEST_CASE("curve prediction equals pointwise prediction exactly") {
    std::mt19937_64 rng(6);
    const VitlModel model = fit(random_triplets(4, 3, 3, rng), KernelSpec<double>{0.4, 0.9, IdentityA{}}, 0.01);
    const LandmarkVector x = oracle::random_normal(3, 1, rng);
    std::vector<EmotionPoint> path;
    for (int k = 0; k < 5; ++k) path.push_back({oracle::random_normal(2, 1, rng), ""});
    const auto curve = predict_curve(model, x, path);
    for (std::size_t k = 0; k < path.size(); ++k) CHECK(curve[k] == predict(model, x, path[k]));
    CHECK_THROWS_AS(predict(model, Eigen::VectorXd::Zero(2), path[0]), DimensionError);
    CHECK_THROWS_AS(predict(model, x, Eigen::VectorXd::Zero(3)), DimensionError);
}

TEST_CASE("reparameterization keeps the function") {
    std::mt19937_64 rng(12);
    const TripletDataset data = random_triplets(3, 2, 3, rng);
    const Eigen::MatrixXd a1 = oracle::random_spd(3, rng), a2 = oracle::random_spd(3, rng);
    const VitlModel model = fit(data, KernelSpec<double>{0.5, 0.5, ExplicitA<double>{a1}}, 0.05);
    const VitlModel moved = reparameterize(model, a2);
    CHECK(oracle::rel_err(predict_triplets(model, data), predict_triplets(moved, data)) < 1e-12);
    CHECK(moved.a_matrix() == a2);
    CHECK(reparameterize(model, a1).coefficients() == model.coefficients());
    Eigen::MatrixXd singular = Eigen::MatrixXd::Identity(3, 3);
    singular(2, 2) = 0.0;
    CHECK_THROWS_AS(reparameterize(model, singular), InvalidArgument);
    CHECK_THROWS_AS(reparameterize(model, Eigen::MatrixXd::Identity(2, 2)), DimensionError);
}

TEST_CASE("model container round trip") {
    std::mt19937_64 rng(13);
    TripletDataset data = random_triplets(3, 3, 4, rng);
    data.observed(1) = false;
    const auto y = oracle::random_normal(8, 4, rng);
    std::vector<KernelSpec<double>> specs = {
        {0.5, 0.7, IdentityA{}},
        {0.5, 0.7, build_lowrank_A(y, 2).structure()},
        {0.5, 0.7, ExplicitA<double>{oracle::random_spd(4, rng)}},
    };
    for (const auto& spec : specs) {
        const VitlModel model = fit(data, spec, 0.02);
        const std::string bytes = serialize_model(model);
        const VitlModel back = deserialize_model(bytes);
        CHECK(back.coefficients() == model.coefficients());
        CHECK(back.a_matrix() == model.a_matrix());
        CHECK((back.observed() == model.observed()).all());
        CHECK(back.solver_path() == model.solver_path());
        CHECK(predict_triplets(back, data) == predict_triplets(model, data));
        CHECK(serialize_model(back) == bytes);
    }

    const std::string good = serialize_model(fit(data, specs[0], 0.02));
    CHECK_THROWS_AS(deserialize_model("NOT-A-MODEL 1\n{}\n"), FormatError);
    CHECK_THROWS_AS(deserialize_model("VITL-MODEL 99\n{}\n"), FormatError);
    CHECK_THROWS_AS(deserialize_model(good.substr(0, good.size() - 3)), FormatError);
    CHECK_THROWS_AS(deserialize_model(good + "x"), FormatError);
    std::string corrupt = good;
    corrupt[good.find('{') + 1] = '#';
    CHECK_THROWS_AS(deserialize_model(corrupt), FormatError);

    const auto path = std::filesystem::temp_directory_path() / "vitl_test_model.vitl";
    save_model(fit(data, specs[1], 0.02), path);
    CHECK(load_model(path).rank_A() == 2);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_model(path), IoError);
}

TEST_CASE("fit argument checks") {
    TripletDataset data = tiny();
    CHECK_THROWS_AS(fit(data, tiny_spec(), 0.0), InvalidArgument);
    KernelSpec<double> bad = tiny_spec();
    bad.gamma_x = 0.0;
    CHECK_THROWS_AS(fit(data, bad, 0.1), InvalidArgument);
    data.observed.setConstant(false);
    CHECK_THROWS_AS(fit(data, tiny_spec(), 0.1), DataError);
}
