#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

#include "json.hpp"
#include "vitl/data.hpp"
#include "vitl/eval.hpp"
#include "vitl/model.hpp"
#include "vitl/random.hpp"
#include "vitl/solver.hpp"

namespace vitl::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void require_file(const std::string& path, const char* what) {
    if (path.empty()) throw ConfigError(std::string(what) + " path is required");
    if (!fs::exists(path)) throw ConfigError(std::string(what) + " not found: " + path);
}

EmotionEmbedding embedding_of(const RunConfig& c) {
    return c.embedding.empty() ? EmotionEmbedding::builtin() : EmotionEmbedding::load(c.embedding);
}

TrajectoryDataset load(const RunConfig& c) {
    const EmotionEmbedding emb = embedding_of(c);
    return load_dataset(c.dataset, &emb);
}

TaskMode mode_of(const RunConfig& c) {
    if (c.mode == "joint") return TaskMode::joint();
    if (c.mode == "single") return TaskMode::single(c.theta0);
    throw ConfigError("mode must be 'single' or 'joint', got '" + c.mode + "'");
}

SplitPlan plan_of(const RunConfig& c) {
    if (c.n_splits < 1) throw ConfigError("n-splits must be >= 1");
    return SplitPlan{c.n_splits, c.test_fraction, c.folds, c.seed};
}

double single_value(const std::vector<double>& values, double fallback, const char* name) {
    if (values.empty()) return fallback;
    if (values.size() > 1) throw ConfigError(std::string(name) + " takes a single value for this command");
    return values.front();
}

// Median heuristic over every input of the (unmasked) dataset; it never looks at targets.
double default_gamma_x(const TrajectoryDataset& data, const TaskMode& mode) {
    TrajectoryDataset all = data;
    all.mask.reset();
    return median_heuristic_gamma(build_triplets(all, mode).inputs);
}

struct TrainTest {
    TrajectoryDataset train;
    std::optional<TrajectoryDataset> test;
    std::vector<Index> train_ids, test_ids;
};

// Split 0 of the plan, the same one the sweeps report first; test_fraction 0 trains on everything.
TrainTest holdout(const TrajectoryDataset& data, const RunConfig& c) {
    TrainTest out;
    if (c.test_fraction == 0.0) {
        out.train = data;
        for (Index i = 0; i < data.n(); ++i) out.train_ids.push_back(i);
        return out;
    }
    SplitPlan plan = plan_of(c);
    plan.n_splits = 1;
    auto splits = identity_split(data, plan);
    IdentitySplit& split = splits.front();
    out.train = std::move(split.train);
    out.test = std::move(split.test);
    out.train_ids = std::move(split.train_ids);
    out.test_ids = std::move(split.test_ids);
    return out;
}

Eigen::MatrixXd observed_outputs(const TripletDataset& data) {
    Eigen::MatrixXd y(data.n_observed(), data.d());
    Index r = 0;
    for (Index row = 0; row < data.n_pairs(); ++row) {
        if (data.observed(row)) y.row(r++) = data.outputs.row(row);
    }
    return y;
}

fs::path out_dir(const RunConfig& c) {
    fs::create_directories(c.out);
    return fs::path(c.out);
}

json score_json(const Score& s) {
    return json{{"mse", s.mse}, {"mse_half", s.mse_half}, {"n_observed", s.n_pairs}};
}

void require_no_rank(const RunConfig& c, const char* command) {
    if (c.rank >= 0) throw ConfigError(std::string("--rank is not used by ") + command + "; see rank-sweep");
}

EmotionPoint parse_point(const std::string& text, const EmotionEmbedding& emb, Index p, const char* what) {
    if (text.empty()) throw ConfigError(std::string(what) + " is required for this path");
    const auto fields = split_fields(text, ',');
    EmotionPoint point;
    bool numeric = true;
    Eigen::VectorXd coords(static_cast<Index>(fields.size()));
    for (std::size_t k = 0; k < fields.size(); ++k) {
        try {
            coords(static_cast<Index>(k)) = parse_double(fields[k], what);
        } catch (const Error&) {
            numeric = false;
            break;
        }
    }
    point = numeric ? EmotionPoint{coords, {}} : emb.lookup(text);
    if (point.dim() != p) {
        throw DimensionError(std::string(what) + " has dimension " + std::to_string(point.dim()) + ", model expects " +
                             std::to_string(p));
    }
    return point;
}

// One output row per query row, written as soon as it is computed.
std::size_t stream_predictions(const VitlModel& model, std::istream& in, std::ostream& sink, const std::string& queries) {
    std::string line;
    std::size_t line_no = 0, rows = 0;
    bool have_header = false;
    char delim = ',';
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        const std::string where = queries + ":" + std::to_string(line_no);
        if (!have_header) {
            delim = detect_delimiter(line);
            const auto header = split_fields(line, delim);
            std::size_t p = 0;
            while (1 + p < header.size() && header[1 + p].rfind("theta", 0) == 0) ++p;
            const std::size_t d = header.size() < 1 + p ? 0 : header.size() - 1 - p;
            if (static_cast<Index>(p) != model.p() || static_cast<Index>(d) != model.d()) {
                throw DimensionError(where + ": query header has " + std::to_string(p) + " theta and " +
                                     std::to_string(d) + " landmark columns, model expects " +
                                     std::to_string(model.p()) + " and " + std::to_string(model.d()));
            }
            width = header.size();
            have_header = true;
            continue;
        }
        const auto fields = split_fields(line, delim);
        if (fields.size() != width) {
            throw DataError(where + ": expected " + std::to_string(width) + " fields, found " +
                            std::to_string(fields.size()));
        }
        Eigen::VectorXd theta(model.p());
        LandmarkVector x(model.d());
        for (Index k = 0; k < model.p(); ++k) theta(k) = parse_double(fields[static_cast<std::size_t>(1 + k)], where);
        for (Index k = 0; k < model.d(); ++k) {
            x(k) = parse_double(fields[static_cast<std::size_t>(1 + model.p() + k)], where);
        }
        const LandmarkVector y = predict(model, x, theta);
        sink << fields[0];
        for (Index k = 0; k < model.p(); ++k) sink << ',' << fmt(theta(k));
        for (Index k = 0; k < model.d(); ++k) sink << ',' << fmt(y(k));
        sink << '\n';
        ++rows;
    }
    return rows;
}

}  // namespace

void validate(const RunConfig& c) {
    static const std::vector<std::string> known = {"fit", "cv", "rank-sweep", "mask-sweep", "generate", "predict", "synth"};
    if (c.experiment.empty()) throw ConfigError("no experiment selected (fit, cv, rank-sweep, mask-sweep, generate, predict, synth)");
    if (std::find(known.begin(), known.end(), c.experiment) == known.end()) {
        throw ConfigError("unknown experiment '" + c.experiment + "'");
    }
    mode_of(c);
    if (!(c.test_fraction >= 0.0 && c.test_fraction < 1.0)) throw ConfigError("test-fraction must lie in [0, 1)");
    if (!c.embedding.empty()) require_file(c.embedding, "embedding file");
    const std::string& e = c.experiment;
    if (e == "fit" || e == "cv" || e == "rank-sweep" || e == "mask-sweep") require_file(c.dataset, "dataset");
    if (e == "generate" || e == "predict") require_file(c.model, "model file");
    if (e == "predict") require_file(c.queries, "query file");
}

int cmd_fit(const RunConfig& c, std::ostream& out) {
    const TrajectoryDataset data = load(c);
    const TaskMode mode = mode_of(c);
    TrainTest tt = holdout(data, c);
    if (c.observed_fraction < 1.0) {
        // Same mask as the first mask of split 0 in mask-sweep.
        tt.train = apply_mask(tt.train, c.observed_fraction, derive_seed(c.seed, {stream::kSweepMask, 0, 0}));
    }
    const TripletDataset train = build_triplets(tt.train, mode);

    KernelSpec<double> spec;
    spec.gamma_x = single_value(c.gamma_x, 0.0, "gamma-x");
    if (spec.gamma_x == 0.0) spec.gamma_x = default_gamma_x(data, mode);
    spec.gamma_theta = single_value(c.gamma_theta, 1.0, "gamma-theta");
    const double lambda = single_value(c.lambda, 1e-4, "lambda");
    if (c.rank >= 0) spec.a = build_lowrank_A(observed_outputs(train), c.rank).structure();

    const VitlModel model = fit(train, spec, lambda, FitOptions{c.dense});
    const Metrics metrics = evaluate(model, train);

    json j;
    j["experiment"] = "fit";
    j["mode"] = c.mode;
    j["solver"] = to_string(model.solver_path());
    j["seed"] = c.seed;
    j["observed_fraction"] = c.observed_fraction;
    j["train"] = json::parse(metrics.to_json());
    if (tt.test) {
        j["test"] = score_json(score(model, build_triplets(*tt.test, mode)));
        j["test_identities"] = tt.test_ids;
    }
    const fs::path dir = out_dir(c);
    save_model(model, dir / "model.vitl");
    write_file_atomic(dir / "metrics.json", j.dump(2) + "\n");

    out << "solver=" << to_string(model.solver_path()) << " train_mse=" << fmt(metrics.mse);
    if (tt.test) out << " test_mse=" << fmt(j["test"]["mse"].get<double>());
    out << '\n';
    return 0;
}

int cmd_cv(const RunConfig& c, std::ostream& out) {
    require_no_rank(c, "cv");
    const TrajectoryDataset data = load(c);
    const TaskMode mode = mode_of(c);
    const TrainTest tt = holdout(data, c);

    GridSpec grid;
    grid.gamma_x = c.gamma_x;
    if (grid.gamma_x.empty()) {
        const double g = default_gamma_x(data, mode);
        grid.gamma_x = {0.3 * g, g, 3.0 * g};
    }
    grid.gamma_theta = c.gamma_theta.empty() ? std::vector<double>{0.5, 1.0, 2.0} : c.gamma_theta;
    grid.lambda = c.lambda.empty() ? GridSpec::log_space(1e-6, 1e-2, 5) : c.lambda;

    const CvResult cv = cross_validate(tt.train, grid, c.folds, mode, c.seed);
    json summary = json::parse(cv.to_json());
    if (tt.test) {
        KernelSpec<double> spec;
        spec.gamma_x = cv.best.gamma_x;
        spec.gamma_theta = cv.best.gamma_theta;
        const VitlModel model = fit(build_triplets(tt.train, mode), spec, cv.best.lambda, FitOptions{c.dense});
        summary["test"] = score_json(score(model, build_triplets(*tt.test, mode)));
    }
    const fs::path dir = out_dir(c);
    write_file_atomic(dir / "cv_table.csv", cv.to_csv());
    write_file_atomic(dir / "cv_summary.json", summary.dump(2) + "\n");

    out << "gamma_x=" << fmt(cv.best.gamma_x) << " gamma_theta=" << fmt(cv.best.gamma_theta)
        << " lambda=" << fmt(cv.best.lambda) << '\n';
    return 0;
}

int cmd_rank_sweep(const RunConfig& c, std::ostream& out) {
    const TrajectoryDataset data = load(c);
    const TaskMode mode = mode_of(c);
    KernelSpec<double> spec;
    spec.gamma_x = single_value(c.gamma_x, 0.0, "gamma-x");
    if (spec.gamma_x == 0.0) spec.gamma_x = default_gamma_x(data, mode);
    spec.gamma_theta = single_value(c.gamma_theta, 1.0, "gamma-theta");
    const double lambda = single_value(c.lambda, 1e-4, "lambda");

    std::vector<Index> ranks;
    for (const int r : c.ranks) ranks.push_back(r);
    if (ranks.empty()) {
        for (const Index r : {Index{0}, Index{1}, Index{2}, Index{3}, Index{5}, data.d()}) {
            if (r <= data.d()) ranks.push_back(r);
        }
    }
    const RankSweepResult result = rank_sweep(data, spec, lambda, ranks, plan_of(c), mode);
    const fs::path dir = out_dir(c);
    write_file_atomic(dir / "rank_sweep.csv", result.to_csv());
    write_file_atomic(dir / "rank_sweep.json", result.to_json());
    for (const auto& row : result.rows) {
        out << "rank=" << row.rank << " mse_half=" << fmt(row.mean) << " std=" << fmt(row.std) << '\n';
    }
    return 0;
}

int cmd_mask_sweep(const RunConfig& c, std::ostream& out) {
    require_no_rank(c, "mask-sweep");
    const TrajectoryDataset data = load(c);
    const TaskMode mode = mode_of(c);
    KernelSpec<double> spec;
    spec.gamma_x = single_value(c.gamma_x, 0.0, "gamma-x");
    if (spec.gamma_x == 0.0) spec.gamma_x = default_gamma_x(data, mode);
    spec.gamma_theta = single_value(c.gamma_theta, 1.0, "gamma-theta");
    const double lambda = single_value(c.lambda, 1e-4, "lambda");
    const std::vector<double> fractions =
        c.fractions.empty() ? std::vector<double>{1.0, 0.8, 0.6, 0.4, 0.2} : c.fractions;

    const MaskSweepResult result = missing_data_sweep(data, spec, lambda, fractions, c.masks_per_split, plan_of(c), mode);
    const fs::path dir = out_dir(c);
    write_file_atomic(dir / "mask_sweep.csv", result.to_csv());
    write_file_atomic(dir / "mask_sweep.json", result.to_json());
    for (const auto& row : result.rows) {
        out << "observed_fraction=" << fmt(row.observed_fraction) << " mse_half=" << fmt(row.mean_mse_half)
            << " log_min=" << fmt(row.log_min) << " log_mean=" << fmt(row.log_mean) << " log_max=" << fmt(row.log_max)
            << '\n';
    }
    return 0;
}

int cmd_generate(const RunConfig& c, std::ostream& out) {
    const VitlModel model = load_model(c.model);
    if (c.input.empty()) throw ConfigError("generate needs --input landmarks");
    const auto fields = split_fields(c.input, ',');
    LandmarkVector x(static_cast<Index>(fields.size()));
    for (std::size_t k = 0; k < fields.size(); ++k) x(static_cast<Index>(k)) = parse_double(fields[k], "--input");
    if (x.size() != model.d()) {
        throw DimensionError("input has " + std::to_string(x.size()) + " landmark coordinates, model expects " +
                             std::to_string(model.d()));
    }

    const EmotionEmbedding emb = embedding_of(c);
    std::vector<EmotionPoint> path;
    if (c.path == "radial") {
        const std::vector<double> radii = c.radii.empty() ? std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0} : c.radii;
        path = radial_path(parse_point(c.from, emb, model.p(), "--from"), radii);
    } else if (c.path == "angular") {
        path = angular_path(parse_point(c.from, emb, model.p(), "--from"), parse_point(c.to, emb, model.p(), "--to"),
                            c.steps);
    } else {
        throw ConfigError("path must be 'radial' or 'angular', got '" + c.path + "'");
    }
    const auto landmarks = predict_curve(model, x, path);
    const fs::path file = out_dir(c) / "trajectory.csv";
    write_file_atomic(file, format_trajectory(path, landmarks));
    out << "wrote " << path.size() << " rows to " << file.string() << '\n';
    return 0;
}

int cmd_predict(const RunConfig& c, std::ostream& out) {
    const VitlModel model = load_model(c.model);
    std::ifstream in(c.queries);
    if (!in) throw IoError("cannot open " + c.queries);

    const fs::path file = out_dir(c) / "predictions.csv";
    fs::path tmp = file;
    tmp += ".tmp";
    std::ofstream sink(tmp, std::ios::trunc);
    if (!sink) throw IoError("cannot write " + tmp.string());
    sink << "identity_id";
    for (Index k = 0; k < model.p(); ++k) sink << ",theta_" << k;
    for (Index k = 0; k < model.d(); ++k) sink << ",l_" << k;
    sink << '\n';

    std::size_t rows = 0;
    try {
        rows = stream_predictions(model, in, sink, c.queries);
    } catch (...) {
        sink.close();
        fs::remove(tmp);
        throw;
    }
    sink.close();
    if (!sink) throw IoError("write failed for " + tmp.string());
    fs::rename(tmp, file);
    out << "wrote " << rows << " predictions to " << file.string() << '\n';
    return 0;
}

int cmd_synth(const RunConfig& c, std::ostream& out) {
    SyntheticTask task;
    task.n = c.n_identities;
    task.m = c.n_emotions;
    task.d = c.dim;
    task.p = c.emotion_dim;
    task.seed = c.seed;
    task.noise_sigma = c.noise;
    task.output_rank = c.output_rank;
    task.gamma_theta = c.synth_gamma_theta;
    const SyntheticData synth = generate_synthetic(task);
    const fs::path file = out_dir(c) / "dataset.csv";
    save_dataset(synth.data, file);
    out << "wrote " << synth.data.n() << " identities to " << file.string() << '\n';
    return 0;
}

int dispatch(const RunConfig& c, std::ostream& out) {
    validate(c);
    const std::string& e = c.experiment;
    if (e == "fit") return cmd_fit(c, out);
    if (e == "cv") return cmd_cv(c, out);
    if (e == "rank-sweep") return cmd_rank_sweep(c, out);
    if (e == "mask-sweep") return cmd_mask_sweep(c, out);
    if (e == "generate") return cmd_generate(c, out);
    if (e == "predict") return cmd_predict(c, out);
    return cmd_synth(c, out);
}

}  // namespace vitl::cli
