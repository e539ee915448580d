#include "vitl/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "vitl/random.hpp"
#include "vitl/solver.hpp"

namespace vitl {

namespace {

std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// Running mean: an average of identical values is that value, bit for bit.
struct RunningMean {
    double value = 0.0;
    Index count = 0;
    void add(double x) {
        ++count;
        value += (x - value) / static_cast<double>(count);
    }
};

void require_disjoint(const std::vector<Index>& a, const std::vector<Index>& b, Index n) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    for (const Index i : a) seen[static_cast<std::size_t>(i)] = 1;
    for (const Index i : b) {
        if (seen[static_cast<std::size_t>(i)]) throw std::logic_error("identity leakage between train and test");
    }
    if (static_cast<Index>(a.size() + b.size()) != n) throw std::logic_error("split does not cover every identity");
}

Eigen::MatrixXd observed_outputs(const TripletDataset& data) {
    Eigen::MatrixXd y(data.n_observed(), data.d());
    Index r = 0;
    for (Index row = 0; row < data.n_pairs(); ++row) {
        if (data.observed(row)) y.row(r++) = data.outputs.row(row);
    }
    return y;
}

}  // namespace

TripletDataset build_triplets(const TrajectoryDataset& data, const TaskMode& mode) {
    if (mode.kind == TaskMode::Kind::Joint) return build_joint(data);
    return build_single(data, EmotionRef{mode.theta0});
}

Score score(const VitlModel& model, const TripletDataset& test) {
    Score out;
    out.mse_half = empirical_risk(model, test);
    out.mse = 2.0 * out.mse_half;
    out.n_pairs = test.n_observed();
    return out;
}

double median_heuristic_gamma(const Eigen::MatrixXd& rows) {
    std::vector<double> dist;
    for (Index i = 0; i < rows.rows(); ++i) {
        for (Index j = i + 1; j < rows.rows(); ++j) dist.push_back((rows.row(i) - rows.row(j)).squaredNorm());
    }
    if (dist.empty()) return 1.0;
    const std::size_t mid = dist.size() / 2;
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
    double median = dist[mid];
    if (dist.size() % 2 == 0) {
        const double lower = *std::max_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid));
        median = 0.5 * (median + lower);
    }
    return median > 0.0 ? 1.0 / median : 1.0;
}

// ---------------------------------------------------------------------------

std::vector<IdentitySplit> identity_split(const TrajectoryDataset& data, const SplitPlan& plan) {
    data.validate();
    const Index n = data.n();
    if (plan.n_splits < 1) throw InvalidArgument("identity_split: need at least one split");
    if (!(plan.test_fraction > 0.0 && plan.test_fraction < 1.0)) {
        throw InvalidArgument("identity_split: test_fraction must lie in (0, 1)");
    }
    const auto n_test = static_cast<Index>(std::llround(plan.test_fraction * static_cast<double>(n)));
    if (n_test < 1 || n_test >= n) {
        throw InvalidArgument("identity_split: " + std::to_string(n) + " identities are too few for test fraction " +
                              fmt(plan.test_fraction));
    }

    std::vector<IdentitySplit> out;
    out.reserve(static_cast<std::size_t>(plan.n_splits));
    for (Index s = 0; s < plan.n_splits; ++s) {
        std::vector<Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Index{0});
        auto engine = make_engine(plan.seed, {stream::kSplit, static_cast<std::uint64_t>(s)});
        std::shuffle(order.begin(), order.end(), engine);

        IdentitySplit split;
        split.split_id = s;
        split.test_ids.assign(order.begin(), order.begin() + n_test);
        split.train_ids.assign(order.begin() + n_test, order.end());
        std::sort(split.test_ids.begin(), split.test_ids.end());
        std::sort(split.train_ids.begin(), split.train_ids.end());
        require_disjoint(split.train_ids, split.test_ids, n);
        split.train = subset_identities(data, split.train_ids);
        split.test = subset_identities(data, split.test_ids);
        out.push_back(std::move(split));
    }
    return out;
}

std::vector<Index> assign_folds(Index n, Index folds, std::uint64_t seed) {
    if (folds < 2) throw InvalidArgument("cross-validation needs at least 2 folds");
    if (folds > n) {
        throw InvalidArgument("cross-validation: " + std::to_string(folds) + " folds exceed " + std::to_string(n) +
                              " identities");
    }
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    auto engine = make_engine(seed, {stream::kFold});
    std::shuffle(order.begin(), order.end(), engine);
    std::vector<Index> fold(static_cast<std::size_t>(n));
    for (Index k = 0; k < n; ++k) fold[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = k % folds;
    return fold;
}

// ---------------------------------------------------------------------------

void GridSpec::validate() const {
    auto check = [](const std::vector<double>& values, const char* name) {
        if (values.empty()) throw InvalidArgument(std::string("grid: ") + name + " list is empty");
        for (const double v : values) {
            if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument(std::string("grid: ") + name + " values must be positive");
        }
    };
    check(gamma_x, "gamma_x");
    check(gamma_theta, "gamma_theta");
    check(lambda, "lambda");
}

std::vector<double> GridSpec::log_space(double lo, double hi, Index count) {
    if (!(lo > 0.0 && hi > 0.0) || count < 1) throw InvalidArgument("log_space: need positive bounds and count >= 1");
    std::vector<double> out;
    if (count == 1) return {lo};
    const double a = std::log10(lo), b = std::log10(hi);
    for (Index k = 0; k < count; ++k) out.push_back(std::pow(10.0, a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1)));
    out.front() = lo;
    out.back() = hi;
    return out;
}

std::string CvResult::to_csv() const {
    std::ostringstream os;
    os << "fold,gamma_x,gamma_theta,lambda,mse,mse_half\n";
    for (const auto& r : records) {
        os << r.fold << ',' << fmt(r.hp.gamma_x) << ',' << fmt(r.hp.gamma_theta) << ',' << fmt(r.hp.lambda) << ','
           << fmt(r.score.mse) << ',' << fmt(r.score.mse_half) << '\n';
    }
    return os.str();
}

std::string CvResult::to_json() const {
    nlohmann::ordered_json j;
    j["best"] = {{"gamma_x", best.gamma_x}, {"gamma_theta", best.gamma_theta}, {"lambda", best.lambda}};
    nlohmann::ordered_json grid = nlohmann::ordered_json::array();
    for (const auto& s : summary) {
        grid.push_back({{"gamma_x", s.hp.gamma_x},
                        {"gamma_theta", s.hp.gamma_theta},
                        {"lambda", s.hp.lambda},
                        {"mse", s.mean_mse},
                        {"mse_half", s.mean_mse_half}});
    }
    j["grid"] = grid;
    return j.dump(2) + "\n";
}

CvResult cross_validate(const TrajectoryDataset& train, const GridSpec& grid, Index folds, const TaskMode& mode,
                        std::uint64_t seed, const AStructure<double>& a) {
    train.validate();
    grid.validate();
    const Index n = train.n();
    const std::vector<Index> fold_of = assign_folds(n, folds, seed);

    struct FoldData {
        TripletDataset fit_on;
        TripletDataset validate_on;
    };
    std::vector<FoldData> fold_data;
    for (Index f = 0; f < folds; ++f) {
        std::vector<Index> in, out;
        for (Index i = 0; i < n; ++i) (fold_of[static_cast<std::size_t>(i)] == f ? out : in).push_back(i);
        require_disjoint(in, out, n);
        fold_data.push_back({build_triplets(subset_identities(train, in), mode),
                             build_triplets(subset_identities(train, out), mode)});
    }

    CvResult result;
    for (const double gx : grid.gamma_x) {
        for (const double gt : grid.gamma_theta) {
            for (const double lam : grid.lambda) {
                KernelSpec<double> spec;
                spec.gamma_x = gx;
                spec.gamma_theta = gt;
                spec.a = a;
                RunningMean mse, mse_half;
                for (Index f = 0; f < folds; ++f) {
                    const auto& fd = fold_data[static_cast<std::size_t>(f)];
                    const VitlModel model = fit(fd.fit_on, spec, lam);
                    const Score s = score(model, fd.validate_on);
                    result.records.push_back({f, {gx, gt, lam}, s});
                    mse.add(s.mse);
                    mse_half.add(s.mse_half);
                }
                result.summary.push_back({{gx, gt, lam}, mse.value, mse_half.value});
            }
        }
    }

    // Ties (equal up to round-off) prefer the smoother model.
    const CvSummary* best = nullptr;
    for (const auto& s : result.summary) {
        if (best == nullptr) {
            best = &s;
            continue;
        }
        const double tol = 1e-12 * std::max(std::abs(s.mean_mse), std::abs(best->mean_mse));
        if (s.mean_mse < best->mean_mse - tol) {
            best = &s;
        } else if (std::abs(s.mean_mse - best->mean_mse) <= tol) {
            const auto key = [](const CvSummary& c) {
                return std::make_tuple(-c.hp.lambda, c.hp.gamma_x, c.hp.gamma_theta);
            };
            if (key(s) < key(*best)) best = &s;
        }
    }
    result.best = best->hp;
    return result;
}

// ---------------------------------------------------------------------------

std::string RankSweepResult::to_csv() const {
    std::ostringstream os;
    os << "split_id,rank,mse,mse_half\n";
    for (const auto& row : rows) {
        for (const auto& s : row.splits) {
            os << s.split_id << ',' << row.rank << ',' << fmt(s.score.mse) << ',' << fmt(s.score.mse_half) << '\n';
        }
    }
    return os.str();
}

std::string RankSweepResult::to_json() const {
    nlohmann::ordered_json j;
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
        list.push_back({{"rank", row.rank}, {"mse_half_mean", row.mean}, {"mse_half_std", row.std},
                        {"mse_mean", 2.0 * row.mean}, {"mse_std", 2.0 * row.std}});
    }
    j["ranks"] = list;
    j["increases"] = increases;
    j["monotone_nonincreasing"] = monotone_nonincreasing();
    return j.dump(2) + "\n";
}

RankSweepResult rank_sweep(const TrajectoryDataset& data, const KernelSpec<double>& spec, double lambda,
                           const std::vector<Index>& ranks, const SplitPlan& plan, const TaskMode& mode) {
    if (ranks.empty()) throw InvalidArgument("rank_sweep: no ranks given");
    std::vector<Index> sorted = ranks;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    data.validate();
    for (const Index r : sorted) {
        if (r < 0 || r > data.d()) {
            throw InvalidArgument("rank_sweep: rank " + std::to_string(r) + " outside [0, " + std::to_string(data.d()) + "]");
        }
    }

    RankSweepResult result;
    for (const Index r : sorted) result.rows.push_back({r, 0.0, 0.0, {}});
    for (const auto& split : identity_split(data, plan)) {
        const TripletDataset train = build_triplets(split.train, mode);
        const TripletDataset test = build_triplets(split.test, mode);
        const Eigen::MatrixXd y = observed_outputs(train);  // training outputs only
        for (auto& row : result.rows) {
            KernelSpec<double> s = spec;
            s.a = build_lowrank_A(y, row.rank).structure();
            row.splits.push_back({split.split_id, score(fit(train, s, lambda), test)});
        }
    }
    for (auto& row : result.rows) {
        RunningMean mean;
        for (const auto& s : row.splits) mean.add(s.score.mse_half);
        row.mean = mean.value;
        double ss = 0.0;
        for (const auto& s : row.splits) ss += (s.score.mse_half - row.mean) * (s.score.mse_half - row.mean);
        row.std = row.splits.size() > 1 ? std::sqrt(ss / static_cast<double>(row.splits.size() - 1)) : 0.0;
    }
    for (std::size_t k = 1; k < result.rows.size(); ++k) {
        if (result.rows[k].mean > result.rows[k - 1].mean) ++result.increases;
    }
    return result;
}

// ---------------------------------------------------------------------------

std::string MaskSweepResult::to_csv() const {
    std::ostringstream os;
    os << "split_id,observed_fraction,mse,mse_half\n";
    for (const auto& row : rows) {
        for (const auto& s : row.splits) {
            os << s.split_id << ',' << fmt(row.observed_fraction) << ',' << fmt(s.score.mse) << ','
               << fmt(s.score.mse_half) << '\n';
        }
    }
    return os.str();
}

std::string MaskSweepResult::to_json() const {
    nlohmann::ordered_json j;
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& row : rows) {
        list.push_back({{"observed_fraction", row.observed_fraction},
                        {"mse_half_mean", row.mean_mse_half},
                        {"mse_mean", 2.0 * row.mean_mse_half},
                        {"log_mse_half_min", row.log_min},
                        {"log_mse_half_mean", row.log_mean},
                        {"log_mse_half_max", row.log_max}});
    }
    j["fractions"] = list;
    return j.dump(2) + "\n";
}

MaskSweepResult missing_data_sweep(const TrajectoryDataset& data, const KernelSpec<double>& spec, double lambda,
                                   const std::vector<double>& fractions, Index masks_per_split, const SplitPlan& plan,
                                   const TaskMode& mode) {
    if (fractions.empty()) throw InvalidArgument("missing_data_sweep: no fractions given");
    if (masks_per_split < 1) throw InvalidArgument("missing_data_sweep: masks_per_split must be >= 1");
    for (const double f : fractions) {
        if (!(f >= 0.0 && f <= 1.0)) throw InvalidArgument("missing_data_sweep: fractions must lie in [0, 1]");
    }

    MaskSweepResult result;
    for (const double f : fractions) result.rows.push_back({f, 0.0, 0.0, 0.0, 0.0, {}});
    for (const auto& split : identity_split(data, plan)) {
        const TripletDataset test = build_triplets(split.test, mode);
        for (auto& row : result.rows) {
            RunningMean mse_half;
            for (Index k = 0; k < masks_per_split; ++k) {
                // Keyed by (split, mask) only, so masks are nested across fractions.
                const auto mask_seed = derive_seed(plan.seed, {stream::kSweepMask, static_cast<std::uint64_t>(split.split_id),
                                                               static_cast<std::uint64_t>(k)});
                const TrajectoryDataset masked = apply_mask(split.train, row.observed_fraction, mask_seed);
                const TripletDataset train = build_triplets(masked, mode);
                if (train.n_observed() == 0) {
                    throw DataError("missing_data_sweep: observed fraction " + fmt(row.observed_fraction) +
                                    " leaves split " + std::to_string(split.split_id) + " without observations");
                }
                mse_half.add(score(fit(train, spec, lambda), test).mse_half);
            }
            Score s;
            s.mse_half = mse_half.value;
            s.mse = 2.0 * s.mse_half;
            s.n_pairs = test.n_observed();
            row.splits.push_back({split.split_id, s});
        }
    }
    for (auto& row : result.rows) {
        RunningMean mean, log_mean;
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const auto& s : row.splits) {
            const double l = std::log(s.score.mse_half);
            mean.add(s.score.mse_half);
            log_mean.add(l);
            lo = std::min(lo, l);
            hi = std::max(hi, l);
        }
        row.mean_mse_half = mean.value;
        row.log_mean = log_mean.value;
        row.log_min = lo;
        row.log_max = hi;
    }
    return result;
}

}  // namespace vitl
