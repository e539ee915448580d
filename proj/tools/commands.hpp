#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace vitl::cli {

/// Everything a run can be steered by; filled from the config file, then flags.
struct RunConfig {
    std::string experiment;  // fit | cv | rank-sweep | mask-sweep | generate | predict | synth
    std::string dataset;
    std::string embedding;
    std::string mode = "single";
    std::string theta0 = "neutral";

    std::vector<double> gamma_x;      // empty: median heuristic
    std::vector<double> gamma_theta;  // empty: 1 (fit) or {0.5, 1, 2} (cv)
    std::vector<double> lambda;       // empty: 1e-4 (fit) or 1e-6..1e-2 (cv)
    int rank = -1;                    // < 0: A = I
    std::vector<int> ranks;
    double observed_fraction = 1.0;
    std::vector<double> fractions;
    int masks_per_split = 4;
    int n_splits = 10;
    double test_fraction = 0.10;
    int folds = 6;
    bool dense = false;

    std::uint64_t seed = 0;
    std::string out = "out";

    std::string model;
    std::string queries;
    std::string input;  // comma-separated landmarks for generate
    std::string path = "radial";
    std::vector<double> radii;
    std::string from;
    std::string to;
    int steps = 10;

    // synth
    int n_identities = 50;
    int n_emotions = 7;
    int dim = 10;
    int emotion_dim = 2;
    double noise = 0.0;
    int output_rank = 0;
    double synth_gamma_theta = 1.0;
};

/// Checks selector, mode and that referenced files exist (ConfigError otherwise).
void validate(const RunConfig& config);

int cmd_fit(const RunConfig& config, std::ostream& out);
int cmd_cv(const RunConfig& config, std::ostream& out);
int cmd_rank_sweep(const RunConfig& config, std::ostream& out);
int cmd_mask_sweep(const RunConfig& config, std::ostream& out);
int cmd_generate(const RunConfig& config, std::ostream& out);
int cmd_predict(const RunConfig& config, std::ostream& out);
int cmd_synth(const RunConfig& config, std::ostream& out);

int dispatch(const RunConfig& config, std::ostream& out);

}  // namespace vitl::cli
