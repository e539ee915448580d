// vitl: fit, evaluate and generate with vector-valued infinite-task models.
//
// Precedence: command-line flag > VITL_OUT_DIR (output directory only) > config file > default.

#include <cstdlib>
#include <cstring>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "json.hpp"
#include "vitl/errors.hpp"

namespace {

// INI sections are for readability only: [data] dataset = ... sets --dataset.
class FlatIni : public CLI::ConfigINI {
public:
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
        std::vector<CLI::ConfigItem> items;
        for (auto& item : CLI::ConfigINI::from_config(input)) {
            if (item.name == "++" || item.name == "--") continue;
            item.parents.clear();
            items.push_back(std::move(item));
        }
        return items;
    }
};

int exit_code(vitl::ErrorKind kind) {
    switch (kind) {
        case vitl::ErrorKind::Format:
        case vitl::ErrorKind::Dimension: return 3;
        case vitl::ErrorKind::Numerical: return 4;
        default: return 2;
    }
}

int report(const std::string& kind, const std::string& message, int code) {
    nlohmann::ordered_json j{{"error", kind}, {"message", message}, {"exit_code", code}};
    std::cerr << j.dump() << std::endl;
    return code;
}

bool flag_given(int argc, char** argv, const char* name) {
    const std::size_t len = std::strlen(name);
    for (int k = 1; k < argc; ++k) {
        if (std::strncmp(argv[k], name, len) == 0 && (argv[k][len] == '\0' || argv[k][len] == '=')) return true;
    }
    return false;
}

}  // namespace

int main(int argc, char** argv) {
    vitl::cli::RunConfig cfg;
    CLI::App app{"Vector-valued infinite task learning for landmark-based emotion transfer"};
    app.config_formatter(std::make_shared<FlatIni>());
    app.set_config("--config", "", "INI config file; flags override its keys");
    app.require_subcommand(0, 1);

    app.add_option("--experiment", cfg.experiment, "fit|cv|rank-sweep|mask-sweep|generate|predict|synth (or use a subcommand)");
    app.add_option("--dataset", cfg.dataset, "Landmark dataset (CSV/TSV)");
    app.add_option("--embedding", cfg.embedding, "Emotion label -> coordinates table");
    app.add_option("--mode", cfg.mode, "single|joint");
    app.add_option("--theta0", cfg.theta0, "Input emotion label in single mode");
    app.add_option("--gamma-x", cfg.gamma_x, "Input kernel bandwidth(s); default median heuristic")->delimiter(',');
    app.add_option("--gamma-theta", cfg.gamma_theta, "Emotion kernel bandwidth(s)")->delimiter(',');
    app.add_option("--lambda", cfg.lambda, "Regularization value(s)")->delimiter(',');
    app.add_option("--rank", cfg.rank, "Rank of A from the training outputs (fit); omit for A = I");
    app.add_option("--ranks", cfg.ranks, "Ranks for rank-sweep")->delimiter(',');
    app.add_option("--observed-fraction", cfg.observed_fraction, "Share of training pairs kept (fit)");
    app.add_option("--fractions", cfg.fractions, "Observed fractions for mask-sweep")->delimiter(',');
    app.add_option("--masks-per-split", cfg.masks_per_split, "Random masks averaged per split");
    app.add_option("--n-splits", cfg.n_splits, "Identity train/test splits");
    app.add_option("--test-fraction", cfg.test_fraction, "Share of identities held out (0: train on all)");
    app.add_option("--folds", cfg.folds, "Cross-validation folds");
    app.add_flag("--dense", cfg.dense, "Never use the Kronecker solver");
    app.add_option("--seed", cfg.seed, "Root seed for splits, folds, masks and synthetic data");
    app.add_option("--out", cfg.out, "Output directory (env VITL_OUT_DIR)");
    app.add_option("--model", cfg.model, "Model file");
    app.add_option("--queries", cfg.queries, "Query file: identity_id, theta..., landmarks...");
    app.add_option("--input", cfg.input, "Input landmarks for generate, comma-separated");
    app.add_option("--path", cfg.path, "radial|angular");
    app.add_option("--radii", cfg.radii, "Radii of a radial path")->delimiter(',');
    app.add_option("--from", cfg.from, "Path start or direction: label or coordinates");
    app.add_option("--to", cfg.to, "Angular path end: label or coordinates");
    app.add_option("--steps", cfg.steps, "Points on an angular path, endpoints included");
    app.add_option("--n-identities", cfg.n_identities, "synth: identities");
    app.add_option("--n-emotions", cfg.n_emotions, "synth: emotions per identity");
    app.add_option("--dim", cfg.dim, "synth: landmark dimension d");
    app.add_option("--emotion-dim", cfg.emotion_dim, "synth: emotion dimension p");
    app.add_option("--noise", cfg.noise, "synth: observation noise sigma");
    app.add_option("--output-rank", cfg.output_rank, "synth: intrinsic output rank (0 = d)");
    app.add_option("--synth-gamma-theta", cfg.synth_gamma_theta, "synth: generator emotion bandwidth");

    for (const char* name : {"fit", "cv", "rank-sweep", "mask-sweep", "generate", "predict", "synth"}) {
        app.add_subcommand(name)->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return report("config", e.what(), 2);
    }

    try {
        const auto subs = app.get_subcommands();
        if (!subs.empty()) {
            const std::string chosen = subs.front()->get_name();
            if (!cfg.experiment.empty() && cfg.experiment != chosen) {
                throw vitl::ConfigError("experiment '" + cfg.experiment + "' conflicts with subcommand '" + chosen + "'");
            }
            cfg.experiment = chosen;
        }
        if (!flag_given(argc, argv, "--out")) {
            if (const char* env = std::getenv("VITL_OUT_DIR"); env != nullptr && *env != '\0') cfg.out = env;
        }
        return vitl::cli::dispatch(cfg, std::cout);
    } catch (const vitl::Error& e) {
        return report(vitl::to_string(e.kind()), e.what(), exit_code(e.kind()));
    } catch (const std::filesystem::filesystem_error& e) {
        return report("io", e.what(), 2);
    } catch (const std::exception& e) {
        return report("internal", e.what(), 1);
    }
}
