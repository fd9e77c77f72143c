// Command-line front end: generate-data, train, eval, dump-plots.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "san/errors.hpp"
#include "san/harness.hpp"

namespace {

using namespace san;

const char* kOutDirEnv = "SAN_OUT_DIR";

std::string default_out_dir() {
    const char* env = std::getenv(kOutDirEnv);
    return env && *env ? env : "san_out";
}

// One string option per config key; only the keys actually given (on the
// command line or in the config file) override the defaults.
struct ConfigFlags {
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;

    void attach(CLI::App& app, const std::vector<std::string>& only = {}) {
        values = config_to_map(TrainConfig{});
        for (auto& [key, value] : values) {
            if (!only.empty() && std::find(only.begin(), only.end(), key) == only.end()) continue;
            options[key] = app.add_option("--" + key, value)->capture_default_str();
        }
    }

    TrainConfig config() const {
        std::map<std::string, std::string> given;
        for (const auto& [key, opt] : options)
            if (opt->count() > 0) given[key] = values.at(key);
        TrainConfig cfg = config_from_map(given);
        cfg.validate();
        return cfg;
    }
};

const std::vector<std::string> kDataKeys{"data",          "data-path", "n-per-arm", "arms",  "radial-std",
                                         "tangential-std", "rate",      "n-seq",     "t-len", "width",
                                         "dot-std",        "speed",     "data-seed"};

Dataset raw_dataset(const DataConfig& d) {
    if (d.kind == "pinwheel") return pinwheel(d.n_per_arm, d.arms, d.radial_std, d.tangential_std, d.rate, d.seed);
    if (d.kind == "dots") return dot_sequences(d.n_seq, d.t_len, d.width, d.dot_std, d.speed, d.seed);
    throw ContractError("generate-data: kind must be pinwheel or dots");
}

void print_metrics(const MetricsRow& r, const std::vector<int>& taus) {
    std::cout << metrics_header(taus) << "\n" << metrics_line(r, taus) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Structured inference networks with natural-gradient PGM updates"};
    app.require_subcommand(1);

    // generate-data
    auto* gen = app.add_subcommand("generate-data", "write a synthetic dataset as delimited text");
    ConfigFlags gen_flags;
    gen_flags.attach(*gen, kDataKeys);
    std::string gen_out;
    gen->add_option("--out", gen_out, "output file")->required();

    // train
    auto* tr = app.add_subcommand("train", "train a model; writes metrics.csv, checkpoint.bin, config.ini");
    tr->set_config("--config", "", "config file whose keys equal flag names");
    ConfigFlags tr_flags;
    tr_flags.attach(*tr);
    std::string tr_out = default_out_dir();
    tr->add_option("--out-dir", tr_out, "output directory (default from " + std::string(kOutDirEnv) + ")")
        ->capture_default_str();

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on its dataset");
    std::string ev_ckpt, ev_tasks = "bound,imputation,reconstruction";
    std::vector<int> ev_taus;
    int ev_samples = 1;
    std::uint64_t ev_seed = 0x5eed;
    ev->add_option("--checkpoint", ev_ckpt)->required();
    ev->add_option("--tasks", ev_tasks, "comma list of bound, imputation, reconstruction, tau")->capture_default_str();
    ev->add_option("--taus", ev_taus, "tau-ahead horizons")->delimiter(',');
    ev->add_option("--samples", ev_samples)->capture_default_str();
    ev->add_option("--eval-seed", ev_seed)->capture_default_str();

    // dump-plots
    auto* dp = app.add_subcommand("dump-plots", "write samples, data and curves for plotting");
    std::string dp_ckpt, dp_out = default_out_dir() + "/plots", dp_metrics;
    int dp_samples = 2000;
    std::uint64_t dp_seed = 0;
    dp->add_option("--checkpoint", dp_ckpt)->required();
    dp->add_option("--out-dir", dp_out)->capture_default_str();
    dp->add_option("--metrics", dp_metrics, "metrics log (default: metrics.csv next to the checkpoint)");
    dp->add_option("--samples", dp_samples)->capture_default_str();
    dp->add_option("--sample-seed", dp_seed)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const TrainConfig cfg = gen_flags.config();
            save_dataset(raw_dataset(cfg.data), gen_out);
            std::cout << "wrote " << gen_out << "\n";
            return 0;
        }
        if (*tr) {
            const TrainConfig cfg = tr_flags.config();
            std::filesystem::create_directories(tr_out);
            std::string ini;
            for (const auto& [k, v] : config_to_map(cfg)) ini += k + " = \"" + v + "\"\n";
            write_file_atomic(tr_out + "/config.ini", ini);
            const Dataset ds = make_dataset(cfg.data);
            const TrainResult res = train(cfg, ds, tr_out);
            if (!res.ok) {
                std::cerr << "training failed: " << res.error << "\nlast good state saved to " << tr_out
                          << "/checkpoint.bin\n";
                return 2;
            }
            if (!res.metrics.empty()) print_metrics(res.metrics.back(), cfg.taus);
            return 0;
        }
        if (*ev) {
            const TrainState s = from_checkpoint(load_checkpoint(ev_ckpt));
            const Dataset ds = make_dataset(s.cfg.data);
            EvalTasks tasks;
            tasks.bound = tasks.imputation = tasks.reconstruction = false;
            tasks.samples = ev_samples;
            tasks.seed = ev_seed;
            std::stringstream ss(ev_tasks);
            std::string t;
            while (std::getline(ss, t, ',')) {
                if (t == "bound") tasks.bound = tasks.train_bound = true;
                else if (t == "imputation") tasks.imputation = true;
                else if (t == "reconstruction") tasks.reconstruction = true;
                else if (t == "tau") tasks.taus = ev_taus.empty() ? std::vector<int>{1, 5, 10} : ev_taus;
                else throw ContractError("unknown task: " + t);
            }
            print_metrics(evaluate(s, ds, tasks), tasks.taus);
            return 0;
        }
        if (*dp) {
            const TrainState s = from_checkpoint(load_checkpoint(dp_ckpt));
            const Dataset ds = make_dataset(s.cfg.data);
            if (dp_metrics.empty()) {
                const auto p = std::filesystem::path(dp_ckpt).parent_path() / "metrics.csv";
                if (std::filesystem::exists(p)) dp_metrics = p.string();
            }
            const std::vector<MetricsRow> curves = dp_metrics.empty() ? std::vector<MetricsRow>{}
                                                                      : read_metrics_csv(dp_metrics);
            dump_plot_data(s, ds, curves, dp_out, dp_samples, dp_seed);
            std::cout << "wrote " << dp_out << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
