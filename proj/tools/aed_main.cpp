#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <omp.h>

#include "aed/errors.hpp"
#include "aed/pipeline.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::int64_t seed = -1;  // -1: keep the config-file / default value
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "Key/value config file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", opts.seed, "Global seed (overrides the config file)");
}

aed::RunConfig resolve_config(const CommonOpts& opts) {
    aed::RunConfig config = opts.config_path.empty()
                                ? aed::RunConfig{}
                                : aed::load_run_config(opts.config_path);
    if (opts.seed >= 0) config.seed = static_cast<std::uint64_t>(opts.seed);
    config.validate();
    return config;
}

std::vector<double> default_lambda_values() {
    std::vector<double> v;
    for (int i = 0; i <= 10; ++i) v.push_back(static_cast<double>(i) / 10.0);
    return v;
}

}  // namespace

int main(int argc, char** argv) {
    if (const char* threads = std::getenv("AED_THREADS")) {
        const int n = std::atoi(threads);
        if (n >= 1) omp_set_num_threads(n);
    }

    CLI::App app{"Background-agnostic abnormal-event detection on synthetic scenes"};
    app.require_subcommand(1);

    CommonOpts gen_opts, train_opts, infer_opts, eval_opts, sweep_opts;
    std::string gen_out, train_data, train_out, infer_models, infer_data, infer_out;
    std::string eval_data, eval_preds, eval_out, sweep_work, sweep_out;
    bool emit_curves = false;
    std::vector<double> sweep_values = default_lambda_values();

    CLI::App* gen = app.add_subcommand("gen-data", "Generate episodes and pools");
    add_common(gen, gen_opts);
    gen->add_option("--out", gen_out, "Output data directory")->required();

    CLI::App* train = app.add_subcommand("train", "Two-phase model training");
    add_common(train, train_opts);
    train->add_option("--data", train_data, "Generated data directory")->required();
    train->add_option("--out", train_out, "Checkpoint output directory")->required();

    CLI::App* infer = app.add_subcommand("infer", "Score the test episodes");
    add_common(infer, infer_opts);
    infer->add_option("--models", infer_models, "Checkpoint directory")->required();
    infer->add_option("--data", infer_data, "Generated data directory")->required();
    infer->add_option("--out", infer_out, "Predictions output directory")->required();

    CLI::App* eval = app.add_subcommand("eval", "Evaluate predictions");
    add_common(eval, eval_opts);
    eval->add_option("--data", eval_data, "Generated data directory")->required();
    eval->add_option("--preds", eval_preds, "Predictions directory")->required();
    eval->add_option("--out", eval_out, "Results JSON path")->required();
    eval->add_flag("--emit-curves", emit_curves,
                   "Also write ROC/RBDC/TBDC operating-point CSVs");

    CLI::App* sweep = app.add_subcommand("sweep-lambda", "Lambda ablation sweep");
    add_common(sweep, sweep_opts);
    sweep->add_option("--work", sweep_work, "Working directory for per-run artifacts")
        ->required();
    sweep->add_option("--out", sweep_out, "Sweep results CSV path")->required();
    sweep->add_option("--values", sweep_values,
                      "Lambda values (default 0.0 .. 1.0 step 0.1)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*gen) {
            aed::pipeline::cmd_gen_data(resolve_config(gen_opts), gen_out);
        } else if (*train) {
            aed::pipeline::cmd_train(resolve_config(train_opts), train_data, train_out);
        } else if (*infer) {
            aed::pipeline::cmd_infer(resolve_config(infer_opts), infer_models,
                                     infer_data, infer_out);
        } else if (*eval) {
            const aed::pipeline::EvalResults r = aed::pipeline::cmd_eval(
                resolve_config(eval_opts), eval_data, eval_preds, eval_out, emit_curves);
            std::cout << "micro_auc=" << r.micro_auc << " macro_auc=" << r.macro_auc
                      << " rbdc=" << r.rbdc << " tbdc=" << r.tbdc << "\n";
        } else if (*sweep) {
            aed::pipeline::cmd_sweep_lambda(resolve_config(sweep_opts), sweep_values,
                                            sweep_work, sweep_out);
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const aed::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
