#pragma once

#include <filesystem>
#include <vector>

#include "aed/config.hpp"

namespace aed::pipeline {

struct EvalResults {
    double micro_auc = 0.0;
    double macro_auc = 0.0;
    double rbdc = 0.0;
    double tbdc = 0.0;
};

/// Writes train/ (normal-only) and test/ (anomalies injected) episode
/// directories, the pseudo-abnormal appearance pool, and the resolved config.
void cmd_gen_data(const RunConfig& config, const std::filesystem::path& out_dir);

/// Two-phase training: the three adversarial auto-encoders, then the three
/// frozen-feature classifiers. Writes six checkpoints plus training_log.txt.
void cmd_train(const RunConfig& config, const std::filesystem::path& data_dir,
               const std::filesystem::path& out_dir);

/// Scores every test episode, writing region_predictions.csv and
/// frame_predictions.csv per episode under out_dir.
void cmd_infer(const RunConfig& config, const std::filesystem::path& model_dir,
               const std::filesystem::path& data_dir,
               const std::filesystem::path& out_dir);

/// Evaluates predictions against the test tracks; writes the results JSON
/// (and, optionally, the ROC/RBDC/TBDC operating-point CSVs next to it).
EvalResults cmd_eval(const RunConfig& config, const std::filesystem::path& data_dir,
                     const std::filesystem::path& pred_dir,
                     const std::filesystem::path& out_file, bool emit_curves = false);

/// Generates one shared dataset, then trains and evaluates once per lambda
/// value with a constant seed; writes a CSV of lambda vs the four metrics.
void cmd_sweep_lambda(const RunConfig& config, const std::vector<double>& values,
                      const std::filesystem::path& work_dir,
                      const std::filesystem::path& out_csv);

/// Deterministic per-purpose seed derivation from the global seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt);

}  // namespace aed::pipeline
