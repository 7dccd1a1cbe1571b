#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "aed/cae.hpp"
#include "aed/clf.hpp"
#include "aed/scene.hpp"
#include "aed/scoring.hpp"

namespace aed {

/// Full resolved run configuration. Defaults follow the reference training
/// recipe: CAE Adam 1e-4 / lambda 0.2 / 20 epochs / batch 64, classifier
/// Adam 1e-3 / 30 epochs / batch 64, alpha = beta = 0.1.
struct RunConfig {
    std::uint64_t seed = 1;
    int train_episodes = 8;
    int test_episodes = 10;
    scene::SceneConfig scene = scene::default_scene_config();
    scene::PseudoAbnormalConfig pseudo;
    TrainHyper cae;
    ClfHyper clf;
    DiffMode diff_mode = DiffMode::Absolute;
    scoring::FilterConfig filters;
    double alpha = 0.1;
    double beta = 0.1;

    void validate() const;
};

/// Parses the flat `key = value` text format (`#` starts a comment). Unknown
/// keys and malformed values raise std::invalid_argument. Values not present
/// keep their defaults.
RunConfig parse_run_config(const std::string& text);

RunConfig load_run_config(const std::filesystem::path& path);

/// Canonical serialization: every field, fixed key order, round-trip exact.
std::string config_to_string(const RunConfig& config);

/// FNV-1a 64-bit hash of the canonical serialization.
std::uint64_t config_hash(const RunConfig& config);

}  // namespace aed
