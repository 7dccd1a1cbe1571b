#pragma once

#include <array>
#include <filesystem>
#include <vector>

#include "aed/cae.hpp"
#include "aed/clf.hpp"
#include "aed/scene.hpp"
#include "aed/tensor.hpp"

namespace aed::scoring {

/// Anomaly score of one object from the three per-stream normality scores:
/// one minus their average.
double score_object(double y_app, double y_motion_back, double y_motion_fwd);

struct Detection {
    scene::PixelBox box;
    double score = 0.0;
};

/// Per-frame anomaly map: each pixel holds the maximum score over covering
/// boxes, zero where uncovered.
Tensor assemble_map(int frame_height, int frame_width,
                    const std::vector<Detection>& detections);

struct FilterConfig {
    int mean_kt = 5, mean_kh = 9, mean_kw = 9;  // 3D mean filter kernel
    double gaussian_sigma = 5.0;                // frames
    int gaussian_radius = 20;                   // frames
};

/// 3D mean filter with replicate padding; kernel sides must be odd.
std::vector<Tensor> mean_filter_3d(const std::vector<Tensor>& maps, int kt, int kh,
                                   int kw);

/// Per-frame maximum of each map.
std::vector<double> frame_level_scores(const std::vector<Tensor>& maps);

/// Truncated, renormalized Gaussian smoothing with replicate padding.
std::vector<double> gaussian_smooth(const std::vector<double>& series, double sigma,
                                    int radius);

struct AnomalyVolume {
    std::vector<Tensor> maps;          // filtered per-frame maps
    std::vector<double> frame_scores;  // post-smoothing series
    std::vector<std::vector<Detection>> detections;  // raw object-level scores
};

struct Models {
    FrozenCae cae_appearance, cae_motion_back, cae_motion_fwd;
    ClfParams clf_appearance, clf_motion_back, clf_motion_fwd;
};

/// Scores one object through all three streams.
double score_sample(const Models& models, const scene::ObjectSample& sample);

/// Full inference pipeline: per-object scores, overlap-max map assembly,
/// 3D mean filtering, per-frame maxima, Gaussian temporal smoothing.
AnomalyVolume infer_episode(const Models& models,
                            const std::vector<scene::ObjectSample>& samples,
                            int frame_height, int frame_width, int num_frames,
                            const FilterConfig& filters);

/// Object-level predictions CSV: frame_idx,x1,y1,x2,y2,score (pre-filter).
void write_object_predictions(const AnomalyVolume& volume,
                              const std::filesystem::path& path);

/// Frame-level predictions CSV: frame_idx,score (post-smoothing).
void write_frame_predictions(const AnomalyVolume& volume,
                             const std::filesystem::path& path);

}  // namespace aed::scoring
