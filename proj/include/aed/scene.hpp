#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "aed/tensor.hpp"

namespace aed::scene {

enum class ShapeKind { Disc, Square, Triangle, Cross };

ShapeKind shape_from_string(const std::string& s);
std::string shape_to_string(ShapeKind k);

struct ObjectKind {
    ShapeKind shape = ShapeKind::Disc;
    int size_min = 6, size_max = 12;      // half-extent in pixels
    int speed_min = 1, speed_max = 3;     // per-axis px/frame
    double intensity_min = 0.35, intensity_max = 0.95;
};

struct AnomalyKind {
    ShapeKind shape = ShapeKind::Cross;
    int size = 9;
    double speed_multiplier = 1.0;
};

struct SceneConfig {
    int frame_height = 128;
    int frame_width = 160;
    int episode_length = 96;
    int objects_per_episode = 3;
    double noise_level = 0.02;  // additive uniform pixel noise amplitude
    std::vector<ObjectKind> normal_kinds;
    std::vector<AnomalyKind> anomaly_kinds;
    std::uint64_t rng_seed = 1;

    void validate() const;
};

/// Defaults: discs and squares as normal objects; one unseen-shape anomaly
/// and one seen-shape-at-4x-speed anomaly.
SceneConfig default_scene_config();

/// Box as inclusive pixel coordinates, x1 <= x2, y1 <= y2.
struct PixelBox {
    int x1 = 0, y1 = 0, x2 = 0, y2 = 0;
};

struct TruthRow {
    int frame_index = 0;
    int object_id = 0;
    PixelBox box;
    ShapeKind shape = ShapeKind::Disc;
    int size = 0;          // half-extent
    int cx = 0, cy = 0;    // center
    double intensity = 1.0;
    bool is_anomaly = false;
};

struct Episode {
    int frame_height = 0, frame_width = 0;
    std::vector<Tensor> frames;                 // H x W, values in [0,1]
    std::vector<std::vector<TruthRow>> truth;   // per frame
};

/// Objects follow integer-pixel linear trajectories with reflection at the
/// borders; when `anomalous`, one object per configured anomaly kind is
/// injected over a contiguous interval in the middle of the episode.
Episode generate_episode(const SceneConfig& config, bool anomalous);

/// True if (px,py) lies inside the shape centered at (cx,cy).
bool shape_contains(ShapeKind shape, int size, int cx, int cy, int px, int py);

/// Displacement of the object between this frame and its neighbor
/// (clamped at episode ends).
struct Displacement {
    int dx = 0, dy = 0;
};
Displacement object_displacement(const Episode& ep, int frame_index, int object_id,
                                 bool forward);

/// Analytic two-channel flow crop (orientation in radians, magnitude in
/// px/frame), 64x64x2, zero outside the object mask.
Tensor compute_flow(const Episode& ep, int frame_index, const TruthRow& row,
                    bool forward);

/// All per-object flows of one frame, in truth-row order.
std::vector<Tensor> compute_flow(const Episode& ep, int frame_index, bool forward);

struct ObjectSample {
    Tensor appearance;     // 64 x 64 x 1, values in [0,1]
    Tensor flow_backward;  // 64 x 64 x 2
    Tensor flow_forward;   // 64 x 64 x 2
    Tensor mask;           // 64 x 64 x 1, binary
    int frame_index = 0;
    PixelBox box;
    bool pseudo_abnormal = false;
};

/// Crops every truth row to the 64x64 CAE input size by nearest-neighbor
/// resize. Degenerate boxes are skipped and counted.
std::vector<ObjectSample> extract_samples(const Episode& ep,
                                          int* skipped_degenerate = nullptr);

enum class TextureKind { Checkerboard, ValueNoise, Stripes, Blobs };

struct PseudoAbnormalConfig {
    int pool_size = 2000;
    std::vector<TextureKind> texture_kinds{TextureKind::Checkerboard,
                                           TextureKind::ValueNoise,
                                           TextureKind::Stripes, TextureKind::Blobs};
    std::vector<int> flow_strides{3, 4, 5, 6};
};

/// Procedural 64x64x1 texture images in [0,1], disjoint from the moving-shape
/// renders; the stand-in for the out-of-domain appearance pool.
std::vector<Tensor> make_pseudo_abnormal_appearance(const PseudoAbnormalConfig& config,
                                                    int n, std::uint64_t seed);

/// Flow of one object at temporal stride k: orientation unchanged, magnitude
/// magnified exactly k-fold.
Tensor magnify_flow(const Tensor& stride1_flow, int k);

/// Stride-k flows for every truth row of the episode.
std::vector<Tensor> make_pseudo_abnormal_flow(const Episode& ep, int k, bool forward);

/// Tracks CSV (`frame_idx,track_id,x1,y1,x2,y2`), one row per anomalous
/// ground-truth region.
void write_annotations(const Episode& ep, const std::filesystem::path& path);

void write_pgm(const Tensor& frame, const std::filesystem::path& path);
Tensor read_pgm(const std::filesystem::path& path);

/// Writes frame_%06d.pgm files plus tracks.csv into the episode directory.
void write_episode(const Episode& ep, const std::filesystem::path& dir);

}  // namespace aed::scene
