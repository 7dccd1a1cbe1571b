#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace aed::metrics {

/// Axis-aligned rectangle with edge semantics: area = (x2-x1)*(y2-y1).
/// Inclusive pixel boxes from the CSV files are converted on load by
/// extending x2/y2 by one, so the area equals the pixel count.
struct Box {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
};

double iou(const Box& a, const Box& b);

struct TrackRow {
    int frame_index = 0;
    int track_id = 0;
    Box box;
};

struct TrackAnnotation {
    std::vector<TrackRow> rows;
};

struct PredictionRow {
    int frame_index = 0;
    Box box;
    double score = 0.0;
};

struct RegionPrediction {
    std::vector<PredictionRow> rows;
};

struct VideoScores {
    std::string name;
    std::vector<double> scores;
    std::vector<int> labels;  // 1 abnormal frame, 0 normal frame
};

enum class AucMode { Micro, Macro };

/// Frame-level ROC AUC; micro concatenates all videos, macro averages the
/// per-video AUCs. Equal scores form a single threshold step.
double frame_auc(const std::vector<VideoScores>& videos, AucMode mode);

/// Region-based detection criterion: region detection rate against false
/// positives per frame, integrated over FPPF in [0,1]. A prediction matches
/// a ground-truth region when IoU >= beta; per frame the matching is greedy
/// by descending IoU, one-to-one.
double rbdc(const TrackAnnotation& truth, const RegionPrediction& preds, double beta,
            int num_frames);

/// Track-based detection criterion: a track counts as detected when at least
/// a fraction alpha of its regions is matched; curve and area as in rbdc.
double tbdc(const TrackAnnotation& truth, const RegionPrediction& preds, double alpha,
            double beta, int num_frames);

/// One operating point of a threshold-swept curve.
struct CurvePoint {
    double x = 0.0;  // FPR (ROC) or FPPF (RBDC/TBDC)
    double y = 0.0;  // TPR or detection rate
};

/// Micro ROC points in threshold-descending order (excludes the implicit
/// (0,0) start).
std::vector<CurvePoint> roc_curve(const std::vector<VideoScores>& videos);

std::vector<CurvePoint> rbdc_curve(const TrackAnnotation& truth,
                                   const RegionPrediction& preds, double beta,
                                   int num_frames);

std::vector<CurvePoint> tbdc_curve(const TrackAnnotation& truth,
                                   const RegionPrediction& preds, double alpha,
                                   double beta, int num_frames);

TrackAnnotation load_tracks(const std::filesystem::path& path);
RegionPrediction load_predictions(const std::filesystem::path& path);

/// Frame-level predictions CSV (`frame_idx,score`).
std::vector<double> load_frame_scores(const std::filesystem::path& path);

}  // namespace aed::metrics
