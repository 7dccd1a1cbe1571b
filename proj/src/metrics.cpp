#include "aed/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "aed/tensor.hpp"  // for check()

namespace aed::metrics {

double iou(const Box& a, const Box& b) {
    const double area_a = (a.x2 - a.x1) * (a.y2 - a.y1);
    const double area_b = (b.x2 - b.x1) * (b.y2 - b.y1);
    check(area_a > 0.0 && area_b > 0.0, "iou: zero-area box");
    const double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
    const double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
    const double inter = ix * iy;
    return inter / (area_a + area_b - inter);
}

namespace {

double auc_single(const std::vector<double>& scores, const std::vector<int>& labels,
                  const std::string& name, std::vector<CurvePoint>* points = nullptr) {
    check(scores.size() == labels.size(), "frame_auc: score/label length mismatch");
    std::size_t pos = 0, neg = 0;
    for (int l : labels) (l ? pos : neg)++;
    if (pos == 0 || neg == 0)
        throw std::runtime_error("frame_auc: undefined AUC for video '" + name +
                                 "' (single-class labels)");

    std::vector<std::size_t> order(scores.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    // The doubled trapezoid area accumulates exactly in integers:
    // sum of dFP * (TP_prev + TP_cur), divided by 2*P*N at the end. This is
    // bit-identical to the pairwise Mann-Whitney statistic
    // (2*wins + ties) / (2*P*N).
    std::int64_t acc = 0;
    std::size_t tp = 0, fp = 0, i = 0;
    while (i < order.size()) {
        // equal scores collapse into one threshold step
        const std::size_t ptp = tp, pfp = fp;
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] ? tp : fp)++;
            ++j;
        }
        acc += static_cast<std::int64_t>(fp - pfp) * static_cast<std::int64_t>(ptp + tp);
        if (points)
            points->push_back(
                CurvePoint{static_cast<double>(fp) / static_cast<double>(neg),
                           static_cast<double>(tp) / static_cast<double>(pos)});
        i = j;
    }
    return static_cast<double>(acc) /
           (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

}  // namespace

double frame_auc(const std::vector<VideoScores>& videos, AucMode mode) {
    check(!videos.empty(), "frame_auc: no videos");
    if (mode == AucMode::Micro) {
        std::vector<double> scores;
        std::vector<int> labels;
        for (const VideoScores& v : videos) {
            scores.insert(scores.end(), v.scores.begin(), v.scores.end());
            labels.insert(labels.end(), v.labels.begin(), v.labels.end());
        }
        return auc_single(scores, labels, "<all>");
    }
    double sum = 0.0;
    for (const VideoScores& v : videos) sum += auc_single(v.scores, v.labels, v.name);
    return sum / static_cast<double>(videos.size());
}

std::vector<CurvePoint> roc_curve(const std::vector<VideoScores>& videos) {
    check(!videos.empty(), "roc_curve: no videos");
    std::vector<double> scores;
    std::vector<int> labels;
    for (const VideoScores& v : videos) {
        scores.insert(scores.end(), v.scores.begin(), v.scores.end());
        labels.insert(labels.end(), v.labels.begin(), v.labels.end());
    }
    std::vector<CurvePoint> points;
    auc_single(scores, labels, "<all>", &points);
    return points;
}

namespace {

/// Trapezoidal area of the threshold-descending operating-point sequence over
/// FPPF in [0,1]. Starts at (0,0); a curve ending before FPPF=1 is extended
/// horizontally; a segment crossing FPPF=1 is clipped by interpolation.
double curve_area(const std::vector<CurvePoint>& points) {
    double area = 0.0, px = 0.0, py = 0.0;
    for (const CurvePoint& p : points) {
        if (p.x > px) {
            if (p.x >= 1.0) {
                const double t = (1.0 - px) / (p.x - px);
                const double yc = py + t * (p.y - py);
                area += (1.0 - px) * 0.5 * (py + yc);
                return area;
            }
            area += (p.x - px) * 0.5 * (py + p.y);
            px = p.x;
        }
        py = p.y;
    }
    area += (1.0 - px) * py;
    return area;
}

struct MatchResult {
    std::vector<char> gt_matched;  // parallel to truth.rows
    int false_positives = 0;
};

/// One-to-one greedy matching by descending IoU among pairs with IoU >= beta,
/// per frame, over the predictions with score >= threshold.
MatchResult match_at_threshold(const TrackAnnotation& truth,
                               const RegionPrediction& preds, double beta,
                               double threshold) {
    MatchResult r;
    r.gt_matched.assign(truth.rows.size(), 0);

    std::map<int, std::vector<std::size_t>> gt_by_frame;
    for (std::size_t i = 0; i < truth.rows.size(); ++i)
        gt_by_frame[truth.rows[i].frame_index].push_back(i);

    std::map<int, std::vector<std::size_t>> preds_by_frame;
    for (std::size_t i = 0; i < preds.rows.size(); ++i)
        if (preds.rows[i].score >= threshold)
            preds_by_frame[preds.rows[i].frame_index].push_back(i);

    for (const auto& [frame, pred_ids] : preds_by_frame) {
        struct Pair {
            double overlap;
            std::size_t pred, gt;
        };
        std::vector<Pair> pairs;
        auto it = gt_by_frame.find(frame);
        if (it != gt_by_frame.end()) {
            for (std::size_t p : pred_ids)
                for (std::size_t g : it->second) {
                    const double o = iou(preds.rows[p].box, truth.rows[g].box);
                    if (o >= beta) pairs.push_back(Pair{o, p, g});
                }
        }
        std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
            if (a.overlap != b.overlap) return a.overlap > b.overlap;
            if (a.pred != b.pred) return a.pred < b.pred;
            return a.gt < b.gt;
        });
        std::vector<char> pred_used(preds.rows.size(), 0);
        int matched_preds = 0;
        for (const Pair& pr : pairs) {
            if (pred_used[pr.pred] || r.gt_matched[pr.gt]) continue;
            pred_used[pr.pred] = 1;
            r.gt_matched[pr.gt] = 1;
            ++matched_preds;
        }
        r.false_positives += static_cast<int>(pred_ids.size()) - matched_preds;
    }
    return r;
}

std::vector<double> distinct_scores_descending(const RegionPrediction& preds) {
    std::vector<double> scores;
    scores.reserve(preds.rows.size());
    for (const PredictionRow& r : preds.rows) scores.push_back(r.score);
    std::sort(scores.begin(), scores.end(), std::greater<>());
    scores.erase(std::unique(scores.begin(), scores.end()), scores.end());
    return scores;
}

}  // namespace

std::vector<CurvePoint> rbdc_curve(const TrackAnnotation& truth,
                                   const RegionPrediction& preds, double beta,
                                   int num_frames) {
    check(beta > 0.0 && beta <= 1.0, "rbdc: beta must be in (0,1]");
    check(num_frames >= 1, "rbdc: num_frames must be >= 1");
    if (truth.rows.empty())
        throw std::runtime_error("rbdc: undefined for empty ground truth");

    const double total_gt = static_cast<double>(truth.rows.size());
    std::vector<CurvePoint> points;
    for (double thr : distinct_scores_descending(preds)) {
        const MatchResult m = match_at_threshold(truth, preds, beta, thr);
        const double matched =
            static_cast<double>(std::count(m.gt_matched.begin(), m.gt_matched.end(), 1));
        points.push_back(CurvePoint{
            static_cast<double>(m.false_positives) / static_cast<double>(num_frames),
            matched / total_gt});
    }
    return points;
}

double rbdc(const TrackAnnotation& truth, const RegionPrediction& preds, double beta,
            int num_frames) {
    return curve_area(rbdc_curve(truth, preds, beta, num_frames));
}

std::vector<CurvePoint> tbdc_curve(const TrackAnnotation& truth,
                                   const RegionPrediction& preds, double alpha,
                                   double beta, int num_frames) {
    check(alpha > 0.0 && alpha <= 1.0, "tbdc: alpha must be in (0,1]");
    check(beta > 0.0 && beta <= 1.0, "tbdc: beta must be in (0,1]");
    check(num_frames >= 1, "tbdc: num_frames must be >= 1");
    if (truth.rows.empty())
        throw std::runtime_error("tbdc: undefined for empty ground truth");

    std::map<int, std::vector<std::size_t>> tracks;
    for (std::size_t i = 0; i < truth.rows.size(); ++i)
        tracks[truth.rows[i].track_id].push_back(i);
    const double total_tracks = static_cast<double>(tracks.size());

    std::vector<CurvePoint> points;
    for (double thr : distinct_scores_descending(preds)) {
        const MatchResult m = match_at_threshold(truth, preds, beta, thr);
        int detected = 0;
        for (const auto& [id, rows] : tracks) {
            int matched = 0;
            for (std::size_t i : rows) matched += m.gt_matched[i];
            const double fraction =
                static_cast<double>(matched) / static_cast<double>(rows.size());
            if (fraction >= alpha) ++detected;
        }
        points.push_back(CurvePoint{
            static_cast<double>(m.false_positives) / static_cast<double>(num_frames),
            static_cast<double>(detected) / total_tracks});
    }
    return points;
}

double tbdc(const TrackAnnotation& truth, const RegionPrediction& preds, double alpha,
            double beta, int num_frames) {
    return curve_area(tbdc_curve(truth, preds, alpha, beta, num_frames));
}

namespace {

std::ifstream open_csv(const std::filesystem::path& path, const std::string& header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("empty file: " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != header)
        throw std::runtime_error("unexpected header in " + path.string() + ": '" + line +
                                 "' (expected '" + header + "')");
    return in;
}

[[noreturn]] void row_error(const std::filesystem::path& path, int line_no) {
    throw std::runtime_error("malformed row at " + path.string() + ":" +
                             std::to_string(line_no));
}

}  // namespace

TrackAnnotation load_tracks(const std::filesystem::path& path) {
    std::ifstream in = open_csv(path, "frame_idx,track_id,x1,y1,x2,y2");
    TrackAnnotation t;
    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        int frame, id, x1, y1, x2, y2;
        if (std::sscanf(line.c_str(), "%d,%d,%d,%d,%d,%d", &frame, &id, &x1, &y1, &x2,
                        &y2) != 6)
            row_error(path, line_no);
        // inclusive pixel coordinates -> edge coordinates
        t.rows.push_back(TrackRow{frame, id,
                                  Box{static_cast<double>(x1), static_cast<double>(y1),
                                      static_cast<double>(x2 + 1),
                                      static_cast<double>(y2 + 1)}});
    }
    return t;
}

RegionPrediction load_predictions(const std::filesystem::path& path) {
    std::ifstream in = open_csv(path, "frame_idx,x1,y1,x2,y2,score");
    RegionPrediction p;
    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        int frame, x1, y1, x2, y2;
        double score;
        if (std::sscanf(line.c_str(), "%d,%d,%d,%d,%d,%lf", &frame, &x1, &y1, &x2, &y2,
                        &score) != 6)
            row_error(path, line_no);
        p.rows.push_back(PredictionRow{
            frame,
            Box{static_cast<double>(x1), static_cast<double>(y1),
                static_cast<double>(x2 + 1), static_cast<double>(y2 + 1)},
            score});
    }
    return p;
}

std::vector<double> load_frame_scores(const std::filesystem::path& path) {
    std::ifstream in = open_csv(path, "frame_idx,score");
    std::vector<double> scores;
    std::string line;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        int frame;
        double score;
        if (std::sscanf(line.c_str(), "%d,%lf", &frame, &score) != 2)
            row_error(path, line_no);
        scores.push_back(score);
    }
    return scores;
}

}  // namespace aed::metrics
