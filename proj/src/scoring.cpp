#include "aed/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace aed::scoring {

double score_object(double y_app, double y_motion_back, double y_motion_fwd) {
    for (double y : {y_app, y_motion_back, y_motion_fwd})
        check(y >= 0.0 && y <= 1.0, "score_object: normality score outside [0,1]");
    return 1.0 - (y_app + y_motion_back + y_motion_fwd) / 3.0;
}

Tensor assemble_map(int frame_height, int frame_width,
                    const std::vector<Detection>& detections) {
    Tensor map({frame_height, frame_width});
    for (const Detection& d : detections) {
        check(d.box.x1 >= 0 && d.box.y1 >= 0 && d.box.x2 < frame_width &&
                  d.box.y2 < frame_height && d.box.x1 <= d.box.x2 &&
                  d.box.y1 <= d.box.y2,
              "assemble_map: box outside frame");
        for (int i = d.box.y1; i <= d.box.y2; ++i)
            for (int j = d.box.x1; j <= d.box.x2; ++j)
                map.at(i, j) = std::max(map.at(i, j), d.score);
    }
    return map;
}

std::vector<Tensor> mean_filter_3d(const std::vector<Tensor>& maps, int kt, int kh,
                                   int kw) {
    check(kt % 2 == 1 && kh % 2 == 1 && kw % 2 == 1,
          "mean_filter_3d: kernel sides must be odd");
    const int T = static_cast<int>(maps.size());
    if (T == 0) return {};
    const int H = maps[0].dim(0), W = maps[0].dim(1);
    const int rt = kt / 2, rh = kh / 2, rw = kw / 2;
    const double inv = 1.0 / (static_cast<double>(kt) * kh * kw);

    std::vector<Tensor> out(maps.size(), Tensor({H, W}));
#pragma omp parallel for schedule(static)
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < H; ++i)
            for (int j = 0; j < W; ++j) {
                double sum = 0.0;
                for (int dt = -rt; dt <= rt; ++dt) {
                    const int tt = std::clamp(t + dt, 0, T - 1);
                    for (int di = -rh; di <= rh; ++di) {
                        const int ii = std::clamp(i + di, 0, H - 1);
                        for (int dj = -rw; dj <= rw; ++dj)
                            sum += maps[tt].at(ii, std::clamp(j + dj, 0, W - 1));
                    }
                }
                out[t].at(i, j) = sum * inv;
            }
    return out;
}

std::vector<double> frame_level_scores(const std::vector<Tensor>& maps) {
    std::vector<double> scores;
    scores.reserve(maps.size());
    for (const Tensor& m : maps)
        scores.push_back(*std::max_element(m.data.begin(), m.data.end()));
    return scores;
}

std::vector<double> gaussian_smooth(const std::vector<double>& series, double sigma,
                                    int radius) {
    check(sigma > 0.0, "gaussian_smooth: sigma must be positive");
    check(radius >= 0, "gaussian_smooth: negative radius");
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int d = -radius; d <= radius; ++d) {
        kernel[d + radius] = std::exp(-0.5 * d * d / (sigma * sigma));
        sum += kernel[d + radius];
    }
    for (double& k : kernel) k /= sum;

    const int n = static_cast<int>(series.size());
    std::vector<double> out(series.size(), 0.0);
    for (int t = 0; t < n; ++t) {
        double acc = 0.0;
        for (int d = -radius; d <= radius; ++d)
            acc += kernel[d + radius] * series[std::clamp(t + d, 0, n - 1)];
        out[t] = acc;
    }
    return out;
}

double score_sample(const Models& models, const scene::ObjectSample& sample) {
    const auto app = frozen_forward(models.cae_appearance, sample.appearance);
    const auto mb = frozen_forward(models.cae_motion_back, sample.flow_backward);
    const auto mf = frozen_forward(models.cae_motion_fwd, sample.flow_forward);
    const auto y_app = clf_forward(
        models.clf_appearance,
        make_diff(sample.appearance, app.main_recon, models.clf_appearance.diff_mode),
        app.latent);
    const auto y_mb = clf_forward(
        models.clf_motion_back,
        make_diff(sample.flow_backward, mb.main_recon, models.clf_motion_back.diff_mode),
        mb.latent);
    const auto y_mf = clf_forward(
        models.clf_motion_fwd,
        make_diff(sample.flow_forward, mf.main_recon, models.clf_motion_fwd.diff_mode),
        mf.latent);
    return score_object(y_app.normal, y_mb.normal, y_mf.normal);
}

AnomalyVolume infer_episode(const Models& models,
                            const std::vector<scene::ObjectSample>& samples,
                            int frame_height, int frame_width, int num_frames,
                            const FilterConfig& filters) {
    AnomalyVolume vol;
    vol.detections.resize(static_cast<std::size_t>(num_frames));
    for (const scene::ObjectSample& s : samples) {
        check(s.frame_index >= 0 && s.frame_index < num_frames,
              "infer_episode: frame index out of range");
        vol.detections[static_cast<std::size_t>(s.frame_index)].push_back(
            Detection{s.box, score_sample(models, s)});
    }
    std::vector<Tensor> raw;
    raw.reserve(static_cast<std::size_t>(num_frames));
    for (int t = 0; t < num_frames; ++t)
        raw.push_back(assemble_map(frame_height, frame_width,
                                   vol.detections[static_cast<std::size_t>(t)]));
    vol.maps = mean_filter_3d(raw, filters.mean_kt, filters.mean_kh, filters.mean_kw);
    vol.frame_scores = gaussian_smooth(frame_level_scores(vol.maps),
                                       filters.gaussian_sigma, filters.gaussian_radius);
    return vol;
}

void write_object_predictions(const AnomalyVolume& volume,
                              const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_object_predictions: cannot open " + path.string());
    out << "frame_idx,x1,y1,x2,y2,score\n";
    out.precision(17);
    for (std::size_t t = 0; t < volume.detections.size(); ++t)
        for (const Detection& d : volume.detections[t])
            out << t << ',' << d.box.x1 << ',' << d.box.y1 << ',' << d.box.x2 << ','
                << d.box.y2 << ',' << d.score << '\n';
}

void write_frame_predictions(const AnomalyVolume& volume,
                             const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("write_frame_predictions: cannot open " + path.string());
    out << "frame_idx,score\n";
    out.precision(17);
    for (std::size_t t = 0; t < volume.frame_scores.size(); ++t)
        out << t << ',' << volume.frame_scores[t] << '\n';
}

}  // namespace aed::scoring
