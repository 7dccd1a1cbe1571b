#include "aed/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>

#include <json.hpp>

#include "aed/checkpoint.hpp"
#include "aed/errors.hpp"
#include "aed/metrics.hpp"
#include "aed/rng.hpp"
#include "aed/scoring.hpp"

namespace aed::pipeline {

namespace fs = std::filesystem;

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    Rng r(base + 0x9e3779b97f4a7c15ULL * salt);
    return r.next_u64();
}

namespace {

// Seed-derivation salts, one per independent random stream.
constexpr std::uint64_t kSaltTrainEpisode = 0x1000;
constexpr std::uint64_t kSaltTestEpisode = 0x2000;
constexpr std::uint64_t kSaltPseudoAppearance = 0x3001;
constexpr std::uint64_t kSaltPseudoFlowSample = 0x3002;
constexpr std::uint64_t kSaltCaeInit = 0x4000;
constexpr std::uint64_t kSaltCaeShuffle = 0x5000;
constexpr std::uint64_t kSaltClfInit = 0x6000;
constexpr std::uint64_t kSaltClfShuffle = 0x7000;

std::string episode_dir_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "ep_%03d", index);
    return buf;
}

struct EpisodeMeta {
    std::uint64_t seed = 0;
    bool anomalous = false;
};

void write_meta(const fs::path& dir, const EpisodeMeta& meta) {
    std::ostringstream out;
    out << "seed = " << meta.seed << "\n";
    out << "anomalous = " << (meta.anomalous ? 1 : 0) << "\n";
    io::atomic_write_text(dir / "meta.txt", out.str());
}

EpisodeMeta read_meta(const fs::path& dir) {
    std::ifstream in(dir / "meta.txt");
    if (!in) throw DataError("missing episode metadata: " + (dir / "meta.txt").string());
    EpisodeMeta meta;
    std::string line;
    bool have_seed = false;
    while (std::getline(in, line)) {
        std::istringstream ls(line);
        std::string key, eq;
        if (!(ls >> key >> eq) || eq != "=") continue;
        if (key == "seed") {
            ls >> meta.seed;
            have_seed = true;
        } else if (key == "anomalous") {
            int v = 0;
            ls >> v;
            meta.anomalous = v != 0;
        }
    }
    if (!have_seed)
        throw DataError("episode metadata lacks a seed: " + (dir / "meta.txt").string());
    return meta;
}

/// Regenerates the episode exactly as written by cmd_gen_data; the 8-bit PGM
/// frames are the external artifact while training and inference consume the
/// full-precision regeneration.
scene::Episode regenerate_episode(const RunConfig& config, const fs::path& dir) {
    const EpisodeMeta meta = read_meta(dir);
    scene::SceneConfig sc = config.scene;
    sc.rng_seed = meta.seed;
    return scene::generate_episode(sc, meta.anomalous);
}

std::vector<fs::path> list_episode_dirs(const fs::path& root, const std::string& split) {
    const fs::path base = root / split;
    if (!fs::is_directory(base))
        throw DataError("missing data directory: " + base.string());
    std::vector<fs::path> dirs;
    for (const auto& entry : fs::directory_iterator(base))
        if (entry.is_directory()) dirs.push_back(entry.path());
    std::sort(dirs.begin(), dirs.end());
    if (dirs.empty()) throw DataError("no episodes under " + base.string());
    return dirs;
}

template <typename T>
void shuffle_indices(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[static_cast<std::size_t>(rng.uniform_int(
                                0, static_cast<int>(i) - 1))]);
}

std::vector<std::size_t> index_range(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

/// Deterministically reduces a pool to at most `cap` elements.
template <typename T>
void subsample_pool(std::vector<T>& pool, std::size_t cap, Rng rng) {
    if (pool.size() <= cap) return;
    std::vector<std::size_t> idx = index_range(pool.size());
    shuffle_indices(idx, rng);
    idx.resize(cap);
    std::sort(idx.begin(), idx.end());
    std::vector<T> kept;
    kept.reserve(cap);
    for (std::size_t i : idx) kept.push_back(std::move(pool[i]));
    pool = std::move(kept);
}

/// Everything phase 1 and phase 2 consume, regenerated from the episode seeds.
struct TrainingData {
    std::vector<CaeBatchItem> appearance_normal;  // input + segmentation truth
    std::vector<Tensor> motion_back_normal;
    std::vector<Tensor> motion_fwd_normal;
    std::vector<Tensor> appearance_pseudo;
    std::vector<Tensor> motion_back_pseudo;
    std::vector<Tensor> motion_fwd_pseudo;
};

TrainingData build_training_data(const RunConfig& config, const fs::path& data_dir) {
    TrainingData d;
    for (const fs::path& dir : list_episode_dirs(data_dir, "train")) {
        const scene::Episode ep = regenerate_episode(config, dir);
        for (const scene::ObjectSample& s : scene::extract_samples(ep)) {
            d.appearance_normal.push_back(CaeBatchItem{s.appearance, s.mask});
            d.motion_back_normal.push_back(s.flow_backward);
            d.motion_fwd_normal.push_back(s.flow_forward);
        }
        for (int k : config.pseudo.flow_strides) {
            for (Tensor& t : scene::make_pseudo_abnormal_flow(ep, k, false))
                d.motion_back_pseudo.push_back(std::move(t));
            for (Tensor& t : scene::make_pseudo_abnormal_flow(ep, k, true))
                d.motion_fwd_pseudo.push_back(std::move(t));
        }
    }
    if (d.appearance_normal.empty())
        throw DataError("training data contains no object samples");

    d.appearance_pseudo = scene::make_pseudo_abnormal_appearance(
        config.pseudo, config.pseudo.pool_size,
        derive_seed(config.seed, kSaltPseudoAppearance));
    const auto cap = static_cast<std::size_t>(config.pseudo.pool_size);
    subsample_pool(d.motion_back_pseudo, cap,
                   Rng(derive_seed(config.seed, kSaltPseudoFlowSample)));
    subsample_pool(d.motion_fwd_pseudo, cap,
                   Rng(derive_seed(config.seed, kSaltPseudoFlowSample + 1)));
    if (d.motion_back_pseudo.empty() || d.motion_fwd_pseudo.empty())
        throw DataError("no pseudo-abnormal motion samples could be derived");
    return d;
}

const char* stream_name(StreamKind kind) {
    switch (kind) {
        case StreamKind::Appearance: return "appearance";
        case StreamKind::MotionBackward: return "motion_backward";
        case StreamKind::MotionForward: return "motion_forward";
    }
    throw std::invalid_argument("unknown stream kind");
}

std::uint64_t stream_salt_offset(StreamKind kind) {
    return static_cast<std::uint64_t>(static_cast<int>(kind));
}

/// Phase 1: adversarial training of one auto-encoder.
CaeParams train_cae(const RunConfig& config, StreamKind kind,
                    const std::vector<CaeBatchItem>& normal,
                    const std::vector<Tensor>& pseudo, std::ostringstream& log) {
    CaeParams params = make_cae(
        kind, derive_seed(config.seed, kSaltCaeInit + stream_salt_offset(kind)));
    Rng shuffle_rng(derive_seed(config.seed, kSaltCaeShuffle + stream_salt_offset(kind)));

    const std::size_t bs = static_cast<std::size_t>(config.cae.batch_size);
    for (int epoch = 0; epoch < config.cae.epochs; ++epoch) {
        std::vector<std::size_t> n_idx = index_range(normal.size());
        std::vector<std::size_t> p_idx = index_range(pseudo.size());
        shuffle_indices(n_idx, shuffle_rng);
        shuffle_indices(p_idx, shuffle_rng);

        double rec_sum = 0.0, adv_sum = 0.0;
        std::size_t steps = 0, p_cursor = 0;
        for (std::size_t start = 0; start < n_idx.size(); start += bs) {
            const std::size_t end = std::min(start + bs, n_idx.size());
            std::vector<CaeBatchItem> batch_normal;
            batch_normal.reserve(end - start);
            for (std::size_t i = start; i < end; ++i)
                batch_normal.push_back(normal[n_idx[i]]);
            std::vector<Tensor> batch_pseudo;
            batch_pseudo.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) {
                batch_pseudo.push_back(pseudo[p_idx[p_cursor]]);
                if (++p_cursor == p_idx.size()) {
                    shuffle_indices(p_idx, shuffle_rng);
                    p_cursor = 0;
                }
            }
            const CaeStepReport report =
                cae_train_step(params, batch_normal, batch_pseudo, config.cae);
            rec_sum += report.rec_loss;
            adv_sum += report.adv_loss;
            ++steps;
        }
        log << "phase1 stream=" << stream_name(kind) << " epoch=" << epoch + 1
            << " rec=" << rec_sum / static_cast<double>(steps)
            << " adv=" << adv_sum / static_cast<double>(steps) << "\n";
    }
    return params;
}

/// Phase 2: the frozen encoder/decoder produce fixed inputs, so the
/// difference maps and latents are computed once up front.
std::vector<ClfSample> build_clf_samples(const FrozenCae& frozen, DiffMode mode,
                                         const std::vector<Tensor>& normal,
                                         const std::vector<Tensor>& pseudo) {
    std::vector<ClfSample> samples;
    samples.reserve(normal.size() + pseudo.size());
    for (const Tensor& input : normal) {
        FrozenForward f = frozen_forward(frozen, input);
        samples.push_back(
            ClfSample{make_diff(input, f.main_recon, mode), std::move(f.latent), 1});
    }
    for (const Tensor& input : pseudo) {
        FrozenForward f = frozen_forward(frozen, input);
        samples.push_back(
            ClfSample{make_diff(input, f.main_recon, mode), std::move(f.latent), 0});
    }
    return samples;
}

ClfParams train_clf(const RunConfig& config, StreamKind kind,
                    std::vector<ClfSample> samples, std::ostringstream& log) {
    ClfParams params =
        make_clf(kind, derive_seed(config.seed, kSaltClfInit + stream_salt_offset(kind)),
                 64, {32, 32, 16, 32, 64}, config.diff_mode);
    Rng shuffle_rng(derive_seed(config.seed, kSaltClfShuffle + stream_salt_offset(kind)));

    const std::size_t bs = static_cast<std::size_t>(config.clf.batch_size);
    for (int epoch = 0; epoch < config.clf.epochs; ++epoch) {
        std::vector<std::size_t> idx = index_range(samples.size());
        shuffle_indices(idx, shuffle_rng);
        double loss_sum = 0.0;
        std::size_t steps = 0;
        for (std::size_t start = 0; start < idx.size(); start += bs) {
            const std::size_t end = std::min(start + bs, idx.size());
            std::vector<ClfSample> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) batch.push_back(samples[idx[i]]);
            loss_sum += clf_train_step(params, batch, config.clf);
            ++steps;
        }
        log << "phase2 stream=" << stream_name(kind) << " epoch=" << epoch + 1
            << " loss=" << loss_sum / static_cast<double>(steps) << "\n";
    }
    return params;
}

io::NamedTensors load_verified(const fs::path& path, std::uint64_t expected_hash) {
    std::uint64_t hash = 0;
    io::NamedTensors t = io::load_checkpoint(path, &hash);
    if (hash != expected_hash)
        throw DataError("checkpoint " + path.string() +
                        " was produced under a different configuration");
    return t;
}

FrozenCae load_frozen(const fs::path& dir, StreamKind kind, std::uint64_t hash) {
    const fs::path path = dir / ("cae_" + std::string(stream_name(kind)) + ".ckpt");
    const CaeParams params = io::unpack_cae(load_verified(path, hash));
    if (params.kind != kind)
        throw DataError("checkpoint " + path.string() + " holds the wrong stream");
    return strip_for_inference(params);
}

ClfParams load_clf(const fs::path& dir, StreamKind kind, std::uint64_t hash) {
    const fs::path path = dir / ("clf_" + std::string(stream_name(kind)) + ".ckpt");
    ClfParams params = io::unpack_clf(load_verified(path, hash));
    if (params.kind != kind)
        throw DataError("checkpoint " + path.string() + " holds the wrong stream");
    return params;
}

std::string curve_csv(const std::vector<metrics::CurvePoint>& points,
                      const std::string& header) {
    std::ostringstream out;
    out.precision(17);
    out << header << "\n";
    for (const metrics::CurvePoint& p : points) out << p.x << "," << p.y << "\n";
    return out.str();
}

}  // namespace

void cmd_gen_data(const RunConfig& config, const fs::path& out_dir) {
    config.validate();
    fs::create_directories(out_dir);

    for (int i = 0; i < config.train_episodes; ++i) {
        scene::SceneConfig sc = config.scene;
        sc.rng_seed = derive_seed(config.seed, kSaltTrainEpisode + static_cast<std::uint64_t>(i));
        const scene::Episode ep = scene::generate_episode(sc, false);
        const fs::path dir = out_dir / "train" / episode_dir_name(i);
        fs::create_directories(dir);
        scene::write_episode(ep, dir);
        write_meta(dir, EpisodeMeta{sc.rng_seed, false});
    }
    for (int i = 0; i < config.test_episodes; ++i) {
        scene::SceneConfig sc = config.scene;
        sc.rng_seed = derive_seed(config.seed, kSaltTestEpisode + static_cast<std::uint64_t>(i));
        const scene::Episode ep = scene::generate_episode(sc, true);
        const fs::path dir = out_dir / "test" / episode_dir_name(i);
        fs::create_directories(dir);
        scene::write_episode(ep, dir);
        write_meta(dir, EpisodeMeta{sc.rng_seed, true});
    }

    const std::vector<Tensor> pool = scene::make_pseudo_abnormal_appearance(
        config.pseudo, config.pseudo.pool_size,
        derive_seed(config.seed, kSaltPseudoAppearance));
    const fs::path pool_dir = out_dir / "pseudo" / "appearance";
    fs::create_directories(pool_dir);
    for (std::size_t i = 0; i < pool.size(); ++i) {
        char name[24];
        std::snprintf(name, sizeof(name), "img_%05zu.pgm", i);
        Tensor img({pool[i].dim(0), pool[i].dim(1)});
        for (std::size_t j = 0; j < img.size(); ++j) img.data[j] = pool[i].data[j];
        scene::write_pgm(img, pool_dir / name);
    }

    io::atomic_write_text(out_dir / "config.txt", config_to_string(config));
}

void cmd_train(const RunConfig& config, const fs::path& data_dir,
               const fs::path& out_dir) {
    config.validate();
    fs::create_directories(out_dir);
    const std::uint64_t hash = config_hash(config);

    const TrainingData data = build_training_data(config, data_dir);
    std::ostringstream log;
    log << "samples normal=" << data.appearance_normal.size()
        << " pseudo_appearance=" << data.appearance_pseudo.size()
        << " pseudo_motion_back=" << data.motion_back_pseudo.size()
        << " pseudo_motion_fwd=" << data.motion_fwd_pseudo.size() << "\n";
    log << "pseudo-abnormal sampling: independent per stream\n";

    std::vector<Tensor> appearance_inputs;
    appearance_inputs.reserve(data.appearance_normal.size());
    for (const CaeBatchItem& item : data.appearance_normal)
        appearance_inputs.push_back(item.input);

    std::vector<CaeBatchItem> motion_back_items, motion_fwd_items;
    motion_back_items.reserve(data.motion_back_normal.size());
    for (const Tensor& t : data.motion_back_normal)
        motion_back_items.push_back(CaeBatchItem{t, std::nullopt});
    motion_fwd_items.reserve(data.motion_fwd_normal.size());
    for (const Tensor& t : data.motion_fwd_normal)
        motion_fwd_items.push_back(CaeBatchItem{t, std::nullopt});

    struct StreamSpec {
        StreamKind kind;
        const std::vector<CaeBatchItem>* normal;
        const std::vector<Tensor>* normal_inputs;
        const std::vector<Tensor>* pseudo;
    };
    const StreamSpec streams[3] = {
        {StreamKind::Appearance, &data.appearance_normal, &appearance_inputs,
         &data.appearance_pseudo},
        {StreamKind::MotionBackward, &motion_back_items, &data.motion_back_normal,
         &data.motion_back_pseudo},
        {StreamKind::MotionForward, &motion_fwd_items, &data.motion_fwd_normal,
         &data.motion_fwd_pseudo},
    };

    for (const StreamSpec& s : streams) {
        const CaeParams cae = train_cae(config, s.kind, *s.normal, *s.pseudo, log);
        io::save_checkpoint(io::pack_cae(cae), hash,
                            out_dir /
                                ("cae_" + std::string(stream_name(s.kind)) + ".ckpt"));

        const FrozenCae frozen = strip_for_inference(cae);
        std::vector<ClfSample> samples =
            build_clf_samples(frozen, config.diff_mode, *s.normal_inputs, *s.pseudo);
        const ClfParams clf = train_clf(config, s.kind, std::move(samples), log);
        io::save_checkpoint(io::pack_clf(clf), hash,
                            out_dir /
                                ("clf_" + std::string(stream_name(s.kind)) + ".ckpt"));
    }

    io::atomic_write_text(out_dir / "training_log.txt", log.str());
}

void cmd_infer(const RunConfig& config, const fs::path& model_dir,
               const fs::path& data_dir, const fs::path& out_dir) {
    config.validate();
    const std::uint64_t hash = config_hash(config);

    scoring::Models models;
    models.cae_appearance = load_frozen(model_dir, StreamKind::Appearance, hash);
    models.cae_motion_back = load_frozen(model_dir, StreamKind::MotionBackward, hash);
    models.cae_motion_fwd = load_frozen(model_dir, StreamKind::MotionForward, hash);
    models.clf_appearance = load_clf(model_dir, StreamKind::Appearance, hash);
    models.clf_motion_back = load_clf(model_dir, StreamKind::MotionBackward, hash);
    models.clf_motion_fwd = load_clf(model_dir, StreamKind::MotionForward, hash);

    for (const fs::path& dir : list_episode_dirs(data_dir, "test")) {
        const scene::Episode ep = regenerate_episode(config, dir);
        const std::vector<scene::ObjectSample> samples = scene::extract_samples(ep);
        const scoring::AnomalyVolume volume = scoring::infer_episode(
            models, samples, ep.frame_height, ep.frame_width,
            static_cast<int>(ep.frames.size()), config.filters);
        const fs::path ep_out = out_dir / dir.filename();
        fs::create_directories(ep_out);
        scoring::write_object_predictions(volume, ep_out / "region_predictions.csv");
        scoring::write_frame_predictions(volume, ep_out / "frame_predictions.csv");
    }
}

EvalResults cmd_eval(const RunConfig& config, const fs::path& data_dir,
                     const fs::path& pred_dir, const fs::path& out_file,
                     bool emit_curves) {
    config.validate();
    const int ep_len = config.scene.episode_length;

    std::vector<metrics::VideoScores> videos;
    metrics::TrackAnnotation all_truth;
    metrics::RegionPrediction all_preds;
    int num_frames = 0, track_id_offset = 0;

    for (const fs::path& dir : list_episode_dirs(data_dir, "test")) {
        const std::string name = dir.filename().string();
        const metrics::TrackAnnotation truth = metrics::load_tracks(dir / "tracks.csv");
        const metrics::RegionPrediction preds =
            metrics::load_predictions(pred_dir / name / "region_predictions.csv");
        const std::vector<double> scores =
            metrics::load_frame_scores(pred_dir / name / "frame_predictions.csv");
        if (static_cast<int>(scores.size()) != ep_len)
            throw DataError("frame score count mismatch for episode " + name +
                            ": expected " + std::to_string(ep_len) + ", got " +
                            std::to_string(scores.size()));

        metrics::VideoScores vs;
        vs.name = name;
        vs.scores = scores;
        vs.labels.assign(scores.size(), 0);
        int max_track = -1;
        for (const metrics::TrackRow& r : truth.rows) {
            check(r.frame_index >= 0 && r.frame_index < ep_len,
                  "eval: truth frame index out of range in " + name);
            vs.labels[static_cast<std::size_t>(r.frame_index)] = 1;
            max_track = std::max(max_track, r.track_id);
            all_truth.rows.push_back(metrics::TrackRow{r.frame_index + num_frames,
                                                       r.track_id + track_id_offset,
                                                       r.box});
        }
        for (const metrics::PredictionRow& r : preds.rows)
            all_preds.rows.push_back(
                metrics::PredictionRow{r.frame_index + num_frames, r.box, r.score});
        videos.push_back(std::move(vs));
        num_frames += ep_len;
        track_id_offset += max_track + 1;
    }

    EvalResults results;
    results.micro_auc = metrics::frame_auc(videos, metrics::AucMode::Micro);
    results.macro_auc = metrics::frame_auc(videos, metrics::AucMode::Macro);
    results.rbdc = metrics::rbdc(all_truth, all_preds, config.beta, num_frames);
    results.tbdc =
        metrics::tbdc(all_truth, all_preds, config.alpha, config.beta, num_frames);

    nlohmann::json j;
    j["micro_auc"] = results.micro_auc;
    j["macro_auc"] = results.macro_auc;
    j["rbdc"] = results.rbdc;
    j["tbdc"] = results.tbdc;
    j["alpha"] = config.alpha;
    j["beta"] = config.beta;
    j["filter_config"] = {{"mean_kt", config.filters.mean_kt},
                          {"mean_kh", config.filters.mean_kh},
                          {"mean_kw", config.filters.mean_kw},
                          {"gaussian_sigma", config.filters.gaussian_sigma},
                          {"gaussian_radius", config.filters.gaussian_radius}};
    j["seed"] = config.seed;
    j["config"] = config_to_string(config);
    if (out_file.has_parent_path()) fs::create_directories(out_file.parent_path());
    io::atomic_write_text(out_file, j.dump(2) + "\n");

    if (emit_curves) {
        const fs::path dir = out_file.has_parent_path() ? out_file.parent_path() : ".";
        io::atomic_write_text(dir / "roc_curve.csv",
                              curve_csv(metrics::roc_curve(videos), "fpr,tpr"));
        io::atomic_write_text(
            dir / "rbdc_curve.csv",
            curve_csv(metrics::rbdc_curve(all_truth, all_preds, config.beta, num_frames),
                      "fppf,rate"));
        io::atomic_write_text(
            dir / "tbdc_curve.csv",
            curve_csv(metrics::tbdc_curve(all_truth, all_preds, config.alpha,
                                          config.beta, num_frames),
                      "fppf,rate"));
    }
    return results;
}

void cmd_sweep_lambda(const RunConfig& config, const std::vector<double>& values,
                      const fs::path& work_dir, const fs::path& out_csv) {
    config.validate();
    check(!values.empty(), "sweep: empty lambda list");
    for (double v : values)
        check(v >= 0.0 && v <= 1.0, "sweep: lambda values must lie in [0,1]");

    const fs::path data_dir = work_dir / "data";
    cmd_gen_data(config, data_dir);

    std::ostringstream out;
    out.precision(17);
    out << "lambda,label,micro_auc,macro_auc,rbdc,tbdc\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        RunConfig cfg = config;
        cfg.cae.lambda = values[i];
        const fs::path run_dir = work_dir / ("run_" + std::to_string(i));
        cmd_train(cfg, data_dir, run_dir / "models");
        cmd_infer(cfg, run_dir / "models", data_dir, run_dir / "preds");
        const EvalResults r =
            cmd_eval(cfg, data_dir, run_dir / "preds", run_dir / "results.json");
        const char* label = values[i] == 0.0  ? "no-adversarial"
                            : values[i] >= 1.0 ? "boundary-unstable"
                                               : "adversarial";
        out << values[i] << "," << label << "," << r.micro_auc << "," << r.macro_auc
            << "," << r.rbdc << "," << r.tbdc << "\n";
    }
    if (out_csv.has_parent_path()) fs::create_directories(out_csv.parent_path());
    io::atomic_write_text(out_csv, out.str());
}

}  // namespace aed::pipeline
