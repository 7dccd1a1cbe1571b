// Acceptance gate: one self-contained check per release criterion, each
// printing a single PASS/FAIL line with its measured runtime. The process
// exit code is the number of failed criteria.
//
// The heavyweight checks (separation, ablation, end-to-end, determinism) use
// a scaled-down run configuration whose targets were confirmed by pilot runs
// before being frozen here.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "aed/cae.hpp"
#include "aed/config.hpp"
#include "aed/metrics.hpp"
#include "aed/ops.hpp"
#include "aed/pipeline.hpp"
#include "aed/rng.hpp"
#include "aed/scene.hpp"
#include "aed/scoring.hpp"
#include "metric_oracles.hpp"
#include "step_reference.hpp"

using namespace aed;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

int g_failures = 0;

void run_criterion(const std::string& name, double budget_seconds,
                   const std::function<void(Outcome&)>& body) {
    Outcome out;
    const auto t0 = Clock::now();
    try {
        body(out);
    } catch (const std::exception& e) {
        out.require(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    out.require(secs < budget_seconds, "runtime budget exceeded");
    if (!out.pass) ++g_failures;
    std::printf("[%s] %-28s %7.1fs (budget %.0fs)%s%s\n", out.pass ? "PASS" : "FAIL",
                name.c_str(), secs, budget_seconds, out.detail.empty() ? "" : " - ",
                out.detail.c_str());
    std::fflush(stdout);
}

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

double weighted_sum(const Tensor& t, const Tensor& weights) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += t.data[i] * weights.data[i];
    return s;
}

/// Central finite differences of `objective` w.r.t. each element of `subject`
/// against the analytic gradient; requires relative error below 1e-4.
void check_fd(Outcome& out, Tensor& subject, const std::function<double()>& objective,
              const Tensor& analytic, const char* label) {
    constexpr double eps = 1e-5;
    for (std::size_t i = 0; i < subject.size(); ++i) {
        const double saved = subject.data[i];
        subject.data[i] = saved + eps;
        const double up = objective();
        subject.data[i] = saved - eps;
        const double down = objective();
        subject.data[i] = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double a = analytic.data[i];
        const bool ok = std::fabs(a - numeric) <=
                        1e-4 * std::max({1.0, std::fabs(a), std::fabs(numeric)});
        out.require(ok, std::string(label) + ": finite-difference mismatch");
        if (!ok) return;
    }
}

// ---------------------------------------------------------------------------
// Criterion 1: every differentiable primitive and every loss passes central
// finite-difference checks over 100 random seeds.
// ---------------------------------------------------------------------------
void criterion_gradients(Outcome& out) {
    for (std::uint64_t seed = 0; seed < 100 && out.pass; ++seed) {
        Rng rng(seed + 1);
        // convolution
        {
            const int h = rng.uniform_int(2, 4), w = rng.uniform_int(2, 4);
            const int cin = rng.uniform_int(1, 3), cout = rng.uniform_int(1, 3);
            Tensor input = random_tensor({h, w, cin}, rng);
            Tensor kernels = random_tensor({3, 3, cin, cout}, rng);
            Tensor bias = random_tensor({cout}, rng);
            const Tensor up = random_tensor({h, w, cout}, rng);
            const auto obj = [&] { return weighted_sum(ops::conv2d(input, kernels, bias), up); };
            const ops::Conv2dGrads g = ops::conv2d_backward(input, kernels, up);
            check_fd(out, input, obj, g.input, "conv2d/input");
            check_fd(out, kernels, obj, g.kernels, "conv2d/kernels");
            check_fd(out, bias, obj, g.bias, "conv2d/bias");
        }
        // max pooling (resampled until windows are free of near-ties)
        {
            const int h = 2 * rng.uniform_int(1, 2), w = 2 * rng.uniform_int(1, 2);
            const int c = rng.uniform_int(1, 3);
            Tensor input({h, w, c});
            for (bool safe = false; !safe;) {
                input = random_tensor({h, w, c}, rng);
                safe = true;
                for (int i = 0; safe && i < h; i += 2)
                    for (int j = 0; safe && j < w; j += 2)
                        for (int k = 0; safe && k < c; ++k) {
                            const double v[4] = {input.at(i, j, k), input.at(i, j + 1, k),
                                                 input.at(i + 1, j, k),
                                                 input.at(i + 1, j + 1, k)};
                            for (int a = 0; a < 4; ++a)
                                for (int b = a + 1; b < 4; ++b)
                                    if (std::fabs(v[a] - v[b]) < 1e-3) safe = false;
                        }
            }
            const Tensor up = random_tensor({h / 2, w / 2, c}, rng);
            const auto obj = [&] { return weighted_sum(ops::maxpool2d(input).output, up); };
            const ops::PoolResult r = ops::maxpool2d(input);
            check_fd(out, input, obj, ops::maxpool2d_backward(r, up, input.shape),
                     "maxpool2d");
        }
        // nearest-neighbour upsampling
        {
            const int h = rng.uniform_int(1, 3), w = rng.uniform_int(1, 3);
            const int c = rng.uniform_int(1, 2);
            Tensor in = random_tensor({h, w, c}, rng);
            const Tensor up = random_tensor({2 * h, 2 * w, c}, rng);
            const auto obj = [&] { return weighted_sum(ops::upsample_nearest(in), up); };
            check_fd(out, in, obj, ops::upsample_nearest_backward(up), "upsample");
        }
        // dense layer
        {
            const int n = rng.uniform_int(1, 6), m = rng.uniform_int(1, 4);
            Tensor input = random_tensor({n}, rng);
            Tensor weights = random_tensor({n, m}, rng);
            Tensor bias = random_tensor({m}, rng);
            const Tensor up = random_tensor({m}, rng);
            const auto obj = [&] { return weighted_sum(ops::dense(input, weights, bias), up); };
            const ops::DenseGrads g = ops::dense_backward(input, weights, up);
            check_fd(out, input, obj, g.input, "dense/input");
            check_fd(out, weights, obj, g.weights, "dense/weights");
            check_fd(out, bias, obj, g.bias, "dense/bias");
        }
        // activations (clear of the ReLU kink)
        {
            Tensor input = random_tensor({3, 3, 2}, rng);
            for (double& v : input.data)
                if (std::fabs(v) < 1e-3) v = 0.1;
            const Tensor up = random_tensor({3, 3, 2}, rng);
            const auto robj = [&] { return weighted_sum(ops::relu(input), up); };
            check_fd(out, input, robj, ops::relu_backward(input, up), "relu");
            const auto sobj = [&] { return weighted_sum(ops::sigmoid(input), up); };
            check_fd(out, input, sobj, ops::sigmoid_backward(ops::sigmoid(input), up),
                     "sigmoid");
        }
        // losses: squared-error and absolute reconstruction terms and the
        // segmentation cross-entropy, each against its closed-form gradient
        {
            const int n = 4;
            const Tensor x = random_tensor({n, n, 1}, rng, 0.0, 1.0);
            Tensor r = random_tensor({n, n, 1}, rng, 0.05, 0.95);
            const double inv = 1.0 / (n * n);
            Tensor g_l2({n, n, 1}), g_l1({n, n, 1});
            for (int i = 0; i < n * n; ++i) {
                g_l2.data[i] = 2.0 * (r.data[i] - x.data[i]) * inv;
                g_l1.data[i] = (r.data[i] > x.data[i] ? 1.0 : -1.0) * inv;
            }
            check_fd(out, r, [&] { return recon_loss(x, r, ReconLossKind::L2); }, g_l2,
                     "loss/l2");
            check_fd(out, r, [&] { return recon_loss(x, r, ReconLossKind::L1); }, g_l1,
                     "loss/l1");

            Tensor seg_t({n, n, 1});
            for (double& v : seg_t.data) v = rng.uniform(0.0, 1.0) < 0.5 ? 0.0 : 1.0;
            Tensor seg_p = random_tensor({n, n, 1}, rng, 0.05, 0.95);
            Tensor adv = random_tensor({n, n, 1}, rng, 0.0, 1.0);
            Tensor g_bce({n, n, 1}), g_adv({n, n, 1});
            for (int i = 0; i < n * n; ++i) {
                g_bce.data[i] =
                    (-seg_t.data[i] / seg_p.data[i] +
                     (1.0 - seg_t.data[i]) / (1.0 - seg_p.data[i])) * inv;
                g_adv.data[i] = 2.0 * (adv.data[i] - x.data[i]) * inv;
            }
            const auto app_rec = [&] {
                return loss_appearance(x, r, seg_t, seg_p, adv).rec;
            };
            check_fd(out, seg_p, app_rec, g_bce, "loss/segmentation-bce");
            const auto app_adv = [&] {
                return loss_appearance(x, r, seg_t, seg_p, adv).adv;
            };
            check_fd(out, adv, app_adv, g_adv, "loss/adversarial");
            const auto mot = [&] { return loss_motion(x, r, adv).rec; };
            check_fd(out, r, mot, g_l2, "loss/motion");
        }
    }
}

// ---------------------------------------------------------------------------
// Criterion 2: one train step matches the straight-line tape reference to
// 1e-10 per parameter (lambda = 0.2).
// ---------------------------------------------------------------------------
void criterion_step_reference(Outcome& out) {
    for (const StreamKind kind : {StreamKind::Appearance, StreamKind::MotionForward}) {
        CaeParams p = stepref::micro_cae(kind, 99);
        const auto normal = stepref::micro_normal_batch(kind, 2, 17);
        const auto pseudo = stepref::micro_pseudo_batch(stream_channels(kind), 2, 23);
        TrainHyper hyper;
        hyper.learning_rate = 1e-3;
        hyper.lambda = 0.2;

        const stepref::RefStep ref = stepref::reference_step(p, normal, pseudo, hyper);
        const CaeStepReport report = cae_train_step(p, normal, pseudo, hyper);

        out.require(std::fabs(report.rec_loss - ref.rec_loss) <=
                        1e-12 * std::max(1.0, std::fabs(ref.rec_loss)),
                    "reconstruction loss disagrees with the reference");
        out.require(std::fabs(report.adv_loss - ref.adv_loss) <=
                        1e-12 * std::max(1.0, std::fabs(ref.adv_loss)),
                    "adversarial loss disagrees with the reference");

        const std::vector<double*> after = stepref::flatten_mut(p);
        out.require(after.size() == ref.updated.size(), "parameter count mismatch");
        double max_diff = 0.0;
        for (std::size_t i = 0; i < after.size(); ++i)
            max_diff = std::max(max_diff, std::fabs(*after[i] - ref.updated[i]));
        out.require(max_diff < 1e-10, "parameter update deviates by " +
                                          std::to_string(max_diff));
        if (out.pass)
            out.detail = "max parameter deviation " + std::to_string(max_diff);
    }
}

// ---------------------------------------------------------------------------
// Criterion 3: after default adversarial training on >= 2,000 normal and
// 2,000 pseudo-abnormal samples, held-out pseudo-abnormal reconstruction
// error is at least twice the held-out normal error.
// ---------------------------------------------------------------------------
void criterion_separation(Outcome& out) {
    scene::SceneConfig sc = scene::default_scene_config();
    std::vector<CaeBatchItem> normal;
    std::vector<Tensor> held_normal;
    for (int e = 0; e < 8; ++e) {
        sc.rng_seed = pipeline::derive_seed(1, 0x1000 + static_cast<std::uint64_t>(e));
        const scene::Episode ep = scene::generate_episode(sc, false);
        for (const scene::ObjectSample& s : scene::extract_samples(ep)) {
            if (e < 7)
                normal.push_back(CaeBatchItem{s.appearance, s.mask});
            else
                held_normal.push_back(s.appearance);
        }
    }
    scene::PseudoAbnormalConfig pc;
    const std::vector<Tensor> pseudo = scene::make_pseudo_abnormal_appearance(pc, 2000, 42);
    pc.pool_size = 200;
    const std::vector<Tensor> held_pseudo =
        scene::make_pseudo_abnormal_appearance(pc, 200, 43);
    out.require(normal.size() >= 2000, "fewer than 2000 normal training samples");

    CaeParams cae = make_cae(StreamKind::Appearance, 7);
    const TrainHyper hyper;  // default recipe: lr 1e-4, lambda 0.2, 20 epochs
    Rng shuffle(99);
    std::size_t pseudo_cursor = 0;
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        std::vector<std::size_t> order(normal.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1],
                      order[static_cast<std::size_t>(shuffle.uniform(0.0, 1.0) *
                                                     static_cast<double>(i))]);
        for (std::size_t b = 0; b < order.size();
             b += static_cast<std::size_t>(hyper.batch_size)) {
            std::vector<CaeBatchItem> batch_n;
            std::vector<Tensor> batch_p;
            const std::size_t hi =
                std::min(order.size(), b + static_cast<std::size_t>(hyper.batch_size));
            for (std::size_t i = b; i < hi; ++i) batch_n.push_back(normal[order[i]]);
            for (std::size_t i = b; i < hi; ++i) {
                batch_p.push_back(pseudo[pseudo_cursor]);
                pseudo_cursor = (pseudo_cursor + 1) % pseudo.size();
            }
            cae_train_step(cae, batch_n, batch_p, hyper);
        }
    }

    const FrozenCae frozen = strip_for_inference(cae);
    const double err_normal = mean_recon_error(frozen, held_normal);
    const double err_pseudo = mean_recon_error(frozen, held_pseudo);
    const double ratio = err_pseudo / err_normal;
    std::ostringstream os;
    os << "held-out error ratio " << ratio << " (pseudo " << err_pseudo << " / normal "
       << err_normal << ")";
    out.detail = os.str();
    out.require(ratio >= 2.0, os.str());
}

// ---------------------------------------------------------------------------
// Shared scaled pipeline runs for the ablation, end-to-end and determinism
// criteria. Targets confirmed by pilot runs and frozen.
// ---------------------------------------------------------------------------
RunConfig scaled_config(double lambda) {
    RunConfig cfg;
    cfg.seed = 1;
    cfg.train_episodes = 2;
    cfg.test_episodes = 10;
    cfg.pseudo.pool_size = 500;
    cfg.cae.epochs = 5;
    cfg.cae.lambda = lambda;
    cfg.clf.epochs = 10;
    return cfg;
}

struct PipelineRun {
    pipeline::EvalResults results;
    double seconds = 0.0;
    fs::path dir;
};

PipelineRun run_pipeline(const RunConfig& cfg, const fs::path& dir) {
    PipelineRun run;
    run.dir = dir;
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto t0 = Clock::now();
    pipeline::cmd_gen_data(cfg, dir / "data");
    pipeline::cmd_train(cfg, dir / "data", dir / "models");
    pipeline::cmd_infer(cfg, dir / "models", dir / "data", dir / "preds");
    run.results = pipeline::cmd_eval(cfg, dir / "data", dir / "preds",
                                     dir / "results.json");
    run.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return run;
}

std::vector<char> read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::vector<char>((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
}

// ---------------------------------------------------------------------------
// Criterion 6: frame AUC equals the pairwise Mann-Whitney statistic exactly;
// RBDC/TBDC equal brute-force threshold enumeration exactly, including the
// IoU-equals-beta and fraction-equals-alpha boundaries.
// ---------------------------------------------------------------------------
void criterion_metric_oracles(Outcome& out) {
    for (std::uint64_t seed = 0; seed < 500 && out.pass; ++seed) {
        Rng rng(seed + 1);
        const int n = rng.uniform_int(2, 200);
        metrics::VideoScores v;
        v.name = "r";
        bool has_pos = false, has_neg = false;
        for (int i = 0; i < n; ++i) {
            v.scores.push_back(rng.uniform_int(0, 9) / 10.0);  // ties occur
            const int label = rng.uniform_int(0, 1);
            v.labels.push_back(label);
            (label ? has_pos : has_neg) = true;
        }
        if (!has_pos) v.labels[0] = 1;
        if (!has_neg) v.labels[1] = 0;
        out.require(metrics::frame_auc({v}, metrics::AucMode::Micro) ==
                        oracle::mann_whitney(v.scores, v.labels),
                    "frame_auc differs from the Mann-Whitney statistic");
    }

    for (std::uint64_t seed = 0; seed < 200 && out.pass; ++seed) {
        Rng rng(seed + 31);
        const oracle::Scenario s = oracle::random_scenario(rng);
        out.require(metrics::rbdc(s.truth, s.preds, 0.1, s.num_frames) ==
                        oracle::oracle_rbdc(s.truth, s.preds, 0.1, s.num_frames),
                    "rbdc differs from brute force");
        out.require(metrics::tbdc(s.truth, s.preds, 0.1, 0.1, s.num_frames) ==
                        oracle::oracle_tbdc(s.truth, s.preds, 0.1, 0.1, s.num_frames),
                    "tbdc differs from brute force");
    }

    // overlap exactly at the matching threshold counts as a match
    metrics::TrackAnnotation truth;
    truth.rows.push_back(metrics::TrackRow{0, 0, metrics::Box{0, 0, 1, 10}});
    metrics::RegionPrediction preds;
    preds.rows.push_back(metrics::PredictionRow{0, metrics::Box{0, 0, 1, 1}, 0.8});
    out.require(metrics::rbdc(truth, preds, 0.1, 4) == 1.0,
                "IoU == beta must count as a match");
    out.require(metrics::rbdc(truth, preds, 0.1 + 1e-9, 4) == 0.0,
                "IoU below beta must not match");

    // detected fraction exactly at the threshold counts as detected
    metrics::TrackAnnotation track10;
    for (int f = 0; f < 10; ++f)
        track10.rows.push_back(metrics::TrackRow{f, 0, metrics::Box{0, 0, 10, 10}});
    metrics::RegionPrediction one;
    one.rows.push_back(metrics::PredictionRow{0, metrics::Box{0, 0, 10, 10}, 0.9});
    out.require(metrics::tbdc(track10, one, 0.1, 0.1, 10) == 1.0,
                "fraction == alpha must count as detected");
    out.require(metrics::tbdc(track10, one, 0.1 + 1e-9, 0.1, 10) == 0.0,
                "fraction below alpha must not count");
}

// ---------------------------------------------------------------------------
// Criterion 7: object scoring and map/filter arithmetic on forced examples,
// plus the micro == macro single-video identity.
// ---------------------------------------------------------------------------
void criterion_scoring_arithmetic(Outcome& out) {
    // object score = 1 - mean of the three normality scores
    out.require(std::fabs(scoring::score_object(0.2, 0.4, 0.6) - 0.6) < 1e-15,
                "score_object(0.2, 0.4, 0.6) must be 0.6");
    out.require(scoring::score_object(1.0, 1.0, 1.0) == 0.0,
                "perfectly normal object must score 0");

    // overlap keeps the maximum score; uncovered pixels stay zero
    std::vector<scoring::Detection> dets;
    dets.push_back({scene::PixelBox{0, 0, 3, 3}, 0.4});
    dets.push_back({scene::PixelBox{2, 2, 5, 5}, 0.9});
    const Tensor map = scoring::assemble_map(8, 8, dets);
    out.require(map.at(0, 0) == 0.4, "assemble_map low box");
    out.require(map.at(3, 3) == 0.9, "assemble_map overlap keeps max");
    out.require(map.at(7, 7) == 0.0, "assemble_map uncovered pixel");

    // 3D mean filter: constant input invariant; impulse spreads to 1/27
    std::vector<Tensor> maps(5, Tensor({5, 5}, 0.25));
    const std::vector<Tensor> flat = scoring::mean_filter_3d(maps, 3, 3, 3);
    out.require(std::fabs(flat[2].at(2, 2) - 0.25) < 1e-12,
                "mean filter must keep a constant volume");
    for (Tensor& m : maps) m = Tensor({5, 5});
    maps[2].at(2, 2) = 1.0;
    const std::vector<Tensor> impulse = scoring::mean_filter_3d(maps, 3, 3, 3);
    out.require(std::fabs(impulse[2].at(2, 2) - 1.0 / 27.0) < 1e-12,
                "interior impulse response must be 1/27");

    // frame scores are per-map maxima; smoothing keeps a constant series
    const std::vector<double> frames = scoring::frame_level_scores(impulse);
    out.require(frames[2] == impulse[2].at(2, 2), "frame score must be the map max");
    const std::vector<double> smooth =
        scoring::gaussian_smooth(std::vector<double>(20, 0.7), 2.0, 5);
    for (double v : smooth)
        out.require(std::fabs(v - 0.7) < 1e-12, "smoothing must keep a constant series");

    // one video: micro and macro frame AUC coincide exactly
    Rng rng(99);
    metrics::VideoScores v;
    v.name = "solo";
    for (int i = 0; i < 50; ++i) {
        v.scores.push_back(rng.next_double());
        v.labels.push_back(rng.uniform_int(0, 1));
    }
    v.labels[0] = 1;
    v.labels[1] = 0;
    out.require(metrics::frame_auc({v}, metrics::AucMode::Micro) ==
                    metrics::frame_auc({v}, metrics::AucMode::Macro),
                "micro and macro AUC must coincide on a single video");
}

}  // namespace

int main() {
    const fs::path work = fs::temp_directory_path() / "aed_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);

    run_criterion("gradient-finite-differences", 120.0, criterion_gradients);
    run_criterion("train-step-reference-match", 60.0, criterion_step_reference);
    run_criterion("metric-oracles", 120.0, criterion_metric_oracles);
    run_criterion("scoring-arithmetic", 60.0, criterion_scoring_arithmetic);
    run_criterion("adversarial-separation", 900.0, criterion_separation);

    // Shared scaled runs: A (lambda 0.2), B (lambda 0), C (repeat of A).
    PipelineRun run_a, run_b, run_c;
    run_criterion("end-to-end-detection", 1200.0, [&](Outcome& out) {
        run_a = run_pipeline(scaled_config(0.2), work / "run_a");
        std::ostringstream os;
        os << "micro AUC " << run_a.results.micro_auc << ", TBDC " << run_a.results.tbdc;
        out.detail = os.str();
        out.require(run_a.results.micro_auc >= 0.95, os.str());
        out.require(run_a.results.tbdc >= 0.90, os.str());
    });
    run_criterion("lambda-ablation-direction", 1800.0, [&](Outcome& out) {
        run_b = run_pipeline(scaled_config(0.0), work / "run_b");
        std::ostringstream os;
        os << "micro AUC " << run_a.results.micro_auc << " (lambda 0.2) vs "
           << run_b.results.micro_auc << " (lambda 0)";
        out.detail = os.str();
        out.require(run_a.results.micro_auc > run_b.results.micro_auc, os.str());
        // the budget covers both runs; run A was timed by the previous criterion
        out.require(run_a.seconds + run_b.seconds < 1800.0,
                    "combined run budget exceeded");
    });
    run_criterion("run-determinism", 1800.0, [&](Outcome& out) {
        run_c = run_pipeline(scaled_config(0.2), work / "run_c");
        out.require(run_a.seconds + run_c.seconds < 1800.0,
                    "combined run budget exceeded");
        for (const auto& entry : fs::directory_iterator(run_a.dir / "models")) {
            const fs::path other = run_c.dir / "models" / entry.path().filename();
            out.require(fs::exists(other) &&
                            read_bytes(entry.path()) == read_bytes(other),
                        "checkpoint differs: " + entry.path().filename().string());
        }
        out.require(read_bytes(run_a.dir / "results.json") ==
                        read_bytes(run_c.dir / "results.json"),
                    "results JSON differs between identical runs");
        if (out.pass) out.detail = "checkpoints and results byte-identical";
    });

    std::printf("%d of 8 criteria failed\n", g_failures);
    return g_failures;
}
