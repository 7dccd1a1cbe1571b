#include <doctest.h>

#include <cmath>
#include <vector>

#include "aed/clf.hpp"
#include "aed/errors.hpp"
#include "aed/rng.hpp"

using namespace aed;

namespace {

// Smallest legal configuration: 32x32 input, latent skip at 4x4x3.
ClfParams micro_clf(std::uint64_t seed, DiffMode mode = DiffMode::Absolute) {
    return make_clf(StreamKind::Appearance, seed, 32, {2, 2, 3, 2, 2}, mode);
}

ClfSample random_sample(Rng& rng, int label) {
    ClfSample s;
    s.diff = Tensor({32, 32, 1});
    s.latent = Tensor({4, 4, 3});
    for (double& v : s.diff.data) v = rng.uniform(-0.5, 0.5);
    for (double& v : s.latent.data) v = rng.uniform(0.0, 1.0);
    s.label = label;
    return s;
}

std::vector<double*> flatten(ClfParams& p) {
    std::vector<double*> out;
    for (ConvLayer& l : p.convs) {
        for (double& v : l.kernels.data) out.push_back(&v);
        for (double& v : l.bias.data) out.push_back(&v);
    }
    for (double& v : p.fc_weights.data) out.push_back(&v);
    for (double& v : p.fc_bias.data) out.push_back(&v);
    return out;
}

double mean_batch_loss(const ClfParams& p, const std::vector<ClfSample>& batch) {
    double sum = 0.0;
    for (const ClfSample& s : batch)
        sum += clf_loss(s.label, clf_forward(p, s.diff, s.latent).normal);
    return sum / static_cast<double>(batch.size());
}

}  // namespace

TEST_CASE("classifier outputs are a probability pair") {
    const ClfParams p = micro_clf(11);
    Rng rng(1);
    for (int i = 0; i < 20; ++i) {
        const ClfSample s = random_sample(rng, i % 2);
        const ClfProbs probs = clf_forward(p, s.diff, s.latent);
        CHECK(probs.normal > 0.0);
        CHECK(probs.pseudo_abnormal > 0.0);
        CHECK(probs.normal + probs.pseudo_abnormal == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("binary cross-entropy values and clamping") {
    CHECK(clf_loss(1, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(clf_loss(0, 0.5) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(clf_loss(1, 1.0) == doctest::Approx(-std::log(1.0 - 1e-7)).epsilon(1e-9));
    CHECK(clf_loss(1, 0.0) == doctest::Approx(-std::log(1e-7)).epsilon(1e-12));
    CHECK(std::isfinite(clf_loss(0, 1.0)));
    CHECK(clf_loss(1, 0.25) == doctest::Approx(-std::log(0.25)).epsilon(1e-15));
    CHECK_THROWS_AS(clf_loss(2, 0.5), std::invalid_argument);
}

TEST_CASE("classifier gradients pass finite-difference checks") {
    ClfParams p = micro_clf(7);
    Rng rng(8);
    std::vector<ClfSample> batch;
    for (int i = 0; i < 4; ++i) batch.push_back(random_sample(rng, i % 2));

    std::vector<double*> params = flatten(p);
    const std::vector<double> before = [&] {
        std::vector<double> b;
        for (double* q : params) b.push_back(*q);
        return b;
    }();
    const double loss_before = mean_batch_loss(p, batch);

    ClfHyper hyper;
    const double reported = clf_train_step(p, batch, hyper);
    CHECK(reported == doctest::Approx(loss_before).epsilon(1e-12));

    // Recover the effective gradient from the first Adam update
    // (delta = -lr * g / (|g| + eps) with fresh moments) and compare to
    // central finite differences of the mean batch loss.
    constexpr double kEps = 1e-8;
    const double lr = hyper.learning_rate;
    std::vector<double> after;
    for (double* q : params) after.push_back(*q);

    ClfParams probe = micro_clf(7);  // same seed -> same `before` values
    std::vector<double*> probe_params = flatten(probe);
    Rng pick(99);
    const double step = 1e-6;
    int checked = 0;
    for (int k = 0; k < 60; ++k) {
        const std::size_t i = static_cast<std::size_t>(
            pick.uniform(0.0, 1.0) * static_cast<double>(params.size()));
        double& v = *probe_params[i];
        const double saved = v;
        v = saved + step;
        const double up = mean_batch_loss(probe, batch);
        v = saved - step;
        const double down = mean_batch_loss(probe, batch);
        v = saved;
        const double fd = (up - down) / (2.0 * step);
        if (std::fabs(fd) < 1e-6) continue;  // recovery ill-conditioned near zero
        const double delta = after[i] - before[i];
        const double mag = kEps * std::fabs(delta) / (lr - std::fabs(delta));
        const double recovered = delta < 0.0 ? mag : -mag;
        CHECK(std::fabs(recovered - fd) <= 1e-4 * std::max(1.0, std::fabs(fd)));
        ++checked;
    }
    CHECK(checked >= 30);
}

TEST_CASE("classifier separates an easy two-class problem completely") {
    ClfParams p = micro_clf(3);
    Rng rng(4);
    std::vector<ClfSample> train;
    for (int i = 0; i < 16; ++i) {
        ClfSample s;
        s.diff = Tensor({32, 32, 1});
        s.latent = Tensor({4, 4, 3});
        s.label = i % 2;
        const double base = s.label == 1 ? 0.05 : 0.85;  // normals reconstruct well
        for (double& v : s.diff.data) v = base + rng.uniform(-0.03, 0.03);
        for (double& v : s.latent.data) v = rng.uniform(0.0, 0.2);
        train.push_back(std::move(s));
    }
    ClfHyper hyper;
    hyper.learning_rate = 1e-2;
    double loss = 0.0;
    for (int e = 0; e < 150; ++e) loss = clf_train_step(p, train, hyper);
    CHECK(loss < 0.05);
    for (const ClfSample& s : train) {
        const double pn = clf_forward(p, s.diff, s.latent).normal;
        if (s.label == 1)
            CHECK(pn > 0.5);
        else
            CHECK(pn < 0.5);
    }
}

TEST_CASE("the frozen-encoder latent skip influences the prediction") {
    const ClfParams p = micro_clf(21);
    Rng rng(22);
    const ClfSample s = random_sample(rng, 1);
    Tensor other = s.latent;
    for (double& v : other.data) v += 0.7;
    CHECK(clf_forward(p, s.diff, s.latent).normal !=
          clf_forward(p, s.diff, other).normal);
}

TEST_CASE("make_diff applies the configured difference mode") {
    Tensor input({2, 2, 1});
    Tensor recon({2, 2, 1});
    input.data = {0.9, 0.1, 0.5, 0.0};
    recon.data = {0.4, 0.6, 0.5, 1.0};
    const Tensor abs_d = make_diff(input, recon, DiffMode::Absolute);
    CHECK(abs_d.data == std::vector<double>{0.5, 0.5, 0.0, 1.0});
    const Tensor sgn_d = make_diff(input, recon, DiffMode::Signed);
    CHECK(sgn_d.data == std::vector<double>{0.5, -0.5, 0.0, -1.0});
    CHECK_THROWS_AS(make_diff(input, Tensor({3, 3, 1}), DiffMode::Absolute),
                    std::invalid_argument);
}

TEST_CASE("classifier construction and training are deterministic") {
    ClfParams a = micro_clf(5);
    ClfParams b = micro_clf(5);
    CHECK(a.convs[0].kernels.data == b.convs[0].kernels.data);
    CHECK(a.fc_weights.data == b.fc_weights.data);
    CHECK(micro_clf(6).fc_weights.data != a.fc_weights.data);

    Rng rng(9);
    std::vector<ClfSample> batch;
    for (int i = 0; i < 4; ++i) batch.push_back(random_sample(rng, i % 2));
    ClfHyper hyper;
    for (int i = 0; i < 2; ++i)
        CHECK(clf_train_step(a, batch, hyper) == clf_train_step(b, batch, hyper));
    CHECK(a.convs[4].kernels.data == b.convs[4].kernels.data);
    CHECK(a.fc_bias.data == b.fc_bias.data);
}

TEST_CASE("classifier input validation") {
    ClfParams p = micro_clf(1);
    Rng rng(2);
    const ClfSample s = random_sample(rng, 1);
    CHECK_THROWS_AS(clf_forward(p, Tensor({16, 16, 1}), s.latent), std::invalid_argument);
    CHECK_THROWS_AS(clf_forward(p, s.diff, Tensor({8, 8, 3})), std::invalid_argument);
    CHECK_THROWS_AS(clf_train_step(p, {}, ClfHyper{}), std::invalid_argument);
    CHECK_THROWS_AS(make_clf(StreamKind::Appearance, 1, 16), std::invalid_argument);
}
