#include "aed/clf.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aed/errors.hpp"
#include "aed/rng.hpp"

namespace aed {

namespace {

constexpr double kProbClamp = 1e-7;

struct ClfTrace {
    std::array<Tensor, 5> pre;
    std::array<ops::PoolResult, 5> pooled;
    std::array<Tensor, 5> stage_in;  // input of each conv
    Tensor flat;
    Tensor logits;
    Tensor probs;
};

ClfTrace clf_forward_trace(const ClfParams& p, const Tensor& diff, const Tensor& latent) {
    check(diff.rank() == 3 && diff.dim(0) == p.input_size &&
              diff.dim(1) == p.input_size && diff.dim(2) == p.in_channels(),
          "clf_forward: difference tensor must be " + std::to_string(p.input_size) +
              "x" + std::to_string(p.input_size) + "x" +
              std::to_string(p.in_channels()) + ", got " + shape_str(diff));
    const int latent_size = p.input_size / 8;
    check(latent.rank() == 3 && latent.dim(0) == latent_size &&
              latent.dim(1) == latent_size && latent.dim(2) == p.conv_widths[2],
          "clf_forward: latent shape mismatch " + shape_str(latent));

    ClfTrace t;
    Tensor x = diff;
    for (int l = 0; l < 5; ++l) {
        t.stage_in[l] = x;
        t.pre[l] = ops::conv2d(x, p.convs[l].kernels, p.convs[l].bias);
        t.pooled[l] = ops::maxpool2d(ops::relu(t.pre[l]));
        x = t.pooled[l].output;
        if (l == 2) {
            // latent skip from the frozen encoder
            for (std::size_t i = 0; i < x.size(); ++i) x.data[i] += latent.data[i];
        }
    }
    t.flat = x;
    t.flat.shape = {static_cast<int>(x.size())};
    t.logits = ops::dense(t.flat, p.fc_weights, p.fc_bias);
    t.probs = ops::softmax(t.logits);
    return t;
}

}  // namespace

ClfParams make_clf(StreamKind kind, std::uint64_t seed, int input_size,
                   std::array<int, 5> conv_widths, DiffMode diff_mode) {
    check(input_size % 32 == 0, "make_clf: input size must be divisible by 32");
    ClfParams p;
    p.kind = kind;
    p.input_size = input_size;
    p.conv_widths = conv_widths;
    p.diff_mode = diff_mode;
    std::uint64_t s = seed * 0x9e3779b97f4a7c15ULL + 2;
    int c = p.in_channels();
    for (int l = 0; l < 5; ++l) {
        p.convs[l] = make_conv_layer(c, conv_widths[l], s);
        c = conv_widths[l];
    }
    const int flat = (input_size / 32) * (input_size / 32) * conv_widths[4];
    p.fc_weights = Tensor({flat, 2});
    p.fc_bias = Tensor({2});
    const double bound = std::sqrt(6.0 / (flat + 2.0));
    Rng rng(s);
    for (double& v : p.fc_weights.data) v = rng.uniform(-bound, bound);
    p.fc_weights_state = ops::make_adam_state(p.fc_weights.shape);
    p.fc_bias_state = ops::make_adam_state(p.fc_bias.shape);
    return p;
}

ClfProbs clf_forward(const ClfParams& params, const Tensor& diff, const Tensor& latent) {
    ClfTrace t = clf_forward_trace(params, diff, latent);
    return ClfProbs{t.probs.data[0], t.probs.data[1]};
}

double clf_loss(int y, double y_hat) {
    check(y == 0 || y == 1, "clf_loss: label must be 0 or 1");
    const double q = std::clamp(y_hat, kProbClamp, 1.0 - kProbClamp);
    return -(y * std::log(q) + (1 - y) * std::log(1.0 - q));
}

double clf_train_step(ClfParams& params, const std::vector<ClfSample>& batch,
                      const ClfHyper& hyper) {
    check(!batch.empty(), "clf_train_step: empty batch");

    std::array<ConvLayerGrad, 5> conv_g;
    for (int l = 0; l < 5; ++l)
        conv_g[l] = ConvLayerGrad{Tensor(params.convs[l].kernels.shape),
                                  Tensor(params.convs[l].bias.shape)};
    Tensor fcw_g(params.fc_weights.shape);
    Tensor fcb_g(params.fc_bias.shape);

    const double inv_n = 1.0 / static_cast<double>(batch.size());
    double mean_loss = 0.0;

    for (const ClfSample& sample : batch) {
        ClfTrace t = clf_forward_trace(params, sample.diff, sample.latent);
        const double loss = clf_loss(sample.label, t.probs.data[1]);
        if (!std::isfinite(loss))
            throw NumericError("clf_train_step: non-finite loss");
        mean_loss += loss * inv_n;

        // BCE on the softmax pair reduces to cross-entropy with a one-hot
        // target, so the logit gradient is probs - onehot(label).
        Tensor d_logits({2});
        d_logits.data[0] = t.probs.data[0] - (sample.label == 0 ? 1.0 : 0.0);
        d_logits.data[1] = t.probs.data[1] - (sample.label == 1 ? 1.0 : 0.0);

        auto dg = ops::dense_backward(t.flat, params.fc_weights, d_logits);
        for (std::size_t i = 0; i < fcw_g.size(); ++i)
            fcw_g.data[i] += dg.weights.data[i] * inv_n;
        for (std::size_t i = 0; i < fcb_g.size(); ++i)
            fcb_g.data[i] += dg.bias.data[i] * inv_n;

        Tensor g = dg.input;
        g.shape = t.pooled[4].output.shape;
        for (int l = 4; l >= 0; --l) {
            // the latent skip after stage 3 is additive; gradient passes through
            Tensor relu_out = ops::relu(t.pre[l]);
            Tensor gact = ops::maxpool2d_backward(t.pooled[l], g, relu_out.shape);
            Tensor gpre = ops::relu_backward(t.pre[l], gact);
            auto cg = ops::conv2d_backward(t.stage_in[l], params.convs[l].kernels,
                                           gpre, /*need_input=*/l > 0);
            for (std::size_t i = 0; i < conv_g[l].kernels.size(); ++i)
                conv_g[l].kernels.data[i] += cg.kernels.data[i] * inv_n;
            for (std::size_t i = 0; i < conv_g[l].bias.size(); ++i)
                conv_g[l].bias.data[i] += cg.bias.data[i] * inv_n;
            g = cg.input;
        }
    }

    for (int l = 0; l < 5; ++l) {
        ops::adam_step(params.convs[l].kernels, conv_g[l].kernels,
                       params.convs[l].kernels_state, hyper.learning_rate);
        ops::adam_step(params.convs[l].bias, conv_g[l].bias,
                       params.convs[l].bias_state, hyper.learning_rate);
    }
    ops::adam_step(params.fc_weights, fcw_g, params.fc_weights_state,
                   hyper.learning_rate);
    ops::adam_step(params.fc_bias, fcb_g, params.fc_bias_state, hyper.learning_rate);
    return mean_loss;
}

Tensor make_diff(const Tensor& input, const Tensor& recon, DiffMode mode) {
    check(input.same_shape(recon), "make_diff: shape mismatch");
    Tensor d(input.shape);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double v = input.data[i] - recon.data[i];
        d.data[i] = mode == DiffMode::Absolute ? std::abs(v) : v;
    }
    return d;
}

}  // namespace aed
