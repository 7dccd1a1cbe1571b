#include "aed/cae.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aed/errors.hpp"
#include "aed/rng.hpp"

namespace aed {

namespace {

constexpr double kSegClamp = 1e-7;

void axpy(Tensor& acc, const Tensor& x, double a) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc.data[i] += a * x.data[i];
}

void add_inplace(Tensor& acc, const Tensor& x) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc.data[i] += x.data[i];
}

ConvLayerGrad make_grad_like(const ConvLayer& layer) {
    return ConvLayerGrad{Tensor(layer.kernels.shape), Tensor(layer.bias.shape)};
}

}  // namespace

ConvLayer make_conv_layer(int c_in, int c_out, std::uint64_t& seed_state) {
    ConvLayer layer;
    layer.kernels = Tensor({3, 3, c_in, c_out});
    layer.bias = Tensor({c_out});
    // Glorot-style uniform range from the 3x3 receptive field fan counts.
    const double fan_in = 9.0 * c_in, fan_out = 9.0 * c_out;
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Rng rng(seed_state);
    for (double& v : layer.kernels.data) v = rng.uniform(-bound, bound);
    seed_state = rng.next_u64();
    layer.kernels_state = ops::make_adam_state(layer.kernels.shape);
    layer.bias_state = ops::make_adam_state(layer.bias.shape);
    return layer;
}

CaeParams make_cae(StreamKind kind, std::uint64_t seed, int input_size,
                   std::array<int, 3> encoder_widths) {
    check(input_size % 8 == 0, "make_cae: input size must be divisible by 8");
    check(encoder_widths[0] == encoder_widths[1],
          "make_cae: first two encoder widths must match (skip-sum shapes)");
    CaeParams p;
    p.kind = kind;
    p.input_size = input_size;
    p.encoder_widths = encoder_widths;
    const int c = p.in_channels();
    std::uint64_t s = seed * 0x9e3779b97f4a7c15ULL + 1;

    p.encoder[0] = make_conv_layer(c, encoder_widths[0], s);
    p.encoder[1] = make_conv_layer(encoder_widths[0], encoder_widths[1], s);
    p.encoder[2] = make_conv_layer(encoder_widths[1], encoder_widths[2], s);

    auto make_decoder = [&](int out_channels) {
        std::array<ConvLayer, 3> d;
        d[0] = make_conv_layer(encoder_widths[2], encoder_widths[2], s);
        d[1] = make_conv_layer(encoder_widths[2], encoder_widths[1], s);
        d[2] = make_conv_layer(encoder_widths[0], out_channels, s);
        return d;
    };
    p.main_decoder = make_decoder(c);
    p.adv_decoder = make_decoder(c);
    if (kind == StreamKind::Appearance) p.seg_decoder = make_decoder(1);
    return p;
}

namespace {

EncoderTrace encoder_forward(const CaeParams& p, const Tensor& input) {
    EncoderTrace t;
    t.input = input;
    const Tensor* x = &t.input;
    for (int l = 0; l < 3; ++l) {
        t.pre[l] = ops::conv2d(*x, p.encoder[l].kernels, p.encoder[l].bias);
        t.act[l] = ops::relu(t.pre[l]);
        t.pooled[l] = ops::maxpool2d(t.act[l]);
        x = &t.pooled[l].output;
    }
    return t;
}

DecoderTrace decoder_forward(const std::array<ConvLayer, 3>& d, const Tensor& latent,
                             const EncoderTrace& enc, bool use_skips, bool sigmoid_out) {
    DecoderTrace t;
    t.upsampled[0] = ops::upsample_nearest(latent);
    t.pre[0] = ops::conv2d(t.upsampled[0], d[0].kernels, d[0].bias);
    t.summed[0] = ops::relu(t.pre[0]);
    if (use_skips) add_inplace(t.summed[0], enc.act[2]);

    t.upsampled[1] = ops::upsample_nearest(t.summed[0]);
    t.pre[1] = ops::conv2d(t.upsampled[1], d[1].kernels, d[1].bias);
    t.summed[1] = ops::relu(t.pre[1]);
    if (use_skips) add_inplace(t.summed[1], enc.act[1]);

    t.upsampled[2] = ops::upsample_nearest(t.summed[1]);
    t.final_input = t.upsampled[2];
    if (use_skips) add_inplace(t.final_input, enc.act[0]);
    t.output = ops::conv2d(t.final_input, d[2].kernels, d[2].bias);
    if (sigmoid_out) t.output = ops::sigmoid(t.output);
    return t;
}

struct SkipGrads {
    std::array<Tensor, 3> act;  // gradients w.r.t. enc.act[l]
    Tensor latent;
    SkipGrads(const EncoderTrace& enc, const Tensor& latent_shape_src) {
        for (int l = 0; l < 3; ++l) act[l] = Tensor(enc.act[l].shape);
        latent = Tensor(latent_shape_src.shape);
    }
};

/// Backprop through one decoder branch; accumulates parameter gradients into
/// `grads` with weight `scale`, and latent/skip gradients (unscaled) into `sg`.
void decoder_backward(const std::array<ConvLayer, 3>& d, const DecoderTrace& t,
                      const Tensor& d_output, bool use_skips, bool sigmoid_out,
                      std::array<ConvLayerGrad, 3>& grads, double scale, SkipGrads& sg) {
    Tensor d_outpre = sigmoid_out ? ops::sigmoid_backward(t.output, d_output) : d_output;

    auto cg = ops::conv2d_backward(t.final_input, d[2].kernels, d_outpre);
    axpy(grads[2].kernels, cg.kernels, scale);
    axpy(grads[2].bias, cg.bias, scale);
    if (use_skips) add_inplace(sg.act[0], cg.input);
    Tensor g = ops::upsample_nearest_backward(cg.input);

    if (use_skips) add_inplace(sg.act[1], g);
    g = ops::relu_backward(t.pre[1], g);
    cg = ops::conv2d_backward(t.upsampled[1], d[1].kernels, g);
    axpy(grads[1].kernels, cg.kernels, scale);
    axpy(grads[1].bias, cg.bias, scale);
    g = ops::upsample_nearest_backward(cg.input);

    if (use_skips) add_inplace(sg.act[2], g);
    g = ops::relu_backward(t.pre[0], g);
    cg = ops::conv2d_backward(t.upsampled[0], d[0].kernels, g);
    axpy(grads[0].kernels, cg.kernels, scale);
    axpy(grads[0].bias, cg.bias, scale);
    add_inplace(sg.latent, ops::upsample_nearest_backward(cg.input));
}

/// Backprop through the encoder with latent and skip gradients from the
/// decoder branches; accumulates parameter gradients with weight `scale`.
void encoder_backward(const CaeParams& p, const EncoderTrace& enc, const SkipGrads& sg,
                      std::array<ConvLayerGrad, 3>& grads, double scale) {
    Tensor g = sg.latent;
    for (int l = 2; l >= 0; --l) {
        Tensor gact = ops::maxpool2d_backward(enc.pooled[l], g, enc.act[l].shape);
        add_inplace(gact, sg.act[l]);
        Tensor gpre = ops::relu_backward(enc.pre[l], gact);
        const Tensor& layer_in = (l == 0) ? enc.input : enc.pooled[l - 1].output;
        auto cg = ops::conv2d_backward(layer_in, p.encoder[l].kernels, gpre,
                                       /*need_input=*/l > 0);
        axpy(grads[l].kernels, cg.kernels, scale);
        axpy(grads[l].bias, cg.bias, scale);
        g = cg.input;
    }
}

Tensor recon_loss_grad(const Tensor& input, const Tensor& recon, ReconLossKind kind) {
    Tensor g(recon.shape);
    const double inv_n = 1.0 / static_cast<double>(recon.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double d = recon.data[i] - input.data[i];
        if (kind == ReconLossKind::L2)
            g.data[i] = 2.0 * d * inv_n;
        else
            g.data[i] = (d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0)) * inv_n;
    }
    return g;
}

double seg_bce(const Tensor& truth, const Tensor& pred) {
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double s = truth.data[i];
        const double q = std::clamp(pred.data[i], kSegClamp, 1.0 - kSegClamp);
        sum += -s * std::log(q) - (1.0 - s) * std::log(1.0 - q);
    }
    return sum / static_cast<double>(pred.size());
}

Tensor seg_bce_grad(const Tensor& truth, const Tensor& pred) {
    Tensor g(pred.shape);
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double q = pred.data[i];
        if (q <= kSegClamp || q >= 1.0 - kSegClamp) {
            g.data[i] = 0.0;  // clamp region is flat
            continue;
        }
        const double s = truth.data[i];
        g.data[i] = (-s / q + (1.0 - s) / (1.0 - q)) * inv_n;
    }
    return g;
}

void check_input_shape(const CaeParams& p, const Tensor& input, const char* who) {
    check(input.rank() == 3 && input.dim(0) == p.input_size &&
              input.dim(1) == p.input_size && input.dim(2) == p.in_channels(),
          std::string(who) + ": expected " + std::to_string(p.input_size) + "x" +
              std::to_string(p.input_size) + "x" + std::to_string(p.in_channels()) +
              " input, got " + shape_str(input));
}

}  // namespace

CaeForward cae_forward(const CaeParams& params, const Tensor& input) {
    check_input_shape(params, input, "cae_forward");
    CaeForward f;
    f.enc = encoder_forward(params, input);
    f.latent = f.enc.pooled[2].output;
    f.main_trace = decoder_forward(params.main_decoder, f.latent, f.enc, true, false);
    f.main_recon = f.main_trace.output;
    f.adv_trace = decoder_forward(params.adv_decoder, f.latent, f.enc, true, false);
    f.adv_recon = f.adv_trace.output;
    if (params.seg_decoder) {
        f.seg_trace = decoder_forward(*params.seg_decoder, f.latent, f.enc, false, true);
        f.seg_map = f.seg_trace->output;
    }
    return f;
}

double recon_loss(const Tensor& input, const Tensor& recon, ReconLossKind kind) {
    check(input.same_shape(recon), "recon_loss: shape mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double d = input.data[i] - recon.data[i];
        sum += kind == ReconLossKind::L2 ? d * d : std::abs(d);
    }
    return sum / static_cast<double>(input.size());
}

MotionLoss loss_motion(const Tensor& input, const Tensor& main_recon,
                       const Tensor& adv_recon, ReconLossKind kind) {
    return MotionLoss{recon_loss(input, main_recon, kind),
                      recon_loss(input, adv_recon, kind)};
}

AppearanceLoss loss_appearance(const Tensor& input, const Tensor& main_recon,
                               const Tensor& seg_truth, const Tensor& seg_pred,
                               const Tensor& adv_recon, ReconLossKind kind) {
    check(seg_truth.same_shape(seg_pred), "loss_appearance: segmentation shape mismatch");
    return AppearanceLoss{recon_loss(input, main_recon, kind) + seg_bce(seg_truth, seg_pred),
                          recon_loss(input, adv_recon, kind)};
}

CaeStepReport cae_train_step(CaeParams& params,
                             const std::vector<CaeBatchItem>& batch_normal,
                             const std::vector<Tensor>& batch_pseudo_abnormal,
                             const TrainHyper& hyper) {
    check(!batch_normal.empty() && !batch_pseudo_abnormal.empty(),
          "cae_train_step: batches must be non-empty");

    std::array<ConvLayerGrad, 3> enc_g, main_g, adv_g, seg_g;
    for (int l = 0; l < 3; ++l) {
        enc_g[l] = make_grad_like(params.encoder[l]);
        main_g[l] = make_grad_like(params.main_decoder[l]);
        adv_g[l] = make_grad_like(params.adv_decoder[l]);
        if (params.seg_decoder) seg_g[l] = make_grad_like((*params.seg_decoder)[l]);
    }

    const double inv_n = 1.0 / static_cast<double>(batch_normal.size());
    const double inv_p = 1.0 / static_cast<double>(batch_pseudo_abnormal.size());

    CaeStepReport report;

    for (const CaeBatchItem& item : batch_normal) {
        check_input_shape(params, item.input, "cae_train_step");
        EncoderTrace enc = encoder_forward(params, item.input);
        const Tensor& latent = enc.pooled[2].output;
        SkipGrads sg(enc, latent);

        DecoderTrace main_t =
            decoder_forward(params.main_decoder, latent, enc, true, false);
        double loss = recon_loss(item.input, main_t.output, hyper.loss_kind);
        Tensor d_main = recon_loss_grad(item.input, main_t.output, hyper.loss_kind);
        decoder_backward(params.main_decoder, main_t, d_main, true, false, main_g,
                         inv_n, sg);

        if (params.seg_decoder) {
            check(item.seg_truth.has_value(),
                  "cae_train_step: appearance batch items need segmentation truth");
            DecoderTrace seg_t =
                decoder_forward(*params.seg_decoder, latent, enc, false, true);
            loss += seg_bce(*item.seg_truth, seg_t.output);
            Tensor d_seg = seg_bce_grad(*item.seg_truth, seg_t.output);
            decoder_backward(*params.seg_decoder, seg_t, d_seg, false, true, seg_g,
                             inv_n, sg);
        }
        if (!std::isfinite(loss))
            throw NumericError("cae_train_step: non-finite reconstruction loss");
        report.rec_loss += loss * inv_n;

        encoder_backward(params, enc, sg, enc_g, inv_n);
    }

    for (const Tensor& input : batch_pseudo_abnormal) {
        check_input_shape(params, input, "cae_train_step");
        EncoderTrace enc = encoder_forward(params, input);
        const Tensor& latent = enc.pooled[2].output;
        SkipGrads sg(enc, latent);

        DecoderTrace adv_t = decoder_forward(params.adv_decoder, latent, enc, true, false);
        const double loss = recon_loss(input, adv_t.output, hyper.loss_kind);
        if (!std::isfinite(loss))
            throw NumericError("cae_train_step: non-finite adversarial loss");
        report.adv_loss += loss * inv_p;

        Tensor d_adv = recon_loss_grad(input, adv_t.output, hyper.loss_kind);
        decoder_backward(params.adv_decoder, adv_t, d_adv, true, false, adv_g, inv_p, sg);
        // reversed gradient into the shared encoder
        encoder_backward(params, enc, sg, enc_g, -hyper.lambda * inv_p);
    }

    const double lr = hyper.learning_rate;
    for (int l = 0; l < 3; ++l) {
        ops::adam_step(params.encoder[l].kernels, enc_g[l].kernels,
                       params.encoder[l].kernels_state, lr);
        ops::adam_step(params.encoder[l].bias, enc_g[l].bias,
                       params.encoder[l].bias_state, lr);
        ops::adam_step(params.main_decoder[l].kernels, main_g[l].kernels,
                       params.main_decoder[l].kernels_state, lr);
        ops::adam_step(params.main_decoder[l].bias, main_g[l].bias,
                       params.main_decoder[l].bias_state, lr);
        ops::adam_step(params.adv_decoder[l].kernels, adv_g[l].kernels,
                       params.adv_decoder[l].kernels_state, lr);
        ops::adam_step(params.adv_decoder[l].bias, adv_g[l].bias,
                       params.adv_decoder[l].bias_state, lr);
        if (params.seg_decoder) {
            ops::adam_step((*params.seg_decoder)[l].kernels, seg_g[l].kernels,
                           (*params.seg_decoder)[l].kernels_state, lr);
            ops::adam_step((*params.seg_decoder)[l].bias, seg_g[l].bias,
                           (*params.seg_decoder)[l].bias_state, lr);
        }
    }
    return report;
}

FrozenCae strip_for_inference(const CaeParams& params) {
    FrozenCae f;
    f.kind = params.kind;
    f.input_size = params.input_size;
    f.encoder_widths = params.encoder_widths;
    f.encoder = params.encoder;
    f.main_decoder = params.main_decoder;
    return f;
}

FrozenForward frozen_forward(const FrozenCae& cae, const Tensor& input) {
    check(input.rank() == 3 && input.dim(0) == cae.input_size &&
              input.dim(1) == cae.input_size &&
              input.dim(2) == stream_channels(cae.kind),
          "frozen_forward: input shape mismatch " + shape_str(input));
    // Same forward path as the trainable CAE, main branch only.
    CaeParams view;
    view.kind = cae.kind;
    view.input_size = cae.input_size;
    view.encoder_widths = cae.encoder_widths;
    view.encoder = cae.encoder;
    view.main_decoder = cae.main_decoder;
    EncoderTrace enc = encoder_forward(view, input);
    DecoderTrace t =
        decoder_forward(view.main_decoder, enc.pooled[2].output, enc, true, false);
    return FrozenForward{enc.pooled[2].output, t.output};
}

double mean_recon_error(const FrozenCae& cae, const std::vector<Tensor>& inputs) {
    check(!inputs.empty(), "mean_recon_error: empty sample set");
    double sum = 0.0;
    for (const Tensor& x : inputs)
        sum += recon_loss(x, frozen_forward(cae, x).main_recon, ReconLossKind::L2);
    return sum / static_cast<double>(inputs.size());
}

}  // namespace aed
