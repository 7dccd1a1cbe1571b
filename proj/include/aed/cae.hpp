#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "aed/ops.hpp"
#include "aed/tensor.hpp"

namespace aed {

enum class StreamKind { Appearance, MotionBackward, MotionForward };

inline int stream_channels(StreamKind k) {
    return k == StreamKind::Appearance ? 1 : 2;
}

enum class ReconLossKind { L2, L1 };

struct ConvLayer {
    Tensor kernels;  // 3 x 3 x c_in x c_out
    Tensor bias;     // c_out
    ops::AdamState kernels_state;
    ops::AdamState bias_state;
};

ConvLayer make_conv_layer(int c_in, int c_out, std::uint64_t& seed_state);

/// Gradient accumulator matching one ConvLayer.
struct ConvLayerGrad {
    Tensor kernels;
    Tensor bias;
};

/// Parameters of one convolutional auto-encoder: a three-layer encoder and
/// up to three decoder branches (main, adversarial, segmentation). The
/// segmentation branch exists only on the appearance stream. Sizes are
/// parametric so tiny instances can be gradient-checked; the production
/// configuration is a 64x64 input with encoder widths {32, 32, 16}, which
/// yields an 8x8x16 latent after three pooling stages.
struct CaeParams {
    StreamKind kind = StreamKind::Appearance;
    int input_size = 64;
    std::array<int, 3> encoder_widths{32, 32, 16};
    std::array<ConvLayer, 3> encoder;
    std::array<ConvLayer, 3> main_decoder;
    std::array<ConvLayer, 3> adv_decoder;
    std::optional<std::array<ConvLayer, 3>> seg_decoder;

    int in_channels() const { return stream_channels(kind); }
    int latent_size() const { return input_size / 8; }
    int latent_channels() const { return encoder_widths[2]; }
};

CaeParams make_cae(StreamKind kind, std::uint64_t seed, int input_size = 64,
                   std::array<int, 3> encoder_widths = {32, 32, 16});

/// Forward pass results plus the caches needed for backpropagation.
struct EncoderTrace {
    // pre-activation, post-relu (skip source) and pooled map per stage
    std::array<Tensor, 3> pre;
    std::array<Tensor, 3> act;
    std::array<ops::PoolResult, 3> pooled;
    Tensor input;
};

struct DecoderTrace {
    std::array<Tensor, 3> upsampled;  // input of each conv stage
    std::array<Tensor, 2> pre;        // pre-relu maps of the first two convs
    std::array<Tensor, 2> summed;     // post-skip maps feeding the next stage
    Tensor final_input;               // map entering the last conv
    Tensor output;                    // linear (recon) or sigmoid (seg) output
};

struct CaeForward {
    Tensor latent;
    Tensor main_recon;
    Tensor adv_recon;
    std::optional<Tensor> seg_map;
    EncoderTrace enc;
    DecoderTrace main_trace;
    DecoderTrace adv_trace;
    std::optional<DecoderTrace> seg_trace;
};

CaeForward cae_forward(const CaeParams& params, const Tensor& input);

/// Motion reconstruction / adversarial losses: pixel-wise mean error over
/// h*w*c, squared or absolute per the loss kind.
double recon_loss(const Tensor& input, const Tensor& recon, ReconLossKind kind);

struct MotionLoss {
    double rec;
    double adv;
};
MotionLoss loss_motion(const Tensor& input, const Tensor& main_recon,
                       const Tensor& adv_recon, ReconLossKind kind = ReconLossKind::L2);

struct AppearanceLoss {
    double rec;  // reconstruction error plus mean logistic segmentation error
    double adv;
};
AppearanceLoss loss_appearance(const Tensor& input, const Tensor& main_recon,
                               const Tensor& seg_truth, const Tensor& seg_pred,
                               const Tensor& adv_recon,
                               ReconLossKind kind = ReconLossKind::L2);

struct TrainHyper {
    double learning_rate = 1e-4;
    double lambda = 0.2;  // reversed-gradient weight, must stay below 1
    int epochs = 20;
    int batch_size = 64;
    ReconLossKind loss_kind = ReconLossKind::L2;
};

struct CaeBatchItem {
    Tensor input;
    std::optional<Tensor> seg_truth;  // appearance stream only
};

struct CaeStepReport {
    double rec_loss = 0.0;
    double adv_loss = 0.0;
};

/// One adversarial training step. Normal inputs drive the main (and
/// segmentation) branches by gradient descent; pseudo-abnormal inputs drive
/// the adversarial decoder by descent while the shared encoder takes the
/// reversed (ascent) gradient scaled by lambda. All parameter groups are
/// then updated through their Adam states with the combined signed gradient.
CaeStepReport cae_train_step(CaeParams& params,
                             const std::vector<CaeBatchItem>& batch_normal,
                             const std::vector<Tensor>& batch_pseudo_abnormal,
                             const TrainHyper& hyper);

/// Inference-only view: encoder and main decoder, branches removed.
struct FrozenCae {
    StreamKind kind = StreamKind::Appearance;
    int input_size = 64;
    std::array<int, 3> encoder_widths{32, 32, 16};
    std::array<ConvLayer, 3> encoder;
    std::array<ConvLayer, 3> main_decoder;
};

struct FrozenForward {
    Tensor latent;
    Tensor main_recon;
};

FrozenCae strip_for_inference(const CaeParams& params);
FrozenForward frozen_forward(const FrozenCae& cae, const Tensor& input);

/// Mean main-branch reconstruction error of a sample set (always L2, the
/// separation diagnostic).
double mean_recon_error(const FrozenCae& cae, const std::vector<Tensor>& inputs);

}  // namespace aed
