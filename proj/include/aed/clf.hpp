#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "aed/cae.hpp"
#include "aed/ops.hpp"
#include "aed/tensor.hpp"

namespace aed {

enum class DiffMode { Absolute, Signed };

/// Binary normal-vs-pseudo-abnormal classifier: five conv layers with 2x2
/// max pooling, the frozen encoder latent summed in after the third pool,
/// then a fully-connected layer and a Softmax. Layers 1-3 mirror the encoder
/// widths so the latent skip sum type-checks at 8x8x16.
struct ClfParams {
    StreamKind kind = StreamKind::Appearance;
    int input_size = 64;
    std::array<int, 5> conv_widths{32, 32, 16, 32, 64};
    std::array<ConvLayer, 5> convs;
    Tensor fc_weights;  // flattened conv output x 2
    Tensor fc_bias;     // 2
    ops::AdamState fc_weights_state;
    ops::AdamState fc_bias_state;
    DiffMode diff_mode = DiffMode::Absolute;

    int in_channels() const { return stream_channels(kind); }
};

ClfParams make_clf(StreamKind kind, std::uint64_t seed, int input_size = 64,
                   std::array<int, 5> conv_widths = {32, 32, 16, 32, 64},
                   DiffMode diff_mode = DiffMode::Absolute);

struct ClfProbs {
    double pseudo_abnormal;
    double normal;  // the y-hat the loss is computed on
};

/// diff: input-vs-reconstruction difference (64x64xc), latent: matching
/// frozen-encoder output (8x8x16 in the production configuration).
ClfProbs clf_forward(const ClfParams& params, const Tensor& diff, const Tensor& latent);

/// Binary cross-entropy on the normal-class probability; labels are
/// normal=1, pseudo-abnormal=0. y_hat is clamped away from {0,1}.
double clf_loss(int y, double y_hat);

struct ClfSample {
    Tensor diff;
    Tensor latent;
    int label;  // 1 normal, 0 pseudo-abnormal
};

struct ClfHyper {
    double learning_rate = 1e-3;
    int epochs = 30;
    int batch_size = 64;
};

/// One Adam descent step on the mean batch loss; returns that mean loss.
double clf_train_step(ClfParams& params, const std::vector<ClfSample>& batch,
                      const ClfHyper& hyper);

/// Applies the configured difference mode to (input - reconstruction).
Tensor make_diff(const Tensor& input, const Tensor& recon, DiffMode mode);

}  // namespace aed
