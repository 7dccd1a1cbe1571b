#pragma once

#include <cstdint>
#include <vector>

#include "aed/tensor.hpp"

namespace aed::ops {

// Layer primitives. All convolutions are 3x3, stride 1, zero 'same' padding,
// so spatial sizes are preserved. Inputs are h x w x c row-major with the
// channel axis fastest. The OpenMP variants parallelize over independent
// output elements only; every element is accumulated in a fixed serial
// order, so results are bit-identical to the serial reference.

/// input: h x w x c_in, kernels: 3 x 3 x c_in x c_out, bias: c_out.
Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias);

struct Conv2dGrads {
    Tensor input;
    Tensor kernels;
    Tensor bias;
};

/// Computes gradients for conv2d. When `need_input` is false the input
/// gradient is skipped (left zero); callers use this for the first layer of a
/// network, where nothing consumes it.
Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels,
                            const Tensor& upstream, bool need_input = true);

struct PoolResult {
    Tensor output;                // h/2 x w/2 x c
    std::vector<int> argmax;      // flat input index of each window max
};

/// 2x2 max pooling at stride 2; ties go to the first index in row-major order.
PoolResult maxpool2d(const Tensor& input);

Tensor maxpool2d_backward(const PoolResult& pooled, const Tensor& upstream,
                          const std::vector<int>& input_shape);

/// Nearest-neighbor 2x upsampling: each entry replicated into a 2x2 block.
Tensor upsample_nearest(const Tensor& input);

/// Sums the upstream gradient over each 2x2 block.
Tensor upsample_nearest_backward(const Tensor& upstream);

/// input: n, weights: n x m, bias: m.
Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct DenseGrads {
    Tensor input;
    Tensor weights;
    Tensor bias;
};

DenseGrads dense_backward(const Tensor& input, const Tensor& weights,
                          const Tensor& upstream);

enum class Activation { Relu, Sigmoid, Softmax };

Tensor activation(const Tensor& input, Activation kind);

Tensor relu(const Tensor& input);
/// pre is the activation input; routes upstream only where pre > 0.
Tensor relu_backward(const Tensor& pre, const Tensor& upstream);
Tensor sigmoid(const Tensor& input);
/// out is the sigmoid output.
Tensor sigmoid_backward(const Tensor& out, const Tensor& upstream);
/// Softmax over the last axis.
Tensor softmax(const Tensor& input);

struct AdamState {
    Tensor first_moment;
    Tensor second_moment;
    std::int64_t step_count = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

AdamState make_adam_state(const std::vector<int>& shape);

/// Standard Adam update with bias correction; throws on non-finite gradients.
void adam_step(Tensor& param, const Tensor& grad, AdamState& state,
               double learning_rate);

namespace ref {
// Plain serial implementations, kept as the comparison baseline for the
// OpenMP kernels. Used by tests and the kernel benchmark.
Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias);
Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels,
                            const Tensor& upstream);
PoolResult maxpool2d(const Tensor& input);
Tensor upsample_nearest(const Tensor& input);
Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias);
}  // namespace ref

}  // namespace aed::ops
