// Benchmark of the OpenMP convolution kernels against the serial reference
// implementations, reporting throughput and the largest result discrepancy.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>

#include "aed/ops.hpp"
#include "aed/rng.hpp"

namespace {

using aed::Tensor;

Tensor random_tensor(std::vector<int> shape, aed::Rng& rng) {
    Tensor t(std::move(shape));
    for (double& v : t.data) v = rng.uniform(-1.0, 1.0);
    return t;
}

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm-up
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i) fn();
    const auto stop = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() /
           static_cast<double>(reps);
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

void bench_conv(int h, int w, int c_in, int c_out, int reps) {
    aed::Rng rng(42);
    const Tensor input = random_tensor({h, w, c_in}, rng);
    const Tensor kernels = random_tensor({3, 3, c_in, c_out}, rng);
    const Tensor bias = random_tensor({c_out}, rng);

    Tensor out_par, out_ser;
    const double ms_par =
        time_ms([&] { out_par = aed::ops::conv2d(input, kernels, bias); }, reps);
    const double ms_ser =
        time_ms([&] { out_ser = aed::ops::ref::conv2d(input, kernels, bias); }, reps);

    const double gflop = 2.0 * h * w * 9.0 * c_in * c_out * 1e-9;
    std::printf(
        "conv2d %3dx%-3d %3d->%-3d  parallel %8.3f ms (%6.2f GF/s)  serial %8.3f ms "
        "(%6.2f GF/s)  speedup %5.2fx  max|diff| %.3e\n",
        h, w, c_in, c_out, ms_par, gflop / (ms_par * 1e-3), ms_ser,
        gflop / (ms_ser * 1e-3), ms_ser / ms_par, max_abs_diff(out_par, out_ser));
}

void bench_conv_backward(int h, int w, int c_in, int c_out, int reps) {
    aed::Rng rng(7);
    const Tensor input = random_tensor({h, w, c_in}, rng);
    const Tensor kernels = random_tensor({3, 3, c_in, c_out}, rng);
    const Tensor grad_out = random_tensor({h, w, c_out}, rng);

    aed::ops::Conv2dGrads g_par, g_ser;
    const double ms_par = time_ms(
        [&] { g_par = aed::ops::conv2d_backward(input, kernels, grad_out); }, reps);
    const double ms_ser = time_ms(
        [&] { g_ser = aed::ops::ref::conv2d_backward(input, kernels, grad_out); }, reps);

    const double gflop = 4.0 * h * w * 9.0 * c_in * c_out * 1e-9;
    const double diff = std::max(max_abs_diff(g_par.input, g_ser.input),
                                 max_abs_diff(g_par.kernels, g_ser.kernels));
    std::printf(
        "conv2d_bwd %3dx%-3d %3d->%-3d parallel %8.3f ms (%6.2f GF/s)  serial %8.3f ms "
        "(%6.2f GF/s)  speedup %5.2fx  max|diff| %.3e\n",
        h, w, c_in, c_out, ms_par, gflop / (ms_par * 1e-3), ms_ser,
        gflop / (ms_ser * 1e-3), ms_ser / ms_par, diff);
}

}  // namespace

int main() {
    bench_conv(64, 64, 1, 32, 20);
    bench_conv(64, 64, 32, 32, 10);
    bench_conv(32, 32, 32, 32, 20);
    bench_conv(16, 16, 32, 16, 50);
    bench_conv_backward(64, 64, 32, 32, 10);
    bench_conv_backward(32, 32, 32, 32, 20);
    return 0;
}
