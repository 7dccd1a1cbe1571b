#include "aed/ops.hpp"

#include <algorithm>

// Serial reference kernels. Written as the straightforward textbook loops;
// the OpenMP variants in ops.cpp must agree with these bit for bit.

namespace aed::ops::ref {

Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
    const int h = input.dim(0), w = input.dim(1), cin = input.dim(2);
    const int cout = kernels.dim(3);
    check(kernels.dim(2) == cin, "ref::conv2d: channel mismatch");
    Tensor out({h, w, cout});
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            for (int di = 0; di < 3; ++di)
                for (int dj = 0; dj < 3; ++dj) {
                    const int ii = i + di - 1, jj = j + dj - 1;
                    if (ii < 0 || ii >= h || jj < 0 || jj >= w) continue;
                    for (int ci = 0; ci < cin; ++ci) {
                        const double v = input.at(ii, jj, ci);
                        for (int co = 0; co < cout; ++co)
                            out.at(i, j, co) += v * kernels.at(di, dj, ci, co);
                    }
                }
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            for (int co = 0; co < cout; ++co) out.at(i, j, co) += bias.data[co];
    return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels,
                            const Tensor& upstream) {
    const int h = input.dim(0), w = input.dim(1), cin = input.dim(2);
    const int cout = kernels.dim(3);
    Conv2dGrads g;
    g.input = Tensor({h, w, cin});
    g.kernels = Tensor({3, 3, cin, cout});
    g.bias = Tensor({cout});
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            for (int di = 0; di < 3; ++di)
                for (int dj = 0; dj < 3; ++dj) {
                    const int ii = i + di - 1, jj = j + dj - 1;
                    if (ii < 0 || ii >= h || jj < 0 || jj >= w) continue;
                    for (int ci = 0; ci < cin; ++ci)
                        for (int co = 0; co < cout; ++co) {
                            g.input.at(ii, jj, ci) +=
                                upstream.at(i, j, co) * kernels.at(di, dj, ci, co);
                            g.kernels.at(di, dj, ci, co) +=
                                input.at(ii, jj, ci) * upstream.at(i, j, co);
                        }
                }
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            for (int co = 0; co < cout; ++co) g.bias.data[co] += upstream.at(i, j, co);
    return g;
}

PoolResult maxpool2d(const Tensor& input) {
    const int h = input.dim(0), w = input.dim(1), c = input.dim(2);
    check(h % 2 == 0 && w % 2 == 0, "ref::maxpool2d: odd spatial dimension");
    PoolResult r;
    r.output = Tensor({h / 2, w / 2, c});
    r.argmax.assign(r.output.size(), 0);
    for (int i = 0; i < h / 2; ++i)
        for (int j = 0; j < w / 2; ++j)
            for (int k = 0; k < c; ++k) {
                double best = -1e300;
                int besti = -1;
                for (int di = 0; di < 2; ++di)
                    for (int dj = 0; dj < 2; ++dj) {
                        const double v = input.at(2 * i + di, 2 * j + dj, k);
                        if (v > best) {
                            best = v;
                            besti = ((2 * i + di) * w + (2 * j + dj)) * c + k;
                        }
                    }
                r.output.at(i, j, k) = best;
                r.argmax[(static_cast<std::size_t>(i) * (w / 2) + j) * c + k] = besti;
            }
    return r;
}

Tensor upsample_nearest(const Tensor& input) {
    const int h = input.dim(0), w = input.dim(1), c = input.dim(2);
    Tensor out({2 * h, 2 * w, c});
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            for (int k = 0; k < c; ++k)
                for (int di = 0; di < 2; ++di)
                    for (int dj = 0; dj < 2; ++dj)
                        out.at(2 * i + di, 2 * j + dj, k) = input.at(i, j, k);
    return out;
}

Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    const int n = weights.dim(0), m = weights.dim(1);
    Tensor out({m});
    for (int j = 0; j < m; ++j) {
        double acc = bias.data[j];
        for (int i = 0; i < n; ++i) acc += input.data[i] * weights.at(i, j);
        out.data[j] = acc;
    }
    return out;
}

}  // namespace aed::ops::ref
