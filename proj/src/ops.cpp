#include "aed/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

#include "aed/errors.hpp"

namespace aed::ops {

namespace {

void check_conv_args(const Tensor& input, const Tensor& kernels, const Tensor* bias) {
    check(input.rank() == 3, "conv2d: input must be h x w x c");
    check(kernels.rank() == 4 && kernels.dim(0) == 3 && kernels.dim(1) == 3,
          "conv2d: kernels must be 3 x 3 x c_in x c_out");
    check(kernels.dim(2) == input.dim(2),
          "conv2d: kernel input channels " + std::to_string(kernels.dim(2)) +
              " do not match input channels " + std::to_string(input.dim(2)));
    if (bias)
        check(bias->rank() == 1 && bias->dim(0) == kernels.dim(3),
              "conv2d: bias length must equal output channel count");
}

#if defined(__AVX512F__)

// The three convolution kernels below share one register-blocked microkernel
// that accumulates an MR x (<=16) tile of C += A x B over a list of segments.
// Within a segment, A element (m, k) sits at a[m*sam + k*sak] and B row k at
// b + k*ldb. The input is zero-padded up front so no boundary cases reach the
// microkernel, and the fixed segment/k iteration order keeps results
// deterministic across calls.

struct Seg {
    const double* a;
    const double* b;
    int len;
};

template <int MR, bool KUnit>
void tile16(const Seg* segs, int nsegs, long sam, long sak, long ldb,
            const double* init, double* c, long ldc, __mmask8 lo, __mmask8 hi) {
    __m512d a0[MR], a1[MR];
    const __m512d i0 = init ? _mm512_maskz_loadu_pd(lo, init) : _mm512_setzero_pd();
    const __m512d i1 =
        (init && hi) ? _mm512_maskz_loadu_pd(hi, init + 8) : _mm512_setzero_pd();
    for (int m = 0; m < MR; ++m) {
        a0[m] = i0;
        a1[m] = i1;
    }
    for (int s = 0; s < nsegs; ++s) {
        const double* ap = segs[s].a;
        const double* bp = segs[s].b;
        for (int k = 0; k < segs[s].len; ++k) {
            const __m512d b0 = _mm512_maskz_loadu_pd(lo, bp);
            const __m512d b1 = hi ? _mm512_maskz_loadu_pd(hi, bp + 8) : _mm512_setzero_pd();
            bp += ldb;
            for (int m = 0; m < MR; ++m) {
                const __m512d av = _mm512_set1_pd(ap[m * sam]);
                a0[m] = _mm512_fmadd_pd(av, b0, a0[m]);
                a1[m] = _mm512_fmadd_pd(av, b1, a1[m]);
            }
            ap += KUnit ? 1 : sak;
        }
    }
    for (int m = 0; m < MR; ++m) {
        _mm512_mask_storeu_pd(c + m * ldc, lo, a0[m]);
        if (hi) _mm512_mask_storeu_pd(c + m * ldc + 8, hi, a1[m]);
    }
}

using TileFn = void (*)(const Seg*, int, long, long, long, const double*, double*, long,
                        __mmask8, __mmask8);
constexpr TileFn kTilesUnit[9] = {nullptr,           tile16<1, true>, tile16<2, true>,
                                  tile16<3, true>,   tile16<4, true>, tile16<5, true>,
                                  tile16<6, true>,   tile16<7, true>, tile16<8, true>};
constexpr TileFn kTilesStride[9] = {nullptr,           tile16<1, false>, tile16<2, false>,
                                    tile16<3, false>,  tile16<4, false>, tile16<5, false>,
                                    tile16<6, false>,  tile16<7, false>, tile16<8, false>};

__mmask8 mask_lo(int nb) {
    return nb >= 8 ? static_cast<__mmask8>(0xff) : static_cast<__mmask8>((1u << nb) - 1);
}
__mmask8 mask_hi(int nb) {
    if (nb <= 8) return 0;
    return nb >= 16 ? static_cast<__mmask8>(0xff)
                    : static_cast<__mmask8>((1u << (nb - 8)) - 1);
}

// For tiles narrower than a vector (few output channels), broadcasting the
// weight wastes most lanes. This variant vectorizes along the reduction
// dimension instead and finishes with a horizontal sum: C(m, co) = dot of
// patch row m with transposed-weight row co (bt, row stride btstride).
template <int MR>
void tile_kvec(const Seg* segs, int nsegs, long sam, const double* bt, long btstride,
               int nco, const double* bias, double* c, long ldc) {
    for (int co = 0; co < nco; co += 2) {
        const bool two = co + 1 < nco;
        __m512d acc0[MR], acc1[MR];
        for (int m = 0; m < MR; ++m) acc0[m] = acc1[m] = _mm512_setzero_pd();
        const double* b0 = bt + static_cast<std::size_t>(co) * btstride;
        const double* b1 = two ? b0 + btstride : b0;
        long koff = 0;
        for (int s = 0; s < nsegs; ++s) {
            const double* ap = segs[s].a;
            const int len = segs[s].len;
            for (int k0 = 0; k0 < len; k0 += 8) {
                const __mmask8 mk = mask_lo(std::min(8, len - k0));
                const __m512d bv0 = _mm512_maskz_loadu_pd(mk, b0 + koff + k0);
                const __m512d bv1 =
                    two ? _mm512_maskz_loadu_pd(mk, b1 + koff + k0) : _mm512_setzero_pd();
                for (int m = 0; m < MR; ++m) {
                    const __m512d av = _mm512_maskz_loadu_pd(mk, ap + m * sam + k0);
                    acc0[m] = _mm512_fmadd_pd(av, bv0, acc0[m]);
                    acc1[m] = _mm512_fmadd_pd(av, bv1, acc1[m]);
                }
            }
            koff += len;
        }
        for (int m = 0; m < MR; ++m) {
            c[m * ldc + co] = _mm512_reduce_add_pd(acc0[m]) + (bias ? bias[co] : 0.0);
            if (two)
                c[m * ldc + co + 1] =
                    _mm512_reduce_add_pd(acc1[m]) + (bias ? bias[co + 1] : 0.0);
        }
    }
}

using TileKvecFn = void (*)(const Seg*, int, long, const double*, long, int,
                            const double*, double*, long);
constexpr TileKvecFn kTilesKvec[9] = {nullptr,       tile_kvec<1>, tile_kvec<2>,
                                      tile_kvec<3>,  tile_kvec<4>, tile_kvec<5>,
                                      tile_kvec<6>,  tile_kvec<7>, tile_kvec<8>};

/// Copies a h x w x c map into a zero-padded (h+2) x (w+2) x c buffer. Only
/// the border cells are zeroed explicitly so the copy is single-pass; the
/// buffers are reused across calls to avoid churning the allocator.
void pad_map(const double* in, int h, int w, int c, std::vector<double>& buf) {
    const int wp = w + 2;
    const std::size_t row = static_cast<std::size_t>(wp) * c;
    buf.resize(static_cast<std::size_t>(h + 2) * row);
    std::memset(buf.data(), 0, sizeof(double) * row);
    std::memset(buf.data() + static_cast<std::size_t>(h + 1) * row, 0,
                sizeof(double) * row);
    for (int i = 0; i < h; ++i) {
        double* dst = buf.data() + static_cast<std::size_t>(i + 1) * row;
        std::memset(dst, 0, sizeof(double) * c);
        std::memcpy(dst + c, in + static_cast<std::size_t>(i) * w * c,
                    sizeof(double) * static_cast<std::size_t>(w) * c);
        std::memset(dst + (static_cast<std::size_t>(w) + 1) * c, 0,
                    sizeof(double) * c);
    }
}

std::vector<double>& pad_scratch(int which) {
    thread_local std::vector<double> bufs[3];
    return bufs[which];
}

/// out[i,j,:] (+)= patches of `pad` times `weights` (9*cs x cd, row-major),
/// seeded with `init` (nullptr for zero). Shared by conv2d and grad-input.
void conv_gemm(const std::vector<double>& pad, int h, int w, int cs,
               const double* weights, int cd, const double* init, double* out) {
    const int wp = w + 2;
    if (cd < 8) {
        // Transposed weights so each output channel's taps are contiguous.
        std::vector<double> bt(static_cast<std::size_t>(cd) * 9 * cs);
        for (long k = 0; k < 9L * cs; ++k)
            for (int co = 0; co < cd; ++co)
                bt[static_cast<std::size_t>(co) * 9 * cs + k] = weights[k * cd + co];
#pragma omp parallel for schedule(static)
        for (int i = 0; i < h; ++i)
            for (int j0 = 0; j0 < w; j0 += 8) {
                const int mb = std::min(8, w - j0);
                Seg segs[9];
                for (int d = 0; d < 9; ++d)
                    segs[d] = {pad.data() +
                                   (static_cast<std::size_t>(i + d / 3) * wp + j0 + d % 3) * cs,
                               nullptr, cs};
                kTilesKvec[mb](segs, 9, cs, bt.data(), 9L * cs, cd, init,
                               out + (static_cast<std::size_t>(i) * w + j0) * cd, cd);
            }
        return;
    }
#pragma omp parallel for schedule(static)
    for (int i = 0; i < h; ++i)
        for (int n0 = 0; n0 < cd; n0 += 16) {
            const int nb = std::min(16, cd - n0);
            const __mmask8 lo = mask_lo(nb), hi = mask_hi(nb);
            for (int j0 = 0; j0 < w; j0 += 8) {
                const int mb = std::min(8, w - j0);
                Seg segs[9];
                for (int d = 0; d < 9; ++d)
                    segs[d] = {pad.data() +
                                   (static_cast<std::size_t>(i + d / 3) * wp + j0 + d % 3) * cs,
                               weights + static_cast<std::size_t>(d) * cs * cd + n0, cs};
                kTilesUnit[mb](segs, 9, cs, 1, cd, init ? init + n0 : nullptr,
                               out + (static_cast<std::size_t>(i) * w + j0) * cd + n0, cd,
                               lo, hi);
            }
        }
}

#endif  // __AVX512F__

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
    check_conv_args(input, kernels, &bias);
    const int h = input.dim(0), w = input.dim(1), cin = input.dim(2);
    const int cout = kernels.dim(3);
    Tensor out({h, w, cout});
#if defined(__AVX512F__)
    std::vector<double>& pad = pad_scratch(0);
    pad_map(input.data.data(), h, w, cin, pad);
    conv_gemm(pad, h, w, cin, kernels.data.data(), cout, bias.data.data(),
              out.data.data());
#else
    const double* in = input.data.data();
    const double* kk = kernels.data.data();
    const double* bb = bias.data.data();
    double* op = out.data.data();

#pragma omp parallel for schedule(static)
    for (int i = 0; i < h; ++i) {
        std::vector<double> acc(static_cast<std::size_t>(cout));
        const int di0 = std::max(0, 1 - i);
        const int di1 = std::min(2, h - i);
        for (int j = 0; j < w; ++j) {
            for (int co = 0; co < cout; ++co) acc[co] = bb[co];
            const int dj0 = std::max(0, 1 - j);
            const int dj1 = std::min(2, w - j);
            for (int di = di0; di <= di1; ++di) {
                const int ii = i + di - 1;
                for (int dj = dj0; dj <= dj1; ++dj) {
                    const int jj = j + dj - 1;
                    const double* irow = in + (static_cast<std::size_t>(ii) * w + jj) * cin;
                    const double* krow =
                        kk + ((static_cast<std::size_t>(di) * 3 + dj) * cin) * cout;
                    for (int ci = 0; ci < cin; ++ci) {
                        const double v = irow[ci];
                        const double* kr = krow + static_cast<std::size_t>(ci) * cout;
                        for (int co = 0; co < cout; ++co) acc[co] += v * kr[co];
                    }
                }
            }
            double* orow = op + (static_cast<std::size_t>(i) * w + j) * cout;
            for (int co = 0; co < cout; ++co) orow[co] = acc[co];
        }
    }
#endif
    return out;
}

Conv2dGrads conv2d_backward(const Tensor& input, const Tensor& kernels,
                            const Tensor& upstream, bool need_input) {
    check_conv_args(input, kernels, nullptr);
    const int h = input.dim(0), w = input.dim(1), cin = input.dim(2);
    const int cout = kernels.dim(3);
    check(upstream.rank() == 3 && upstream.dim(0) == h && upstream.dim(1) == w &&
              upstream.dim(2) == cout,
          "conv2d_backward: upstream shape must match forward output");

    Conv2dGrads g;
    g.input = Tensor({h, w, cin});
    g.kernels = Tensor({3, 3, cin, cout});
    g.bias = Tensor({cout});

    const double* in = input.data.data();
    const double* up = upstream.data.data();

#if defined(__AVX512F__)
    if (need_input) {
        // Grad wrt input is a correlation of the upstream map with the
        // flipped, transposed kernel, so it reuses the padded forward kernel.
        Tensor ktf({3, 3, cout, cin});
        for (int di = 0; di < 3; ++di)
            for (int dj = 0; dj < 3; ++dj)
                for (int ci = 0; ci < cin; ++ci)
                    for (int co = 0; co < cout; ++co)
                        ktf.at(di, dj, co, ci) = kernels.at(2 - di, 2 - dj, ci, co);
        std::vector<double>& padu = pad_scratch(1);
        pad_map(up, h, w, cout, padu);
        conv_gemm(padu, h, w, cout, ktf.data.data(), cin, nullptr,
                  g.input.data.data());
    }

    // Grad wrt kernels: for each tap offset, a (cin x cout) block accumulates
    // padded-input-slice^T x upstream over all pixels.
    std::vector<double>& padi = pad_scratch(2);
    pad_map(in, h, w, cin, padi);
    const int wp = w + 2;
    double* gk = g.kernels.data.data();
#pragma omp parallel for schedule(static)
    for (int d = 0; d < 9; ++d) {
        std::vector<Seg> rows(static_cast<std::size_t>(h));
        if (cout < 8) {
            // Few output channels: swap the tile orientation (vectorize over
            // cin, broadcast upstream) into a small transposed scratch block.
            std::vector<double> tmp(static_cast<std::size_t>(cout) * cin);
            for (int n0 = 0; n0 < cin; n0 += 16) {
                const int nb = std::min(16, cin - n0);
                const __mmask8 lo = mask_lo(nb), hi = mask_hi(nb);
                for (int i = 0; i < h; ++i)
                    rows[static_cast<std::size_t>(i)] = {
                        up + static_cast<std::size_t>(i) * w * cout,
                        padi.data() +
                            (static_cast<std::size_t>(i + d / 3) * wp + d % 3) * cin + n0,
                        w};
                kTilesStride[cout](rows.data(), h, 1, cout, cin, nullptr,
                                   tmp.data() + n0, cin, lo, hi);
            }
            for (int ci = 0; ci < cin; ++ci)
                for (int co = 0; co < cout; ++co)
                    gk[(static_cast<std::size_t>(d) * cin + ci) * cout + co] =
                        tmp[static_cast<std::size_t>(co) * cin + ci];
            continue;
        }
        for (int n0 = 0; n0 < cout; n0 += 16) {
            const int nb = std::min(16, cout - n0);
            const __mmask8 lo = mask_lo(nb), hi = mask_hi(nb);
            for (int m0 = 0; m0 < cin; m0 += 8) {
                const int mb = std::min(8, cin - m0);
                for (int i = 0; i < h; ++i)
                    rows[static_cast<std::size_t>(i)] = {
                        padi.data() +
                            (static_cast<std::size_t>(i + d / 3) * wp + d % 3) * cin + m0,
                        up + static_cast<std::size_t>(i) * w * cout + n0, w};
                kTilesStride[mb](rows.data(), h, 1, cin, cout, nullptr,
                                 gk + (static_cast<std::size_t>(d) * cin + m0) * cout + n0,
                                 cout, lo, hi);
            }
        }
    }
#else
    const double* kk = kernels.data.data();

    // Transposed kernel copy so the grad-input inner loop is contiguous.
    Tensor kt({3, 3, cout, cin});
    for (int di = 0; di < 3; ++di)
        for (int dj = 0; dj < 3; ++dj)
            for (int ci = 0; ci < cin; ++ci)
                for (int co = 0; co < cout; ++co)
                    kt.at(di, dj, co, ci) = kernels.at(di, dj, ci, co);
    const double* ktp = kt.data.data();

    if (need_input) {
        double* gi = g.input.data.data();
#pragma omp parallel for schedule(static)
        for (int i = 0; i < h; ++i) {
            std::vector<double> acc(static_cast<std::size_t>(cin));
            const int di0 = std::max(0, i - h + 2);
            const int di1 = std::min(2, i + 1);
            for (int j = 0; j < w; ++j) {
                std::fill(acc.begin(), acc.end(), 0.0);
                const int dj0 = std::max(0, j - w + 2);
                const int dj1 = std::min(2, j + 1);
                for (int di = di0; di <= di1; ++di) {
                    const int oi = i - di + 1;
                    for (int dj = dj0; dj <= dj1; ++dj) {
                        const int oj = j - dj + 1;
                        const double* urow =
                            up + (static_cast<std::size_t>(oi) * w + oj) * cout;
                        const double* krow =
                            ktp + ((static_cast<std::size_t>(di) * 3 + dj) * cout) * cin;
                        for (int co = 0; co < cout; ++co) {
                            const double u = urow[co];
                            const double* kr = krow + static_cast<std::size_t>(co) * cin;
                            for (int ci = 0; ci < cin; ++ci) acc[ci] += u * kr[ci];
                        }
                    }
                }
                double* grow = gi + (static_cast<std::size_t>(i) * w + j) * cin;
                for (int ci = 0; ci < cin; ++ci) grow[ci] = acc[ci];
            }
        }
    }

    double* gk = g.kernels.data.data();
#pragma omp parallel for schedule(static)
    for (int slot = 0; slot < 9 * cin; ++slot) {
        const int di = slot / (3 * cin);
        const int dj = (slot / cin) % 3;
        const int ci = slot % cin;
        std::vector<double> acc(static_cast<std::size_t>(cout), 0.0);
        const int i0 = std::max(0, 1 - di);
        const int i1 = std::min(h - 1, h - di);
        const int j0 = std::max(0, 1 - dj);
        const int j1 = std::min(w - 1, w - dj);
        for (int i = i0; i <= i1; ++i) {
            const int ii = i + di - 1;
            for (int j = j0; j <= j1; ++j) {
                const int jj = j + dj - 1;
                const double v = in[(static_cast<std::size_t>(ii) * w + jj) * cin + ci];
                const double* urow = up + (static_cast<std::size_t>(i) * w + j) * cout;
                for (int co = 0; co < cout; ++co) acc[co] += v * urow[co];
            }
        }
        double* grow = gk + static_cast<std::size_t>(slot) * cout;
        for (int co = 0; co < cout; ++co) grow[co] = acc[co];
    }
#endif

    double* gb = g.bias.data.data();
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j) {
            const double* urow = up + (static_cast<std::size_t>(i) * w + j) * cout;
            for (int co = 0; co < cout; ++co) gb[co] += urow[co];
        }

    return g;
}

PoolResult maxpool2d(const Tensor& input) {
    check(input.rank() == 3, "maxpool2d: input must be h x w x c");
    const int h = input.dim(0), w = input.dim(1), c = input.dim(2);
    check(h % 2 == 0 && w % 2 == 0, "maxpool2d: spatial dimensions must be even");
    PoolResult r;
    r.output = Tensor({h / 2, w / 2, c});
    r.argmax.assign(r.output.size(), 0);

    const int oh = h / 2, ow = w / 2;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j)
            for (int k = 0; k < c; ++k) {
                double best = input.at(2 * i, 2 * j, k);
                int besti = (2 * i * w + 2 * j) * c + k;
                // first index in row-major order wins on ties
                const int cand[3][2] = {{2 * i, 2 * j + 1}, {2 * i + 1, 2 * j}, {2 * i + 1, 2 * j + 1}};
                for (const auto& pq : cand) {
                    const double v = input.at(pq[0], pq[1], k);
                    if (v > best) {
                        best = v;
                        besti = (pq[0] * w + pq[1]) * c + k;
                    }
                }
                r.output.at(i, j, k) = best;
                r.argmax[(static_cast<std::size_t>(i) * ow + j) * c + k] = besti;
            }
    return r;
}

Tensor maxpool2d_backward(const PoolResult& pooled, const Tensor& upstream,
                          const std::vector<int>& input_shape) {
    check(upstream.same_shape(pooled.output),
          "maxpool2d_backward: upstream shape must match pooled output");
    Tensor g(input_shape);
    for (std::size_t n = 0; n < upstream.size(); ++n)
        g.data[static_cast<std::size_t>(pooled.argmax[n])] += upstream.data[n];
    return g;
}

Tensor upsample_nearest(const Tensor& input) {
    check(input.rank() == 3, "upsample_nearest: input must be h x w x c");
    const int h = input.dim(0), w = input.dim(1), c = input.dim(2);
    Tensor out({2 * h, 2 * w, c});
#pragma omp parallel for schedule(static)
    for (int i = 0; i < 2 * h; ++i)
        for (int j = 0; j < 2 * w; ++j)
            for (int k = 0; k < c; ++k) out.at(i, j, k) = input.at(i / 2, j / 2, k);
    return out;
}

Tensor upsample_nearest_backward(const Tensor& upstream) {
    check(upstream.rank() == 3, "upsample_nearest_backward: rank 3 expected");
    const int h2 = upstream.dim(0), w2 = upstream.dim(1), c = upstream.dim(2);
    check(h2 % 2 == 0 && w2 % 2 == 0, "upsample_nearest_backward: odd upstream size");
    Tensor g({h2 / 2, w2 / 2, c});
#pragma omp parallel for schedule(static)
    for (int i = 0; i < h2 / 2; ++i)
        for (int j = 0; j < w2 / 2; ++j)
            for (int k = 0; k < c; ++k)
                g.at(i, j, k) = upstream.at(2 * i, 2 * j, k) + upstream.at(2 * i, 2 * j + 1, k) +
                                upstream.at(2 * i + 1, 2 * j, k) +
                                upstream.at(2 * i + 1, 2 * j + 1, k);
    return g;
}

Tensor dense(const Tensor& input, const Tensor& weights, const Tensor& bias) {
    check(weights.rank() == 2, "dense: weights must be n x m");
    const int n = weights.dim(0), m = weights.dim(1);
    check(static_cast<int>(input.size()) == n, "dense: input length mismatch");
    check(bias.rank() == 1 && bias.dim(0) == m, "dense: bias length mismatch");
    Tensor out({m});
    for (int j = 0; j < m; ++j) out.data[j] = bias.data[j];
    for (int i = 0; i < n; ++i) {
        const double v = input.data[i];
        const double* wrow = weights.data.data() + static_cast<std::size_t>(i) * m;
        for (int j = 0; j < m; ++j) out.data[j] += v * wrow[j];
    }
    return out;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weights,
                          const Tensor& upstream) {
    const int n = weights.dim(0), m = weights.dim(1);
    check(static_cast<int>(input.size()) == n, "dense_backward: input length mismatch");
    check(static_cast<int>(upstream.size()) == m, "dense_backward: upstream length mismatch");
    DenseGrads g;
    g.input = Tensor(input.shape);
    g.weights = Tensor({n, m});
    g.bias = upstream;
    g.bias.shape = {m};
    for (int i = 0; i < n; ++i) {
        const double* wrow = weights.data.data() + static_cast<std::size_t>(i) * m;
        double* gwrow = g.weights.data.data() + static_cast<std::size_t>(i) * m;
        double acc = 0.0;
        const double v = input.data[i];
        for (int j = 0; j < m; ++j) {
            acc += wrow[j] * upstream.data[j];
            gwrow[j] = v * upstream.data[j];
        }
        g.input.data[i] = acc;
    }
    return g;
}

Tensor relu(const Tensor& input) {
    Tensor out = input;
    for (double& v : out.data) v = v > 0.0 ? v : 0.0;
    return out;
}

Tensor relu_backward(const Tensor& pre, const Tensor& upstream) {
    check(pre.same_shape(upstream), "relu_backward: shape mismatch");
    Tensor g = upstream;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (pre.data[i] <= 0.0) g.data[i] = 0.0;
    return g;
}

Tensor sigmoid(const Tensor& input) {
    Tensor out = input;
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    return out;
}

Tensor sigmoid_backward(const Tensor& out, const Tensor& upstream) {
    check(out.same_shape(upstream), "sigmoid_backward: shape mismatch");
    Tensor g = upstream;
    for (std::size_t i = 0; i < g.size(); ++i)
        g.data[i] *= out.data[i] * (1.0 - out.data[i]);
    return g;
}

Tensor softmax(const Tensor& input) {
    check(input.rank() >= 1, "softmax: rank >= 1 expected");
    const int m = input.dim(input.rank() - 1);
    const std::size_t rows = input.size() / static_cast<std::size_t>(m);
    Tensor out = input;
    for (std::size_t r = 0; r < rows; ++r) {
        double* row = out.data.data() + r * m;
        double mx = row[0];
        for (int j = 1; j < m; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (int j = 0; j < m; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (int j = 0; j < m; ++j) row[j] /= sum;
    }
    return out;
}

Tensor activation(const Tensor& input, Activation kind) {
    switch (kind) {
        case Activation::Relu: return relu(input);
        case Activation::Sigmoid: return sigmoid(input);
        case Activation::Softmax: return softmax(input);
    }
    throw std::logic_error("activation: unknown kind");
}

AdamState make_adam_state(const std::vector<int>& shape) {
    AdamState st;
    st.first_moment = Tensor(shape);
    st.second_moment = Tensor(shape);
    return st;
}

void adam_step(Tensor& param, const Tensor& grad, AdamState& state,
               double learning_rate) {
    check(param.same_shape(grad) && param.same_shape(state.first_moment) &&
              param.same_shape(state.second_moment),
          "adam_step: parameter, gradient and moments must share a shape");
    if (!grad.all_finite())
        throw NumericError("adam_step: non-finite gradient");
    state.step_count += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
    double* p = param.data.data();
    double* m = state.first_moment.data.data();
    double* v = state.second_moment.data.data();
    const double* g = grad.data.data();
    for (std::size_t i = 0; i < param.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        const double mhat = m[i] / c1;
        const double vhat = v[i] / c2;
        p[i] -= learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
}

}  // namespace aed::ops
