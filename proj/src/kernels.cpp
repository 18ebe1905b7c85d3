#include "fedmt/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fedmt::kernels {

namespace {

// Single output element of a same-padded stride-1 convolution. Shared by the
// serial and OpenMP paths so accumulation order is identical.
inline double conv_cell(const float* x, const float* w, const Conv2dShape& s,
                        uint32_t n, uint32_t f, uint32_t oy, uint32_t ox) {
    const int pad = static_cast<int>(s.k) / 2;
    double acc = 0.0;
    for (uint32_t c = 0; c < s.cin; ++c) {
        const float* xc = x + (static_cast<std::size_t>(n) * s.cin + c) * s.h * s.w;
        const float* wc = w + (static_cast<std::size_t>(f) * s.cin + c) * s.k * s.k;
        for (uint32_t ky = 0; ky < s.k; ++ky) {
            const int iy = static_cast<int>(oy) + static_cast<int>(ky) - pad;
            if (iy < 0 || iy >= static_cast<int>(s.h)) continue;
            for (uint32_t kx = 0; kx < s.k; ++kx) {
                const int ix = static_cast<int>(ox) + static_cast<int>(kx) - pad;
                if (ix < 0 || ix >= static_cast<int>(s.w)) continue;
                acc += static_cast<double>(xc[iy * s.w + ix]) *
                       static_cast<double>(wc[ky * s.k + kx]);
            }
        }
    }
    return acc;
}

// Gradient w.r.t. one input element: correlate the output gradient with the
// flipped kernel window.
inline double conv_cell_input_grad(const float* gy, const float* w, const Conv2dShape& s,
                                   uint32_t n, uint32_t c, uint32_t iy, uint32_t ix) {
    const int pad = static_cast<int>(s.k) / 2;
    double acc = 0.0;
    for (uint32_t f = 0; f < s.cout; ++f) {
        const float* gyf = gy + (static_cast<std::size_t>(n) * s.cout + f) * s.h * s.w;
        const float* wc = w + (static_cast<std::size_t>(f) * s.cin + c) * s.k * s.k;
        for (uint32_t ky = 0; ky < s.k; ++ky) {
            const int oy = static_cast<int>(iy) - static_cast<int>(ky) + pad;
            if (oy < 0 || oy >= static_cast<int>(s.h)) continue;
            for (uint32_t kx = 0; kx < s.k; ++kx) {
                const int ox = static_cast<int>(ix) - static_cast<int>(kx) + pad;
                if (ox < 0 || ox >= static_cast<int>(s.w)) continue;
                acc += static_cast<double>(gyf[oy * s.w + ox]) *
                       static_cast<double>(wc[ky * s.k + kx]);
            }
        }
    }
    return acc;
}

// Gradient w.r.t. one kernel weight: sum over batch and spatial positions.
inline double conv_cell_weight_grad(const float* x, const float* gy, const Conv2dShape& s,
                                    uint32_t f, uint32_t c, uint32_t ky, uint32_t kx) {
    const int pad = static_cast<int>(s.k) / 2;
    double acc = 0.0;
    for (uint32_t n = 0; n < s.n; ++n) {
        const float* xc = x + (static_cast<std::size_t>(n) * s.cin + c) * s.h * s.w;
        const float* gyf = gy + (static_cast<std::size_t>(n) * s.cout + f) * s.h * s.w;
        for (uint32_t oy = 0; oy < s.h; ++oy) {
            const int iy = static_cast<int>(oy) + static_cast<int>(ky) - pad;
            if (iy < 0 || iy >= static_cast<int>(s.h)) continue;
            for (uint32_t ox = 0; ox < s.w; ++ox) {
                const int ix = static_cast<int>(ox) + static_cast<int>(kx) - pad;
                if (ix < 0 || ix >= static_cast<int>(s.w)) continue;
                acc += static_cast<double>(xc[iy * s.w + ix]) *
                       static_cast<double>(gyf[oy * s.w + ox]);
            }
        }
    }
    return acc;
}

inline double dense_cell(const float* x, const float* w, uint32_t in,
                         uint32_t n, uint32_t f) {
    const float* xr = x + static_cast<std::size_t>(n) * in;
    const float* wr = w + static_cast<std::size_t>(f) * in;
    double acc = 0.0;
    for (uint32_t i = 0; i < in; ++i) {
        acc += static_cast<double>(xr[i]) * static_cast<double>(wr[i]);
    }
    return acc;
}

}  // namespace

namespace ref {

void conv2d_forward(const float* x, const float* w, float* y, const Conv2dShape& s) {
    for (uint32_t n = 0; n < s.n; ++n)
        for (uint32_t f = 0; f < s.cout; ++f)
            for (uint32_t oy = 0; oy < s.h; ++oy)
                for (uint32_t ox = 0; ox < s.w; ++ox)
                    y[((static_cast<std::size_t>(n) * s.cout + f) * s.h + oy) * s.w + ox] =
                        static_cast<float>(conv_cell(x, w, s, n, f, oy, ox));
}

void conv2d_backward_input(const float* gy, const float* w, float* gx, const Conv2dShape& s) {
    for (uint32_t n = 0; n < s.n; ++n)
        for (uint32_t c = 0; c < s.cin; ++c)
            for (uint32_t iy = 0; iy < s.h; ++iy)
                for (uint32_t ix = 0; ix < s.w; ++ix)
                    gx[((static_cast<std::size_t>(n) * s.cin + c) * s.h + iy) * s.w + ix] =
                        static_cast<float>(conv_cell_input_grad(gy, w, s, n, c, iy, ix));
}

void conv2d_backward_weight(const float* x, const float* gy, float* gw, const Conv2dShape& s) {
    for (uint32_t f = 0; f < s.cout; ++f)
        for (uint32_t c = 0; c < s.cin; ++c)
            for (uint32_t ky = 0; ky < s.k; ++ky)
                for (uint32_t kx = 0; kx < s.k; ++kx)
                    gw[((static_cast<std::size_t>(f) * s.cin + c) * s.k + ky) * s.k + kx] =
                        static_cast<float>(conv_cell_weight_grad(x, gy, s, f, c, ky, kx));
}

void dense_forward(const float* x, const float* w, float* y,
                   uint32_t n, uint32_t in, uint32_t out) {
    for (uint32_t r = 0; r < n; ++r)
        for (uint32_t f = 0; f < out; ++f)
            y[static_cast<std::size_t>(r) * out + f] =
                static_cast<float>(dense_cell(x, w, in, r, f));
}

void dense_backward_input(const float* gy, const float* w, float* gx,
                          uint32_t n, uint32_t in, uint32_t out) {
    for (uint32_t r = 0; r < n; ++r)
        for (uint32_t i = 0; i < in; ++i) {
            double acc = 0.0;
            for (uint32_t f = 0; f < out; ++f)
                acc += static_cast<double>(gy[static_cast<std::size_t>(r) * out + f]) *
                       static_cast<double>(w[static_cast<std::size_t>(f) * in + i]);
            gx[static_cast<std::size_t>(r) * in + i] = static_cast<float>(acc);
        }
}

void dense_backward_weight(const float* x, const float* gy, float* gw,
                           uint32_t n, uint32_t in, uint32_t out) {
    for (uint32_t f = 0; f < out; ++f)
        for (uint32_t i = 0; i < in; ++i) {
            double acc = 0.0;
            for (uint32_t r = 0; r < n; ++r)
                acc += static_cast<double>(x[static_cast<std::size_t>(r) * in + i]) *
                       static_cast<double>(gy[static_cast<std::size_t>(r) * out + f]);
            gw[static_cast<std::size_t>(f) * in + i] = static_cast<float>(acc);
        }
}

void bias_forward_4d(const float* x, const float* b, float* y,
                     uint32_t n, uint32_t c, uint32_t hw) {
    for (uint32_t r = 0; r < n; ++r)
        for (uint32_t ch = 0; ch < c; ++ch) {
            const std::size_t base = (static_cast<std::size_t>(r) * c + ch) * hw;
            for (uint32_t i = 0; i < hw; ++i) y[base + i] = x[base + i] + b[ch];
        }
}

void bias_backward_4d(const float* gy, float* gb, uint32_t n, uint32_t c, uint32_t hw) {
    for (uint32_t ch = 0; ch < c; ++ch) {
        double acc = 0.0;
        for (uint32_t r = 0; r < n; ++r) {
            const std::size_t base = (static_cast<std::size_t>(r) * c + ch) * hw;
            for (uint32_t i = 0; i < hw; ++i) acc += static_cast<double>(gy[base + i]);
        }
        gb[ch] = static_cast<float>(acc);
    }
}

void bias_forward_2d(const float* x, const float* b, float* y, uint32_t n, uint32_t f) {
    for (uint32_t r = 0; r < n; ++r)
        for (uint32_t i = 0; i < f; ++i)
            y[static_cast<std::size_t>(r) * f + i] =
                x[static_cast<std::size_t>(r) * f + i] + b[i];
}

void bias_backward_2d(const float* gy, float* gb, uint32_t n, uint32_t f) {
    for (uint32_t i = 0; i < f; ++i) {
        double acc = 0.0;
        for (uint32_t r = 0; r < n; ++r)
            acc += static_cast<double>(gy[static_cast<std::size_t>(r) * f + i]);
        gb[i] = static_cast<float>(acc);
    }
}

void maxpool2x2_forward(const float* x, float* y, uint32_t* argmax,
                        uint32_t nc, uint32_t h, uint32_t w) {
    const uint32_t oh = h / 2, ow = w / 2;
    for (uint32_t m = 0; m < nc; ++m) {
        const float* xm = x + static_cast<std::size_t>(m) * h * w;
        float* ym = y + static_cast<std::size_t>(m) * oh * ow;
        uint32_t* am = argmax + static_cast<std::size_t>(m) * oh * ow;
        for (uint32_t oy = 0; oy < oh; ++oy)
            for (uint32_t ox = 0; ox < ow; ++ox) {
                uint32_t best = (2 * oy) * w + 2 * ox;
                for (uint32_t dy = 0; dy < 2; ++dy)
                    for (uint32_t dx = 0; dx < 2; ++dx) {
                        const uint32_t idx = (2 * oy + dy) * w + (2 * ox + dx);
                        if (xm[idx] > xm[best]) best = idx;
                    }
                ym[oy * ow + ox] = xm[best];
                am[oy * ow + ox] = best;
            }
    }
}

void maxpool2x2_backward(const float* gy, const uint32_t* argmax, float* gx,
                         uint32_t nc, uint32_t h, uint32_t w) {
    const uint32_t oh = h / 2, ow = w / 2;
    std::memset(gx, 0, static_cast<std::size_t>(nc) * h * w * sizeof(float));
    for (uint32_t m = 0; m < nc; ++m) {
        const float* gym = gy + static_cast<std::size_t>(m) * oh * ow;
        const uint32_t* am = argmax + static_cast<std::size_t>(m) * oh * ow;
        float* gxm = gx + static_cast<std::size_t>(m) * h * w;
        for (uint32_t i = 0; i < oh * ow; ++i) gxm[am[i]] += gym[i];
    }
}

void relu_forward(const float* x, float* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_backward(const float* x, const float* gy, float* gx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) gx[i] = x[i] > 0.0f ? gy[i] : 0.0f;
}

void sigmoid_forward(const float* x, float* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i)
        y[i] = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(x[i]))));
}

void sigmoid_backward(const float* y, const float* gy, float* gx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double s = static_cast<double>(y[i]);
        gx[i] = static_cast<float>(static_cast<double>(gy[i]) * s * (1.0 - s));
    }
}

}  // namespace ref

namespace omp {

// Each parallel loop partitions independent output elements; the per-element
// accumulation uses the same helpers as ref, so results match bitwise.

void conv2d_forward(const float* x, const float* w, float* y, const Conv2dShape& s) {
#pragma omp parallel for collapse(2) schedule(static)
    for (uint32_t n = 0; n < s.n; ++n)
        for (uint32_t f = 0; f < s.cout; ++f)
            for (uint32_t oy = 0; oy < s.h; ++oy)
                for (uint32_t ox = 0; ox < s.w; ++ox)
                    y[((static_cast<std::size_t>(n) * s.cout + f) * s.h + oy) * s.w + ox] =
                        static_cast<float>(conv_cell(x, w, s, n, f, oy, ox));
}

void conv2d_backward_input(const float* gy, const float* w, float* gx, const Conv2dShape& s) {
#pragma omp parallel for collapse(2) schedule(static)
    for (uint32_t n = 0; n < s.n; ++n)
        for (uint32_t c = 0; c < s.cin; ++c)
            for (uint32_t iy = 0; iy < s.h; ++iy)
                for (uint32_t ix = 0; ix < s.w; ++ix)
                    gx[((static_cast<std::size_t>(n) * s.cin + c) * s.h + iy) * s.w + ix] =
                        static_cast<float>(conv_cell_input_grad(gy, w, s, n, c, iy, ix));
}

void conv2d_backward_weight(const float* x, const float* gy, float* gw, const Conv2dShape& s) {
#pragma omp parallel for collapse(2) schedule(static)
    for (uint32_t f = 0; f < s.cout; ++f)
        for (uint32_t c = 0; c < s.cin; ++c)
            for (uint32_t ky = 0; ky < s.k; ++ky)
                for (uint32_t kx = 0; kx < s.k; ++kx)
                    gw[((static_cast<std::size_t>(f) * s.cin + c) * s.k + ky) * s.k + kx] =
                        static_cast<float>(conv_cell_weight_grad(x, gy, s, f, c, ky, kx));
}

void dense_forward(const float* x, const float* w, float* y,
                   uint32_t n, uint32_t in, uint32_t out) {
#pragma omp parallel for collapse(2) schedule(static)
    for (uint32_t r = 0; r < n; ++r)
        for (uint32_t f = 0; f < out; ++f)
            y[static_cast<std::size_t>(r) * out + f] =
                static_cast<float>(dense_cell(x, w, in, r, f));
}

void dense_backward_input(const float* gy, const float* w, float* gx,
                          uint32_t n, uint32_t in, uint32_t out) {
#pragma omp parallel for schedule(static)
    for (uint32_t r = 0; r < n; ++r)
        for (uint32_t i = 0; i < in; ++i) {
            double acc = 0.0;
            for (uint32_t f = 0; f < out; ++f)
                acc += static_cast<double>(gy[static_cast<std::size_t>(r) * out + f]) *
                       static_cast<double>(w[static_cast<std::size_t>(f) * in + i]);
            gx[static_cast<std::size_t>(r) * in + i] = static_cast<float>(acc);
        }
}

void dense_backward_weight(const float* x, const float* gy, float* gw,
                           uint32_t n, uint32_t in, uint32_t out) {
#pragma omp parallel for collapse(2) schedule(static)
    for (uint32_t f = 0; f < out; ++f)
        for (uint32_t i = 0; i < in; ++i) {
            double acc = 0.0;
            for (uint32_t r = 0; r < n; ++r)
                acc += static_cast<double>(x[static_cast<std::size_t>(r) * in + i]) *
                       static_cast<double>(gy[static_cast<std::size_t>(r) * out + f]);
            gw[static_cast<std::size_t>(f) * in + i] = static_cast<float>(acc);
        }
}

}  // namespace omp

namespace {
std::atomic<int> g_threads{1};
}

void set_num_threads(int threads) {
    if (threads < 1) threads = 1;
    g_threads.store(threads);
#ifdef _OPENMP
    omp_set_num_threads(threads);
#endif
}

int num_threads() { return g_threads.load(); }

bool parallel_enabled() {
#ifdef _OPENMP
    return g_threads.load() > 1;
#else
    return false;
#endif
}

void conv2d_forward(const float* x, const float* w, float* y, const Conv2dShape& s) {
    parallel_enabled() ? omp::conv2d_forward(x, w, y, s) : ref::conv2d_forward(x, w, y, s);
}
void conv2d_backward_input(const float* gy, const float* w, float* gx, const Conv2dShape& s) {
    parallel_enabled() ? omp::conv2d_backward_input(gy, w, gx, s)
                       : ref::conv2d_backward_input(gy, w, gx, s);
}
void conv2d_backward_weight(const float* x, const float* gy, float* gw, const Conv2dShape& s) {
    parallel_enabled() ? omp::conv2d_backward_weight(x, gy, gw, s)
                       : ref::conv2d_backward_weight(x, gy, gw, s);
}
void dense_forward(const float* x, const float* w, float* y,
                   uint32_t n, uint32_t in, uint32_t out) {
    parallel_enabled() ? omp::dense_forward(x, w, y, n, in, out)
                       : ref::dense_forward(x, w, y, n, in, out);
}
void dense_backward_input(const float* gy, const float* w, float* gx,
                          uint32_t n, uint32_t in, uint32_t out) {
    parallel_enabled() ? omp::dense_backward_input(gy, w, gx, n, in, out)
                       : ref::dense_backward_input(gy, w, gx, n, in, out);
}
void dense_backward_weight(const float* x, const float* gy, float* gw,
                           uint32_t n, uint32_t in, uint32_t out) {
    parallel_enabled() ? omp::dense_backward_weight(x, gy, gw, n, in, out)
                       : ref::dense_backward_weight(x, gy, gw, n, in, out);
}

}  // namespace fedmt::kernels
