#pragma once

#include <cstdint>
#include <vector>

#include "fedmt/tensor.hpp"

namespace fedmt::kernels {

// Dense compute kernels behind the autodiff graph. Each kernel exists twice:
// the serial reference in kernels::ref and an OpenMP version in kernels::omp.
// The parallel loops never change per-element accumulation order, so both
// variants produce bitwise-identical results; tests assert this.
//
// Inner products accumulate in double and store float32.

struct Conv2dShape {
    uint32_t n, cin, h, w, cout, k;  // same padding, stride 1, k odd
};

namespace ref {

void conv2d_forward(const float* x, const float* w, float* y, const Conv2dShape& s);
void conv2d_backward_input(const float* gy, const float* w, float* gx, const Conv2dShape& s);
void conv2d_backward_weight(const float* x, const float* gy, float* gw, const Conv2dShape& s);

// y[n,f] = sum_i x[n,i] * w[f,i]
void dense_forward(const float* x, const float* w, float* y,
                   uint32_t n, uint32_t in, uint32_t out);
void dense_backward_input(const float* gy, const float* w, float* gx,
                          uint32_t n, uint32_t in, uint32_t out);
void dense_backward_weight(const float* x, const float* gy, float* gw,
                           uint32_t n, uint32_t in, uint32_t out);

// bias per channel over 4-D maps, or per feature over 2-D matrices
void bias_forward_4d(const float* x, const float* b, float* y,
                     uint32_t n, uint32_t c, uint32_t hw);
void bias_backward_4d(const float* gy, float* gb, uint32_t n, uint32_t c, uint32_t hw);
void bias_forward_2d(const float* x, const float* b, float* y, uint32_t n, uint32_t f);
void bias_backward_2d(const float* gy, float* gb, uint32_t n, uint32_t f);

// 2x2 max pool, stride 2; argmax stores the flat input offset per output cell
void maxpool2x2_forward(const float* x, float* y, uint32_t* argmax,
                        uint32_t nc, uint32_t h, uint32_t w);
void maxpool2x2_backward(const float* gy, const uint32_t* argmax, float* gx,
                         uint32_t nc, uint32_t h, uint32_t w);

void relu_forward(const float* x, float* y, std::size_t n);
void relu_backward(const float* x, const float* gy, float* gx, std::size_t n);

void sigmoid_forward(const float* x, float* y, std::size_t n);
void sigmoid_backward(const float* y, const float* gy, float* gx, std::size_t n);

}  // namespace ref

namespace omp {

void conv2d_forward(const float* x, const float* w, float* y, const Conv2dShape& s);
void conv2d_backward_input(const float* gy, const float* w, float* gx, const Conv2dShape& s);
void conv2d_backward_weight(const float* x, const float* gy, float* gw, const Conv2dShape& s);

void dense_forward(const float* x, const float* w, float* y,
                   uint32_t n, uint32_t in, uint32_t out);
void dense_backward_input(const float* gy, const float* w, float* gx,
                          uint32_t n, uint32_t in, uint32_t out);
void dense_backward_weight(const float* x, const float* gy, float* gw,
                           uint32_t n, uint32_t in, uint32_t out);

}  // namespace omp

// Process-wide switch between serial and OpenMP kernels. threads <= 1 selects
// the serial path. Either way results are bitwise identical.
void set_num_threads(int threads);
int num_threads();
bool parallel_enabled();

// Dispatching entry points used by the graph.
void conv2d_forward(const float* x, const float* w, float* y, const Conv2dShape& s);
void conv2d_backward_input(const float* gy, const float* w, float* gx, const Conv2dShape& s);
void conv2d_backward_weight(const float* x, const float* gy, float* gw, const Conv2dShape& s);
void dense_forward(const float* x, const float* w, float* y,
                   uint32_t n, uint32_t in, uint32_t out);
void dense_backward_input(const float* gy, const float* w, float* gx,
                          uint32_t n, uint32_t in, uint32_t out);
void dense_backward_weight(const float* x, const float* gy, float* gw,
                           uint32_t n, uint32_t in, uint32_t out);

}  // namespace fedmt::kernels
