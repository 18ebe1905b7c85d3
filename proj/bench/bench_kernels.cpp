// Timing comparison of the serial reference kernels against the OpenMP
// versions. Not a test; run manually: build/bench/bench_kernels [threads]
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <vector>

#include "fedmt/kernels.hpp"
#include "fedmt/rng.hpp"

using namespace fedmt;
using Clock = std::chrono::steady_clock;

namespace {

std::vector<float> random_vec(Rng& rng, std::size_t n) {
    std::vector<float> v(n);
    for (float& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return v;
}

template <typename F>
double time_ms(F&& f, int reps) {
    f();  // warm up
    const auto t0 = Clock::now();
    for (int i = 0; i < reps; ++i) f();
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count() / reps;
}

void report(const char* name, double serial_ms, double parallel_ms) {
    std::printf("%-24s serial %8.2f ms   parallel %8.2f ms   speedup %.2fx\n", name,
                serial_ms, parallel_ms, serial_ms / parallel_ms);
}

}  // namespace

int main(int argc, char** argv) {
    const int threads = argc > 1 ? std::atoi(argv[1]) : 4;
    Rng rng(1);

    const kernels::Conv2dShape shape{16, 8, 32, 32, 16, 3};
    const std::size_t in_n = 16ull * 8 * 32 * 32;
    const std::size_t w_n = 16ull * 8 * 3 * 3;
    const std::size_t out_n = 16ull * 16 * 32 * 32;
    std::vector<float> input = random_vec(rng, in_n);
    std::vector<float> weight = random_vec(rng, w_n);
    std::vector<float> out(out_n);
    std::vector<float> out_grad = random_vec(rng, out_n);
    std::vector<float> in_grad(in_n);
    std::vector<float> w_grad(w_n);

    const uint32_t dn = 256, din = 2048, dout = 512;
    std::vector<float> dx = random_vec(rng, dn * din);
    std::vector<float> dw = random_vec(rng, static_cast<std::size_t>(dout) * din);
    std::vector<float> dy(static_cast<std::size_t>(dn) * dout);
    std::vector<float> dyg = random_vec(rng, static_cast<std::size_t>(dn) * dout);
    std::vector<float> dxg(dx.size());
    std::vector<float> dwg(dw.size());

    struct Row {
        const char* name;
        std::function<void()> serial;
        std::function<void()> parallel;
        int reps;
    };
    const std::vector<Row> rows = {
        {"conv2d forward",
         [&] { kernels::ref::conv2d_forward(input.data(), weight.data(), out.data(), shape); },
         [&] { kernels::omp::conv2d_forward(input.data(), weight.data(), out.data(), shape); },
         5},
        {"conv2d backward input",
         [&] {
             kernels::ref::conv2d_backward_input(out_grad.data(), weight.data(),
                                                 in_grad.data(), shape);
         },
         [&] {
             kernels::omp::conv2d_backward_input(out_grad.data(), weight.data(),
                                                 in_grad.data(), shape);
         },
         5},
        {"conv2d backward weight",
         [&] {
             kernels::ref::conv2d_backward_weight(input.data(), out_grad.data(),
                                                  w_grad.data(), shape);
         },
         [&] {
             kernels::omp::conv2d_backward_weight(input.data(), out_grad.data(),
                                                  w_grad.data(), shape);
         },
         5},
        {"dense forward",
         [&] { kernels::ref::dense_forward(dx.data(), dw.data(), dy.data(), dn, din, dout); },
         [&] { kernels::omp::dense_forward(dx.data(), dw.data(), dy.data(), dn, din, dout); },
         10},
        {"dense backward input",
         [&] {
             kernels::ref::dense_backward_input(dyg.data(), dw.data(), dxg.data(), dn, din,
                                                dout);
         },
         [&] {
             kernels::omp::dense_backward_input(dyg.data(), dw.data(), dxg.data(), dn, din,
                                                dout);
         },
         10},
        {"dense backward weight",
         [&] {
             kernels::ref::dense_backward_weight(dx.data(), dyg.data(), dwg.data(), dn, din,
                                                 dout);
         },
         [&] {
             kernels::omp::dense_backward_weight(dx.data(), dyg.data(), dwg.data(), dn, din,
                                                 dout);
         },
         10},
    };

    std::printf("threads: %d (parallel kernels %s)\n", threads,
                kernels::parallel_enabled() || threads > 1 ? "available" : "disabled");
    for (const Row& row : rows) {
        const double serial_ms = time_ms(row.serial, row.reps);
        kernels::set_num_threads(threads);
        const double parallel_ms = time_ms(row.parallel, row.reps);
        kernels::set_num_threads(1);
        report(row.name, serial_ms, parallel_ms);
    }
    return 0;
}
