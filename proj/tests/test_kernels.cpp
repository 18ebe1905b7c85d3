#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fedmt/kernels.hpp"
#include "fedmt/rng.hpp"

using namespace fedmt;
using kernels::Conv2dShape;

namespace {

std::vector<float> random_vec(std::size_t n, Rng& rng) {
    std::vector<float> v(n);
    for (float& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
    return v;
}

}  // namespace

TEST_CASE("OpenMP conv kernels are bitwise identical to the serial reference") {
    Rng rng(1);
    kernels::set_num_threads(4);
    for (int trial = 0; trial < 5; ++trial) {
        Conv2dShape s{static_cast<uint32_t>(1 + rng.index(3)),
                      static_cast<uint32_t>(1 + rng.index(4)),
                      static_cast<uint32_t>(4 + 2 * rng.index(5)),
                      static_cast<uint32_t>(4 + 2 * rng.index(5)),
                      static_cast<uint32_t>(1 + rng.index(5)),
                      rng.uniform() < 0.5 ? 3u : 5u};
        const std::size_t xs = static_cast<std::size_t>(s.n) * s.cin * s.h * s.w;
        const std::size_t ws = static_cast<std::size_t>(s.cout) * s.cin * s.k * s.k;
        const std::size_t ys = static_cast<std::size_t>(s.n) * s.cout * s.h * s.w;
        auto x = random_vec(xs, rng);
        auto w = random_vec(ws, rng);
        auto gy = random_vec(ys, rng);

        std::vector<float> a(ys), b(ys);
        kernels::ref::conv2d_forward(x.data(), w.data(), a.data(), s);
        kernels::omp::conv2d_forward(x.data(), w.data(), b.data(), s);
        CHECK(a == b);

        std::vector<float> ga(xs), gb(xs);
        kernels::ref::conv2d_backward_input(gy.data(), w.data(), ga.data(), s);
        kernels::omp::conv2d_backward_input(gy.data(), w.data(), gb.data(), s);
        CHECK(ga == gb);

        std::vector<float> wa(ws), wb(ws);
        kernels::ref::conv2d_backward_weight(x.data(), gy.data(), wa.data(), s);
        kernels::omp::conv2d_backward_weight(x.data(), gy.data(), wb.data(), s);
        CHECK(wa == wb);
    }
    kernels::set_num_threads(1);
}

TEST_CASE("OpenMP dense kernels are bitwise identical to the serial reference") {
    Rng rng(2);
    kernels::set_num_threads(4);
    for (int trial = 0; trial < 5; ++trial) {
        const uint32_t n = static_cast<uint32_t>(1 + rng.index(8));
        const uint32_t in = static_cast<uint32_t>(1 + rng.index(40));
        const uint32_t out = static_cast<uint32_t>(1 + rng.index(16));
        auto x = random_vec(static_cast<std::size_t>(n) * in, rng);
        auto w = random_vec(static_cast<std::size_t>(out) * in, rng);
        auto gy = random_vec(static_cast<std::size_t>(n) * out, rng);

        std::vector<float> a(static_cast<std::size_t>(n) * out), b(a.size());
        kernels::ref::dense_forward(x.data(), w.data(), a.data(), n, in, out);
        kernels::omp::dense_forward(x.data(), w.data(), b.data(), n, in, out);
        CHECK(a == b);

        std::vector<float> ga(x.size()), gb(x.size());
        kernels::ref::dense_backward_input(gy.data(), w.data(), ga.data(), n, in, out);
        kernels::omp::dense_backward_input(gy.data(), w.data(), gb.data(), n, in, out);
        CHECK(ga == gb);

        std::vector<float> wa(w.size()), wb(w.size());
        kernels::ref::dense_backward_weight(x.data(), gy.data(), wa.data(), n, in, out);
        kernels::omp::dense_backward_weight(x.data(), gy.data(), wb.data(), n, in, out);
        CHECK(wa == wb);
    }
    kernels::set_num_threads(1);
}
