// Compares the serial reference kernels against the OpenMP variants on
// representative layer shapes and checks the outputs stay bit-identical.

#include <omp.h>

#include <cstdio>
#include <random>
#include <vector>

#include "smartflow/nn.hpp"

using smartflow::nn::ExecMode;
using smartflow::nn::Matrix;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix m(r, c);
    for (double& v : m.data) v = dist(rng);
    return m;
}

struct Shape {
    std::size_t batch, in, out;
};

void run_case(const Shape& s, int reps) {
    std::mt19937_64 rng(7);
    const Matrix x = random_matrix(s.batch, s.in, rng);
    const Matrix w = random_matrix(s.out, s.in, rng);
    std::vector<double> b(s.out, 0.1);
    const Matrix dy = random_matrix(s.batch, s.out, rng);

    Matrix y_serial, y_omp, dw_s, dw_p, dx_s, dx_p;
    std::vector<double> db_s, db_p;

    double t0 = omp_get_wtime();
    for (int k = 0; k < reps; ++k) {
        smartflow::nn::kernels::affine_forward(x, w, b, y_serial, ExecMode::Serial);
        smartflow::nn::kernels::affine_backward(x, w, dy, dw_s, db_s, dx_s, ExecMode::Serial);
    }
    double serial_s = omp_get_wtime() - t0;

    t0 = omp_get_wtime();
    for (int k = 0; k < reps; ++k) {
        smartflow::nn::kernels::affine_forward(x, w, b, y_omp, ExecMode::Parallel);
        smartflow::nn::kernels::affine_backward(x, w, dy, dw_p, db_p, dx_p, ExecMode::Parallel);
    }
    double parallel_s = omp_get_wtime() - t0;

    const bool identical = y_serial == y_omp && dw_s == dw_p && db_s == db_p && dx_s == dx_p;
    const double flops = 6.0 * s.batch * s.in * s.out * reps;
    std::printf("%4zu x %4zu -> %4zu  serial %7.3f s (%6.2f GF/s)  omp %7.3f s (%6.2f GF/s)"
                "  speedup %4.2fx  bit-identical %s\n",
                s.batch, s.in, s.out, serial_s, flops / serial_s * 1e-9, parallel_s,
                flops / parallel_s * 1e-9, serial_s / parallel_s, identical ? "yes" : "NO");
}

}  // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());
    run_case({64, 31, 128}, 2000);
    run_case({64, 128, 128}, 2000);
    run_case({64, 128, 870}, 400);
    run_case({256, 128, 128}, 1000);
    run_case({1, 31, 128}, 20000);
    return 0;
}
