// Serial vs OpenMP tiled MVM over a paper-default projection bank.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <random>
#include <vector>

#include <omp.h>

#include "attnlego/kernels.hpp"

using namespace attnlego;

namespace {

double time_runs(const std::vector<kernels::MacroStack>& tiles, const std::vector<int8_t>& x, std::vector<int64_t>& out,
                 kernels::Exec exec, int reps) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < reps; ++i)
        kernels::tiled_mvm(tiles, x, out, exec);
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / reps;
}

}  // namespace

int main(int argc, char** argv) {
    const bool smoke = argc > 1 && std::strcmp(argv[1], "--smoke") == 0;
    const int d_model = smoke ? 512 : 4096;
    const int reps = smoke ? 3 : 50;
    const ApimGeometry g{128, 128, 16, 16};

    std::mt19937 rng(7);
    std::uniform_int_distribution<int> dist(-128, 127);
    const int members = d_model / g.rows;
    std::vector<kernels::MacroStack> tiles(1, kernels::MacroStack(members, ApimMacro(g, AdcConfig{})));
    for (auto& m : tiles[0])
        for (int r = 0; r < g.rows; ++r)
            for (int c = 0; c < g.cols; ++c)
                m.write_cell(r, c, static_cast<int8_t>(dist(rng)));
    std::vector<int8_t> x(d_model);
    for (auto& v : x)
        v = static_cast<int8_t>(dist(rng));

    std::vector<int64_t> serial_out(g.cols), parallel_out(g.cols);
    const double ts = time_runs(tiles, x, serial_out, kernels::Exec::serial, reps);
    const double tp = time_runs(tiles, x, parallel_out, kernels::Exec::parallel, reps);
    const bool same = serial_out == parallel_out;

    std::printf("threads %d  d_model %d  reps %d\n", omp_get_max_threads(), d_model, reps);
    std::printf("serial   %.3f ms\nparallel %.3f ms\nspeedup  %.2fx\nidentical %s\n", ts * 1e3, tp * 1e3, ts / tp,
                same ? "yes" : "no");
    return same ? 0 : 1;
}
