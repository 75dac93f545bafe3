#include "attnlego/kernels.hpp"

#include <string>

#include "attnlego/errors.hpp"

namespace attnlego::kernels {

namespace {

struct Shape {
    int stack_height = 0;
    int rows = 0;
    int cols = 0;
    int cycles = 0;
};

Shape check_shape(std::span<const MacroStack> tiles, std::span<const int8_t> input, std::span<int64_t> out) {
    if (tiles.empty() || tiles.front().empty())
        throw ShapeError("tiled_mvm: no macros");
    const ApimGeometry& g = tiles.front().front().geometry();
    Shape s{static_cast<int>(tiles.front().size()), g.rows, g.cols, g.mvm_cycles()};
    for (const auto& stack : tiles) {
        if (static_cast<int>(stack.size()) != s.stack_height)
            throw ShapeError("tiled_mvm: ragged stacks");
        for (const auto& m : stack)
            if (!(m.geometry() == g))
                throw ShapeError("tiled_mvm: mixed macro geometries");
    }
    if (static_cast<int64_t>(input.size()) != int64_t{s.stack_height} * s.rows)
        throw ShapeError("tiled_mvm: input length " + std::to_string(input.size()) + " != " +
                         std::to_string(s.stack_height * s.rows));
    if (static_cast<int64_t>(out.size()) != static_cast<int64_t>(tiles.size()) * s.cols)
        throw ShapeError("tiled_mvm: output length mismatch");
    return s;
}

void run_macro(const std::vector<ApimMacro>& stack, int member, const Shape& s, std::span<const int8_t> input,
               std::span<int32_t> scratch) {
    stack[member].mvm_full_into(input.subspan(static_cast<size_t>(member) * s.rows, s.rows), scratch);
}

// Members are summed in index order in both variants.
void reduce(std::span<const int32_t> partials, const Shape& s, size_t tile, std::span<int64_t> out) {
    for (int c = 0; c < s.cols; ++c) {
        int64_t acc = 0;
        for (int m = 0; m < s.stack_height; ++m)
            acc = saturating_accumulate(acc, partials[static_cast<size_t>(m) * s.cols + c], kStackAdderBits);
        out[tile * s.cols + c] = acc;
    }
}

}  // namespace

namespace serial {

int tiled_mvm(std::span<const MacroStack> tiles, std::span<const int8_t> input, std::span<int64_t> out) {
    const Shape s = check_shape(tiles, input, out);
    std::vector<int32_t> partials(static_cast<size_t>(s.stack_height) * s.cols);
    for (size_t t = 0; t < tiles.size(); ++t) {
        for (int m = 0; m < s.stack_height; ++m)
            run_macro(tiles[t], m, s, input, std::span(partials).subspan(static_cast<size_t>(m) * s.cols, s.cols));
        reduce(partials, s, t, out);
    }
    return s.cycles;
}

}  // namespace serial

namespace parallel {

int tiled_mvm(std::span<const MacroStack> tiles, std::span<const int8_t> input, std::span<int64_t> out) {
    const Shape s = check_shape(tiles, input, out);
    const int64_t n_tiles = static_cast<int64_t>(tiles.size());
    const int64_t items = n_tiles * s.stack_height;
    std::vector<int32_t> partials(static_cast<size_t>(items) * s.cols);

#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < items; ++i) {
        const auto t = static_cast<size_t>(i / s.stack_height);
        const int m = static_cast<int>(i % s.stack_height);
        run_macro(tiles[t], m, s, input, std::span(partials).subspan(static_cast<size_t>(i) * s.cols, s.cols));
    }

#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < n_tiles; ++t) {
        const auto offset = static_cast<size_t>(t) * s.stack_height * s.cols;
        reduce(std::span<const int32_t>(partials).subspan(offset, static_cast<size_t>(s.stack_height) * s.cols), s,
               static_cast<size_t>(t), out);
    }
    return s.cycles;
}

}  // namespace parallel

int tiled_mvm(std::span<const MacroStack> tiles, std::span<const int8_t> input, std::span<int64_t> out, Exec exec) {
    return exec == Exec::serial ? serial::tiled_mvm(tiles, input, out) : parallel::tiled_mvm(tiles, input, out);
}

}  // namespace attnlego::kernels
