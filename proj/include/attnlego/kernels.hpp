#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "attnlego/pim_macro.hpp"

namespace attnlego::kernels {

enum class Exec { serial, parallel };

/// Vertical stack of macros sharing output columns; member m consumes input
/// rows [m*rows, (m+1)*rows).
using MacroStack = std::vector<ApimMacro>;

/// Width of the adder that sums per-macro results down a stack.
inline constexpr int kStackAdderBits = 32;

/// Runs every stack of `tiles` against the same input and writes the
/// stack sums side by side: out[t*cols + c]. All macros share a geometry.
/// Returns the per-macro cycle count (macros run concurrently).
int tiled_mvm(std::span<const MacroStack> tiles, std::span<const int8_t> input, std::span<int64_t> out,
              Exec exec = Exec::parallel);

namespace serial {
int tiled_mvm(std::span<const MacroStack> tiles, std::span<const int8_t> input, std::span<int64_t> out);
}

namespace parallel {
int tiled_mvm(std::span<const MacroStack> tiles, std::span<const int8_t> input, std::span<int64_t> out);
}

}  // namespace attnlego::kernels
