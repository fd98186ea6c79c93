#pragma once

namespace gridtrade {

// Kernels that have a data-parallel inner loop come in two flavours: the
// serial reference and an OpenMP version. Both must produce bit-identical
// results; tests compare them directly.
enum class Execution { Serial, Parallel };

bool openmp_enabled() noexcept;
int max_threads() noexcept;

} // namespace gridtrade
