#pragma once

#include <string_view>

namespace uacep {

// Data-parallel kernels come in two flavours: a serial reference and an
// OpenMP version. Both compute every output element with the same
// arithmetic in the same order, so results are bitwise identical.
enum class Backend { serial, openmp };

Backend parse_backend(std::string_view name);
int openmp_max_threads();

}  // namespace uacep
