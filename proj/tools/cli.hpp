#pragma once

#include <iosfwd>

namespace woodgeom::cli {

/// Exit codes: 0 success, 1 validation failure (bad flags, rejected input),
/// 2 I/O failure (missing or unreadable input, unwritable output).
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace woodgeom::cli
