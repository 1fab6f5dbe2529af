#pragma once

#include <string>

namespace stochlift::internal {

/// Rethrows the active stochlift exception with `prefix` prepended to its
/// message, keeping its type. Must be called from inside a catch block.
[[noreturn]] void RethrowWithContext(const std::string& prefix);

}  // namespace stochlift::internal
