#pragma once

namespace eden {
inline constexpr const char* kVersion = "0.1.0";
}
