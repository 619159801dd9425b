#pragma once

namespace qmemsim {
inline constexpr const char* kVersion = "0.1.0";
}
