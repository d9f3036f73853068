#pragma once

namespace survalid {
inline constexpr const char* kVersion = "0.1.0";
}
