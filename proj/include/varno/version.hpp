#pragma once

namespace varno {

inline constexpr const char* kLibraryName = "varno";
inline constexpr const char* kLibraryVersion = "0.1.0";

}  // namespace varno
