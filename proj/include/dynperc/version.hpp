#pragma once

namespace dynperc {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kArtifactName = "dynperc";

}  // namespace dynperc
