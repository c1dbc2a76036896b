#pragma once

namespace fidcurve {

inline constexpr const char kVersion[] = "1.0.0";

}  // namespace fidcurve
