#pragma once

namespace ragfb {

inline constexpr const char* kPipelineVersion = "1.0.0";

}  // namespace ragfb
