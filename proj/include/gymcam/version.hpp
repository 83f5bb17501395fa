#pragma once

namespace gymcam {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kReportSchema = "gymcam-report/1";

}  // namespace gymcam
