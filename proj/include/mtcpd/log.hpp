#pragma once

#include <string>

namespace mtcpd {

/// Verbosity from MTCPD_LOG: 0 silent, 1 info (default), 2 debug.
int log_level();

void log_info(const std::string& msg);
void log_debug(const std::string& msg);

inline constexpr const char* kCodeVersion = "mtcpd 0.1.0";

}  // namespace mtcpd
