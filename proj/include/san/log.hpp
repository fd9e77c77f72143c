#pragma once

// Process-wide warning sink. Warnings go to stderr unless silenced and are
// always counted.

#include <cstddef>
#include <string>

namespace san {

void warn(const std::string& msg);
std::size_t warning_count();
void set_warnings_quiet(bool quiet);

}  // namespace san
