#include "san/log.hpp"

#include <atomic>
#include <iostream>

namespace san {

namespace {
std::atomic<std::size_t> g_count{0};
std::atomic<bool> g_quiet{false};
}  // namespace

void warn(const std::string& msg) {
    ++g_count;
    if (!g_quiet) std::cerr << "warning: " << msg << '\n';
}

std::size_t warning_count() { return g_count; }

void set_warnings_quiet(bool quiet) { g_quiet = quiet; }

}  // namespace san
