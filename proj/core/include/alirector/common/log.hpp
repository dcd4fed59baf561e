#pragma once

#include <spdlog/spdlog.h>

namespace alirector {

// Library-wide logger; writes to stderr.
spdlog::logger& logger();

}  // namespace alirector
