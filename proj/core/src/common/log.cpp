#include "alirector/common/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

namespace alirector {

spdlog::logger& logger() {
  static auto instance = [] {
    auto log = spdlog::stderr_color_mt("alirector");
    log->set_pattern("[%H:%M:%S] [%^%l%$] %v");
    return log;
  }();
  return *instance;
}

}  // namespace alirector
