#include "claimnorm/log.h"

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

namespace claimnorm {

spdlog::logger& log() {
  static const std::shared_ptr<spdlog::logger> logger = [] {
    auto l = std::make_shared<spdlog::logger>("claimnorm", std::make_shared<spdlog::sinks::stderr_sink_mt>());
    l->set_pattern("[%Y-%m-%dT%H:%M:%S.%e] [%l] %v");
    return l;
  }();
  return *logger;
}

}  // namespace claimnorm
