#pragma once

#include <spdlog/logger.h>

namespace claimnorm {

/// Shared logger writing timestamped lines to stderr, so stdout stays
/// byte-stable.
spdlog::logger& log();

}  // namespace claimnorm
