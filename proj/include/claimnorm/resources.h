#pragma once

#include <optional>
#include <string_view>
#include <vector>

// Text resources compiled into the library from data/ at build time.
namespace claimnorm::resources {

/// Looks up an embedded resource by its path relative to data/
/// (e.g. "verbs.txt", "templates/cacn.txt").
std::optional<std::string_view> find(std::string_view name);

std::vector<std::string_view> names();

}  // namespace claimnorm::resources
