#pragma once

#include <span>
#include <string>
#include <string_view>

namespace cue {

/// Lowercase hex SHA-256 of `bytes`.
std::string sha256_hex(std::string_view bytes);

/// Hash of a file's full contents; throws io_missing_file if unreadable.
std::string sha256_file(const std::string& path);

}  // namespace cue
