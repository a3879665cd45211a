#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cue {

enum class Errc {
  invalid_argument,
  insufficient_samples,
  io_missing_file,
  io_bad_magic,
  io_version_mismatch,
  io_truncated,
  dimension_mismatch,
  label_out_of_range,
  zero_norm_row,
  non_finite,
  missing_fixture,
  retries_exhausted,
  malformed_payload,
  missing_artifact,
  stale_artifact,
  provider_rejected,
};

std::string_view errc_name(Errc code);

/// Library-wide exception. `code()` distinguishes failure kinds so callers
/// (and the CLI's error JSON) can react without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace cue
