#include "cue/error.hpp"

namespace cue {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::insufficient_samples: return "insufficient_samples";
    case Errc::io_missing_file: return "missing_file";
    case Errc::io_bad_magic: return "bad_magic";
    case Errc::io_version_mismatch: return "version_mismatch";
    case Errc::io_truncated: return "truncated";
    case Errc::dimension_mismatch: return "dimension_mismatch";
    case Errc::label_out_of_range: return "label_out_of_range";
    case Errc::zero_norm_row: return "zero_norm_row";
    case Errc::non_finite: return "non_finite";
    case Errc::missing_fixture: return "missing_fixture";
    case Errc::retries_exhausted: return "retries_exhausted";
    case Errc::malformed_payload: return "malformed_payload";
    case Errc::missing_artifact: return "missing_artifact";
    case Errc::stale_artifact: return "stale_artifact";
    case Errc::provider_rejected: return "provider_rejected";
  }
  return "unknown";
}

}  // namespace cue
