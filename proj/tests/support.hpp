#pragma once

#include <doctest.h>

#include <filesystem>
#include <random>
#include <string>

#include "cue/error.hpp"

namespace cue::test {

/// Runs `fn` and returns the code of the cue::Error it throws.
inline Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected cue::Error");
  return Errc::invalid_argument;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("cue_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace cue::test
