#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cue/cues.hpp"
#include "cue/error.hpp"
#include "cue/trainer.hpp"

namespace cue::cli {

/// Everything a pipeline command reads. Relative paths resolve against
/// `base_dir` (the config file's directory, or the working directory).
struct RunConfig {
  std::string manifest;       // training pool
  std::string test_manifest;  // balanced test set
  std::string run_root = "runs";
  double ir = 100.0;
  std::size_t n_max = 500;
  std::uint64_t seed = 0;
  std::size_t k = 5;
  CueMode mode = CueMode::top;
  std::string provider = "fixture";
  std::string fixture_dir = "fixtures";
  std::size_t batch_size = 20;
  std::size_t max_neighbors = 5;
  std::size_t concurrency = 1;
  std::string llm_endpoint;
  std::string llm_model;
  int llm_max_retries = 3;
  TrainConfig train;  // train.seed is ignored; `seed` drives everything
  double sigma = 0.1;
  std::vector<std::uint64_t> ablation_seeds{0, 1, 2};
  std::vector<double> sweep_grid{0.0, 0.25, 0.5, 0.75, 1.0};

  std::filesystem::path base_dir;  // not serialized

  void validate() const;
  TrainConfig train_config() const;
  std::filesystem::path resolve(const std::string& p) const;
};

nlohmann::json to_json(const RunConfig& c);
/// Unknown keys are rejected so typos fail loudly.
RunConfig run_config_from_json(const nlohmann::json& j);

/// First 12 hex digits of the SHA-256 of the serialized config.
std::string config_hash(const RunConfig& c);

/// Raised when a command's input is absent. Carries the producing command.
class MissingArtifact : public Error {
 public:
  MissingArtifact(const std::filesystem::path& path, std::string producer);
  const std::string& path() const noexcept { return path_; }
  const std::string& producer() const noexcept { return producer_; }

 private:
  std::string path_;
  std::string producer_;
};

/// Grid CSV: header row of lambda_llm values, one row per lambda_zs value.
/// Absent cells are empty.
using Grid = std::vector<std::vector<std::optional<double>>>;
std::string grid_csv(const std::vector<double>& axis, const Grid& values);
Grid parse_grid_csv(const std::string& text);

/// Entry point shared by the `cue` binary and in-process tests. Prints one
/// JSON result line to `out`; human-readable tables go to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cue::cli
