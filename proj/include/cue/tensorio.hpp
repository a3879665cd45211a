#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cue/dataset.hpp"
#include "cue/matrix.hpp"

namespace cue::tensorio {

// On-disk layout (all integers and floats little-endian):
//   offset 0   magic "CUET"
//   offset 4   u32 version (= 1)
//   offset 8   u32 rows
//   offset 12  u32 dims
//   offset 16  rows*dims payload elements, row-major
// Float tensors carry f32 payloads; label files reuse the header with dims = 1
// and u32 payloads.
inline constexpr std::array<char, 4> kMagic{'C', 'U', 'E', 'T'};
inline constexpr std::uint32_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 16;

std::vector<char> encode_tensor(const Matrix& m);
Matrix decode_tensor(std::span<const char> bytes);

void write_tensor(const std::filesystem::path& path, const Matrix& m);
Matrix read_tensor(const std::filesystem::path& path);

std::vector<char> encode_labels(std::span<const Label> labels);
std::vector<Label> decode_labels(std::span<const char> bytes);

void write_labels(const std::filesystem::path& path, std::span<const Label> labels);
std::vector<Label> read_labels(const std::filesystem::path& path);

/// JSON manifest tying the three arrays together. Paths are relative to the
/// manifest's own directory.
struct Manifest {
  std::vector<std::string> classes;
  std::string features_path;
  std::string prototypes_path;
  std::string labels_path;
  std::size_t d = 0;
  std::size_t n = 0;
  std::string source;
};

nlohmann::json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& m);

struct LoadedDataset {
  LabeledEmbeddings data;
  Matrix prototypes;
};

/// Reads and cross-validates everything a manifest references.
LoadedDataset load_dataset(const std::filesystem::path& manifest_path);

/// Writes tensors plus a manifest into `dir` using fixed file names.
void save_dataset(const std::filesystem::path& dir, const LabeledEmbeddings& data,
                  const Matrix& prototypes, const std::string& source);

}  // namespace cue::tensorio
