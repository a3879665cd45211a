#include "cue/tensorio.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <unordered_set>

#include "cue/error.hpp"

namespace cue::tensorio {
namespace {

void put_u32(std::vector<char>& out, std::uint32_t v) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<char>((v >> shift) & 0xff));
}

std::uint32_t get_u32(std::span<const char> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return v;
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffULL) {
    throw Error(Errc::invalid_argument, std::string(what) + " does not fit in 32 bits");
  }
  return static_cast<std::uint32_t>(v);
}

std::vector<char> header(std::size_t rows, std::size_t dims) {
  std::vector<char> out(kMagic.begin(), kMagic.end());
  out.reserve(kHeaderBytes + rows * dims * 4);
  put_u32(out, kVersion);
  put_u32(out, checked_u32(rows, "rows"));
  put_u32(out, checked_u32(dims, "dims"));
  return out;
}

struct Header {
  std::uint32_t rows;
  std::uint32_t dims;
};

Header parse_header(std::span<const char> bytes) {
  if (bytes.size() < kHeaderBytes) {
    if (bytes.size() >= 4 && !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
      throw Error(Errc::io_bad_magic, "bad magic");
    }
    throw Error(Errc::io_truncated, "file shorter than the 16-byte header");
  }
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw Error(Errc::io_bad_magic, "bad magic, expected CUET");
  }
  const auto version = get_u32(bytes, 4);
  if (version != kVersion) {
    throw Error(Errc::io_version_mismatch, "unsupported version " + std::to_string(version));
  }
  Header h{get_u32(bytes, 8), get_u32(bytes, 12)};
  const std::uint64_t payload = std::uint64_t{h.rows} * h.dims * 4;
  if (bytes.size() - kHeaderBytes < payload) {
    throw Error(Errc::io_truncated, "payload holds " + std::to_string(bytes.size() - kHeaderBytes) +
                                        " bytes, header declares " + std::to_string(payload));
  }
  return h;
}

std::vector<char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_missing_file, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void dump(const std::filesystem::path& path, const std::vector<char>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_missing_file, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io_missing_file, "short write to " + path.string());
}

}  // namespace

std::vector<char> encode_tensor(const Matrix& m) {
  auto out = header(m.rows(), m.cols());
  for (float v : m.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

Matrix decode_tensor(std::span<const char> bytes) {
  const auto h = parse_header(bytes);
  std::vector<float> data(std::size_t{h.rows} * h.dims);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::bit_cast<float>(get_u32(bytes, kHeaderBytes + 4 * i));
  }
  return Matrix(h.rows, h.dims, std::move(data));
}

void write_tensor(const std::filesystem::path& path, const Matrix& m) { dump(path, encode_tensor(m)); }

Matrix read_tensor(const std::filesystem::path& path) { return decode_tensor(slurp(path)); }

std::vector<char> encode_labels(std::span<const Label> labels) {
  auto out = header(labels.size(), 1);
  for (auto y : labels) put_u32(out, y);
  return out;
}

std::vector<Label> decode_labels(std::span<const char> bytes) {
  const auto h = parse_header(bytes);
  if (h.dims != 1) {
    throw Error(Errc::dimension_mismatch, "label file must have dims = 1, has " +
                                              std::to_string(h.dims));
  }
  std::vector<Label> labels(h.rows);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = get_u32(bytes, kHeaderBytes + 4 * i);
  return labels;
}

void write_labels(const std::filesystem::path& path, std::span<const Label> labels) {
  dump(path, encode_labels(labels));
}

std::vector<Label> read_labels(const std::filesystem::path& path) {
  return decode_labels(slurp(path));
}

nlohmann::json to_json(const Manifest& m) {
  return {{"classes", m.classes},           {"features_path", m.features_path},
          {"prototypes_path", m.prototypes_path}, {"labels_path", m.labels_path},
          {"d", m.d},                       {"n", m.n},
          {"source", m.source}};
}

Manifest manifest_from_json(const nlohmann::json& j) {
  Manifest m;
  m.classes = j.at("classes").get<std::vector<std::string>>();
  m.features_path = j.at("features_path").get<std::string>();
  m.prototypes_path = j.at("prototypes_path").get<std::string>();
  m.labels_path = j.at("labels_path").get<std::string>();
  m.d = j.at("d").get<std::size_t>();
  m.n = j.at("n").get<std::size_t>();
  m.source = j.value("source", "");
  return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  try {
    return manifest_from_json(nlohmann::json::parse(bytes.begin(), bytes.end()));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::malformed_payload, "manifest " + path.string() + ": " + e.what());
  }
}

void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  const auto text = to_json(m).dump(2) + "\n";
  dump(path, std::vector<char>(text.begin(), text.end()));
}

LoadedDataset load_dataset(const std::filesystem::path& manifest_path) {
  const auto m = read_manifest(manifest_path);
  const auto base = manifest_path.parent_path();
  const auto require = [&](const std::string& rel) {
    auto p = base / rel;
    if (!std::filesystem::exists(p)) {
      throw Error(Errc::io_missing_file, "manifest references missing file " + p.string());
    }
    return p;
  };

  LoadedDataset out;
  out.data.class_names = m.classes;
  out.data.features = read_tensor(require(m.features_path));
  out.prototypes = read_tensor(require(m.prototypes_path));
  out.data.labels = read_labels(require(m.labels_path));

  const auto C = m.classes.size();
  if (out.prototypes.rows() != C) {
    throw Error(Errc::dimension_mismatch, "prototypes have " + std::to_string(out.prototypes.rows()) +
                                              " rows but manifest lists " + std::to_string(C) +
                                              " classes");
  }
  if (out.prototypes.cols() != m.d) {
    throw Error(Errc::dimension_mismatch, "prototype dims " + std::to_string(out.prototypes.cols()) +
                                              " != manifest d " + std::to_string(m.d));
  }
  if (out.data.features.cols() != m.d) {
    throw Error(Errc::dimension_mismatch, "feature dims " +
                                              std::to_string(out.data.features.cols()) +
                                              " != manifest d " + std::to_string(m.d));
  }
  if (out.data.features.rows() != m.n || out.data.labels.size() != m.n) {
    throw Error(Errc::dimension_mismatch, "manifest n = " + std::to_string(m.n) + " but features have " +
                                              std::to_string(out.data.features.rows()) +
                                              " rows and labels " +
                                              std::to_string(out.data.labels.size()));
  }
  out.data.validate();
  return out;
}

void save_dataset(const std::filesystem::path& dir, const LabeledEmbeddings& data,
                  const Matrix& prototypes, const std::string& source) {
  std::filesystem::create_directories(dir);
  Manifest m;
  m.classes = data.class_names;
  m.features_path = "features.cuet";
  m.prototypes_path = "prototypes.cuet";
  m.labels_path = "labels.cuet";
  m.d = data.dim();
  m.n = data.size();
  m.source = source;
  write_tensor(dir / m.features_path, data.features);
  write_tensor(dir / m.prototypes_path, prototypes);
  write_labels(dir / m.labels_path, data.labels);
  write_manifest(dir / "manifest.json", m);
}

}  // namespace cue::tensorio
