#include "cue/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "cue/error.hpp"

namespace cue::synthetic {
namespace {

LabeledEmbeddings sample_split(const Matrix& centers, std::size_t per_class, double noise,
                               const std::vector<Matrix>& nuisance_dirs,
                               const std::vector<std::size_t>& cluster_of, double nuisance,
                               std::mt19937_64& rng, const std::vector<std::string>& names) {
  const std::size_t C = centers.rows(), D = centers.cols();
  std::normal_distribution<double> gauss(0.0, noise);
  std::normal_distribution<double> shared(0.0, nuisance);
  LabeledEmbeddings out;
  out.class_names = names;
  out.features = Matrix(C * per_class, D);
  out.labels.resize(C * per_class);
  // interleave classes so row order carries no label information
  for (std::size_t j = 0; j < per_class; ++j) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t r = j * C + c;
      out.labels[r] = static_cast<Label>(c);
      auto row = out.features.row(r);
      for (std::size_t k = 0; k < D; ++k) row[k] = static_cast<float>(centers(c, k) + gauss(rng));
      if (nuisance > 0.0) {
        const auto& dirs = nuisance_dirs[cluster_of[c]];
        for (std::size_t j = 0; j < dirs.rows(); ++j) {
          const double a = shared(rng);
          for (std::size_t k = 0; k < D; ++k) row[k] += static_cast<float>(a * dirs(j, k));
        }
      }
    }
  }
  return out;
}

}  // namespace

Mixture make_mixture(const MixtureSpec& spec) {
  if (spec.num_classes < 2 || spec.clusters == 0 || spec.clusters > spec.num_classes ||
      spec.dim == 0) {
    throw Error(Errc::invalid_argument, "mixture needs C >= 2, D >= 1 and 1 <= clusters <= C");
  }
  const std::size_t C = spec.num_classes, D = spec.dim;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> unit(0.0, 1.0);

  Matrix cluster_centers(spec.clusters, D);
  for (auto& v : cluster_centers.data()) v = static_cast<float>(spec.cluster_spread * unit(rng));

  Mixture m;
  m.class_centers = Matrix(C, D);
  m.cluster_of.resize(C);
  std::vector<std::string> names(C);
  for (std::size_t c = 0; c < C; ++c) {
    const std::size_t g = c % spec.clusters;
    m.cluster_of[c] = g;
    names[c] = "group" + std::to_string(g) + "_class" + std::to_string(c);
    for (std::size_t k = 0; k < D; ++k) {
      m.class_centers(c, k) = static_cast<float>(cluster_centers(g, k) + spec.class_spread * unit(rng));
    }
  }

  m.prototypes = Matrix(C, D);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t k = 0; k < D; ++k) {
      m.prototypes(c, k) = static_cast<float>(m.class_centers(c, k) + spec.prototype_noise * unit(rng));
    }
  }

  std::vector<Matrix> nuisance_dirs(spec.clusters, Matrix(spec.nuisance_rank, D));
  for (auto& dirs : nuisance_dirs) {
    for (std::size_t j = 0; j < dirs.rows(); ++j) {
      double sq = 0.0;
      for (auto& v : dirs.row(j)) {
        v = static_cast<float>(unit(rng));
        sq += static_cast<double>(v) * v;
      }
      for (auto& v : dirs.row(j)) v = static_cast<float>(v / std::sqrt(sq));
    }
  }

  m.pool = sample_split(m.class_centers, spec.pool_per_class, spec.noise, nuisance_dirs,
                        m.cluster_of, spec.nuisance, rng, names);
  m.test = sample_split(m.class_centers, spec.test_per_class, spec.noise, nuisance_dirs,
                        m.cluster_of, spec.nuisance, rng, names);

  m.cluster_graph.neighbors.resize(C);
  for (std::size_t c = 0; c < C; ++c) {
    for (std::size_t o = 0; o < C; ++o) {
      if (o != c && m.cluster_of[o] == m.cluster_of[c]) m.cluster_graph.neighbors[c].push_back(o);
    }
  }
  m.cluster_graph.meta.provider = "synthetic";
  m.cluster_graph.meta.model_id = "cluster-membership";
  return m;
}

MixtureSpec benchmark_spec(std::uint64_t seed) {
  MixtureSpec s;
  s.cluster_spread = 1.5;
  s.class_spread = 0.5;
  s.noise = 1.0;
  s.prototype_noise = 0.5;
  s.nuisance = 4.0;
  s.seed = seed;
  return s;
}

std::string fake_llm_reply(const Mixture& m, const std::vector<std::string>& batch) {
  const auto& names = m.pool.class_names;
  nlohmann::ordered_json obj = nlohmann::ordered_json::object();
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto it = std::find(names.begin(), names.end(), batch[b]);
    if (it == names.end()) continue;
    const auto c = static_cast<std::size_t>(it - names.begin());
    auto list = nlohmann::ordered_json::array();
    for (auto nb : m.cluster_graph.neighbors[c]) list.push_back(names[nb]);
    if (b % 3 == 0 && !list.empty()) {
      std::string shouty = list[0].get<std::string>();
      std::transform(shouty.begin(), shouty.end(), shouty.begin(), ::toupper);
      list.push_back(" " + shouty + " ");  // duplicate after normalization
    }
    if (b % 4 == 1) list.push_back(batch[b]);            // self-reference
    if (b % 5 == 2) list.push_back("unlisted category");  // out of vocabulary
    obj[batch[b]] = list;
  }
  std::ostringstream os;
  os << "Here are the semantic neighbors you asked for:\n```json\n" << obj.dump(2) << "\n```\n";
  return os.str();
}

}  // namespace cue::synthetic
