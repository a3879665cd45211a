#pragma once

#include <cstdint>
#include <vector>

#include "cue/dataset.hpp"
#include "cue/matrix.hpp"
#include "cue/neighbors.hpp"

namespace cue::synthetic {

/// Gaussian mixture with a two-level class hierarchy: classes belong to
/// semantic clusters whose centers are far apart, while class centers inside
/// a cluster sit close together. Class c belongs to cluster c % clusters, so
/// every cluster spans head and tail positions of the long-tail profile.
struct MixtureSpec {
  std::size_t num_classes = 20;
  std::size_t dim = 32;
  std::size_t clusters = 5;
  double cluster_spread = 6.0;   // std-dev of cluster centers around the origin
  double class_spread = 1.0;     // std-dev of class centers around their cluster center
  double noise = 1.0;            // per-coordinate sample noise
  double prototype_noise = 0.5;  // per-coordinate noise on the zero-shot prototypes
  /// Cluster-shared variation: each cluster owns `nuisance_rank` random unit
  /// directions along which all of its classes vary with this std-dev.
  double nuisance = 0.0;
  std::size_t nuisance_rank = 4;
  std::size_t pool_per_class = 500;
  std::size_t test_per_class = 100;
  std::uint64_t seed = 0;
};

struct Mixture {
  LabeledEmbeddings pool;  // balanced, pool_per_class rows per class
  LabeledEmbeddings test;  // balanced, test_per_class rows per class
  Matrix prototypes;       // noisy class centers, C x dim
  Matrix class_centers;
  std::vector<std::size_t> cluster_of;
  NeighborGraph cluster_graph;  // N(c) = other members of c's cluster
};

Mixture make_mixture(const MixtureSpec& spec);

/// The confusion benchmark: 20 classes in 32-d, 5 clusters, with
/// cluster-shared nuisance variation that tail classes cannot learn to
/// ignore from a handful of samples.
MixtureSpec benchmark_spec(std::uint64_t seed);

/// A canned LLM reply for `batch` built from cluster membership, with the
/// stray artifacts real replies carry (prose wrapper, case/whitespace noise,
/// a self-reference, a duplicate, an out-of-vocabulary name).
std::string fake_llm_reply(const Mixture& m, const std::vector<std::string>& batch);

}  // namespace cue::synthetic
