#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sclood/corpus.hpp"

namespace sclood {

/// Desk-scale intent benchmark: IND intent clusters and held-out OOD
/// clusters drawn from a fixed 40-word template grammar.
struct SyntheticSpec {
  std::size_t ind_classes = 10;
  std::size_t ood_clusters = 3;
  std::size_t train_per_class = 100;
  std::size_t dev_per_class = 20;
  std::size_t test_per_class = 30;
  std::size_t dev_ood_per_cluster = 20;
  std::size_t test_ood_per_cluster = 50;
  std::size_t min_length = 4;
  std::size_t max_length = 8;
  // Per-token probability of a word from another intent's keyword set.
  double confusion_rate = 0.25;
  // Per-token probability of a filler word.
  double filler_rate = 0.35;
  std::uint64_t seed = 2021;
  // Shipped word vectors: i.i.d. N(0, scale^2) per component. 0.4 puts
  // token norms in the range of 300-d GloVe vectors, the scale the default
  // perturbation norms were chosen for.
  std::size_t embed_dim = 64;
  double embed_scale = 0.4;
};

/// The grammar's 40 words.
const std::vector<std::string>& synthetic_lexicon();

DatasetBundle generate_synthetic(const SyntheticSpec& spec);

/// "Pretrained" vectors for every lexicon word, seeded from spec.seed.
std::vector<WordVector> synthetic_word_vectors(const SyntheticSpec& spec);

}  // namespace sclood
