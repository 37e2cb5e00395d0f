#include "sclood/synthetic.hpp"

#include <array>
#include <cstdio>

#include "sclood/errors.hpp"
#include "sclood/numerics.hpp"

namespace sclood {

namespace {

constexpr std::array<const char*, 10> kFillers = {"please", "can", "you", "i", "want", "to", "the", "my", "a", "now"};
constexpr std::array<const char*, 4> kVerbs = {"check", "set", "find", "tell"};
constexpr std::array<std::array<const char*, 2>, 10> kIntentWords = {{{"balance", "account"},
                                                                      {"transfer", "money"},
                                                                      {"weather", "forecast"},
                                                                      {"alarm", "wake"},
                                                                      {"music", "song"},
                                                                      {"flight", "book"},
                                                                      {"recipe", "cook"},
                                                                      {"timer", "minutes"},
                                                                      {"traffic", "route"},
                                                                      {"translate", "language"}}};
constexpr std::array<std::array<const char*, 2>, 3> kOodWords = {{{"insurance", "claim"},
                                                                  {"pet", "vet"},
                                                                  {"poem", "rhyme"}}};

std::string intent_name(std::size_t c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "intent_%02zu", c);
  return buf;
}

template <std::size_t N>
const char* pick(const std::array<const char*, N>& words, Rng& rng) {
  return words[rng.index(N)];
}

std::string join(const std::vector<const char*>& words) {
  std::string s;
  for (const char* w : words) {
    if (!s.empty()) s.push_back(' ');
    s += w;
  }
  return s;
}

std::string ind_utterance(std::size_t cls, const SyntheticSpec& spec, Rng& rng) {
  const std::size_t len = spec.min_length + rng.index(spec.max_length - spec.min_length + 1);
  std::vector<const char*> words;
  words.push_back(rng.uniform(0.0, 1.0) < 0.7 ? kVerbs[cls % kVerbs.size()] : pick(kVerbs, rng));
  const std::size_t forced = 1 + rng.index(len - 1);
  for (std::size_t pos = 1; pos < len; ++pos) {
    const double r = rng.uniform(0.0, 1.0);
    if (pos == forced || r >= spec.filler_rate + spec.confusion_rate) {
      words.push_back(pick(kIntentWords[cls], rng));
    } else if (r < spec.filler_rate) {
      words.push_back(pick(kFillers, rng));
    } else {
      std::size_t other = rng.index(spec.ind_classes - 1);
      if (other >= cls) ++other;
      words.push_back(pick(kIntentWords[other], rng));
    }
  }
  return join(words);
}

// OOD cluster o mixes its own unseen words with keywords of two IND intents.
std::string ood_utterance(std::size_t cluster, const SyntheticSpec& spec, Rng& rng) {
  const std::size_t len = spec.min_length + rng.index(spec.max_length - spec.min_length + 1);
  const std::size_t a = (3 * cluster) % spec.ind_classes;
  const std::size_t b = (3 * cluster + 1) % spec.ind_classes;
  std::vector<const char*> words;
  words.push_back(pick(kVerbs, rng));
  const std::size_t forced = 1 + rng.index(len - 1);
  for (std::size_t pos = 1; pos < len; ++pos) {
    const double r = rng.uniform(0.0, 1.0);
    if (pos == forced || r < 0.3) {
      words.push_back(pick(kOodWords[cluster], rng));
    } else if (r < 0.3 + spec.filler_rate) {
      words.push_back(pick(kFillers, rng));
    } else {
      words.push_back(pick(kIntentWords[rng.uniform(0.0, 1.0) < 0.5 ? a : b], rng));
    }
  }
  return join(words);
}

}  // namespace

const std::vector<std::string>& synthetic_lexicon() {
  static const std::vector<std::string> lexicon = [] {
    std::vector<std::string> w;
    for (const char* f : kFillers) w.emplace_back(f);
    for (const char* v : kVerbs) w.emplace_back(v);
    for (const auto& pair : kIntentWords)
      for (const char* x : pair) w.emplace_back(x);
    for (const auto& pair : kOodWords)
      for (const char* x : pair) w.emplace_back(x);
    return w;
  }();
  return lexicon;
}

DatasetBundle generate_synthetic(const SyntheticSpec& spec) {
  if (spec.ind_classes < 2 || spec.ind_classes > kIntentWords.size())
    throw ConfigError("synthetic benchmark supports 2.." + std::to_string(kIntentWords.size()) + " IND intents");
  if (spec.ood_clusters > kOodWords.size())
    throw ConfigError("synthetic benchmark supports at most " + std::to_string(kOodWords.size()) + " OOD clusters");
  if (spec.min_length < 2 || spec.max_length < spec.min_length) throw ConfigError("synthetic utterance lengths invalid");
  if (spec.train_per_class < 2) throw ConfigError("synthetic train_per_class must be >= 2");
  if (spec.filler_rate < 0.0 || spec.confusion_rate < 0.0 || spec.filler_rate + spec.confusion_rate > 1.0)
    throw ConfigError("synthetic filler/confusion rates invalid");

  const Rng root(spec.seed);
  DatasetBundle bundle;
  const auto fill_ind = [&](std::vector<LabeledUtterance>& out, std::size_t per_class, std::uint64_t stream) {
    Rng rng = root.derive(stream);
    for (std::size_t c = 0; c < spec.ind_classes; ++c)
      for (std::size_t i = 0; i < per_class; ++i) out.push_back({ind_utterance(c, spec, rng), intent_name(c)});
  };
  const auto fill_ood = [&](std::vector<LabeledUtterance>& out, std::size_t per_cluster, std::uint64_t stream) {
    Rng rng = root.derive(stream);
    for (std::size_t o = 0; o < spec.ood_clusters; ++o)
      for (std::size_t i = 0; i < per_cluster; ++i)
        out.push_back({ood_utterance(o, spec, rng), std::string(kOodLabel)});
  };
  fill_ind(bundle.train_ind, spec.train_per_class, 1);
  fill_ind(bundle.dev, spec.dev_per_class, 2);
  fill_ood(bundle.dev, spec.dev_ood_per_cluster, 3);
  fill_ind(bundle.test, spec.test_per_class, 4);
  fill_ood(bundle.test, spec.test_ood_per_cluster, 5);
  finalize_bundle(bundle);
  return bundle;
}

std::vector<WordVector> synthetic_word_vectors(const SyntheticSpec& spec) {
  if (spec.embed_dim == 0 || !(spec.embed_scale > 0.0)) throw ConfigError("synthetic embeddings need dim >= 1 and scale > 0");
  Rng rng = Rng(spec.seed).derive(6);
  std::vector<WordVector> out;
  for (const auto& w : synthetic_lexicon()) {
    WordVector wv{w, Vec(spec.embed_dim)};
    for (double& x : wv.vector) x = rng.normal(0.0, spec.embed_scale);
    out.push_back(std::move(wv));
  }
  return out;
}

}  // namespace sclood
