#include <gtest/gtest.h>

#include <json.hpp>

#include <algorithm>
#include <set>

#include "scratch_dir.hpp"
#include "sclood/corpus.hpp"
#include "sclood/errors.hpp"
#include "sclood/synthetic.hpp"

using namespace sclood;
using nlohmann::json;

namespace {

json pairs(const std::string& prefix, std::size_t classes, std::size_t per, bool ood = false) {
  json out = json::array();
  for (std::size_t c = 0; c < classes; ++c)
    for (std::size_t i = 0; i < per; ++i)
      out.push_back({prefix + " text " + std::to_string(c) + " " + std::to_string(i),
                     ood ? std::string("oos") : "intent_" + std::to_string(c)});
  return out;
}

json clinc_doc(std::size_t classes, std::size_t train_per) {
  return {{"train", pairs("train", classes, train_per)}, {"val", pairs("val", classes, 2)},
          {"test", pairs("test", classes, 3)},           {"oos_train", pairs("oos train", 1, 4, true)},
          {"oos_val", pairs("oos val", 1, 5, true)},     {"oos_test", pairs("oos test", 1, 6, true)}};
}

std::vector<LabeledUtterance> rows(std::initializer_list<const char*> texts) {
  std::vector<LabeledUtterance> out;
  for (const char* t : texts) out.push_back({t, "x"});
  return out;
}

}  // namespace

TEST(LoadClinc, SplitsAndSizes) {
  ScratchDir dir;
  const auto b = load_clinc(dir.write("data.json", clinc_doc(3, 10).dump()));
  EXPECT_EQ(b.train_ind.size(), 30u);
  EXPECT_EQ(b.discarded_ood_train, 4u);
  EXPECT_EQ(b.dev.size(), 6u + 5u);
  EXPECT_EQ(b.test.size(), 9u + 6u);
  EXPECT_EQ(b.label_set, (std::vector<std::string>{"intent_0", "intent_1", "intent_2"}));
  for (const auto& u : b.train_ind) EXPECT_FALSE(u.is_ood());
  const auto s = split_sizes(b);
  EXPECT_EQ(s.train, 34u);
  EXPECT_EQ(s.dev, 11u);
  EXPECT_EQ(s.test, 15u);
  EXPECT_EQ(s.num_intents, 3u);
}

TEST(LoadClinc, MissingKeyIsNamed) {
  ScratchDir dir;
  auto doc = clinc_doc(2, 3);
  doc.erase("oos_val");
  try {
    load_clinc(dir.write("data.json", doc.dump()));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("oos_val"), std::string::npos);
  }
}

TEST(LoadClinc, MalformedPairNamesRow) {
  ScratchDir dir;
  auto doc = clinc_doc(2, 3);
  doc["test"][4] = json::array({"only text"});
  try {
    load_clinc(dir.write("data.json", doc.dump()));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("4"), std::string::npos) << e.what();
  }
}

TEST(LoadClinc, EmptyTrainIsAnError) {
  ScratchDir dir;
  auto doc = clinc_doc(2, 3);
  doc["train"] = json::array();
  EXPECT_THROW(load_clinc(dir.write("data.json", doc.dump())), DataError);
}

TEST(LoadClinc, UnknownEvaluationIntentIsAnError) {
  ScratchDir dir;
  auto doc = clinc_doc(2, 3);
  doc["test"].push_back({"something new", "never_trained"});
  EXPECT_THROW(load_clinc(dir.write("data.json", doc.dump())), DataError);
}

TEST(LoadClinc, MissingFileIsADataError) {
  EXPECT_THROW(load_clinc("/nonexistent/clinc.json"), DataError);
}

TEST(Jsonl, RoundTrip) {
  ScratchDir dir;
  const std::vector<LabeledUtterance> in{{"book a \"table\"", "restaurant"}, {"what is ünïcode", "oos"}};
  write_jsonl(dir / "rows.jsonl", in);
  const auto out = read_jsonl(dir / "rows.jsonl");
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].text, in[0].text);
  EXPECT_EQ(out[1].label, "oos");
}

TEST(Jsonl, BadLineIsAnError) {
  ScratchDir dir;
  EXPECT_THROW(read_jsonl(dir.write("rows.jsonl", "{\"text\": \"a\", \"label\": \"b\"}\n{\"text\": 3}\n")), DataError);
  EXPECT_THROW(read_jsonl(dir.write("rows2.jsonl", "not json\n")), DataError);
}

TEST(Jsonl, DirectoryDropsOodTrainingRows) {
  ScratchDir dir;
  write_jsonl(dir / "train.jsonl", {{"a b", "x"}, {"c d", "oos"}});
  write_jsonl(dir / "dev.jsonl", {{"a b", "x"}});
  write_jsonl(dir / "test.jsonl", {{"a b", "x"}});
  const auto b = load_jsonl_dir(dir.path());
  EXPECT_EQ(b.train_ind.size(), 1u);
  EXPECT_EQ(b.discarded_ood_train, 1u);
}

TEST(BuildVocab, FrequencyThenAlphabetical) {
  const Vocab v = build_vocab(rows({"a b", "a c"}), 1);
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"<oov>", "a", "b", "c"}));
  EXPECT_EQ(v.index_of("a"), 1u);
  EXPECT_EQ(v.index_of("zzz"), Vocab::kOov);
}

TEST(BuildVocab, MinFrequency) {
  const Vocab v = build_vocab(rows({"a b", "a c"}), 2);
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"<oov>", "a"}));
}

TEST(BuildVocab, Deduplicates) { EXPECT_EQ(build_vocab(rows({"x x x"}), 1).size(), 2u); }

TEST(BuildVocab, CaseFoldingAndEmptyCorpus) {
  const Vocab v = build_vocab(rows({"Hello hello HELLO"}), 1);
  EXPECT_EQ(v.size(), 2u);
  EXPECT_EQ(v.encode("HeLLo world"), (std::vector<std::size_t>{1, Vocab::kOov}));
  EXPECT_THROW(build_vocab({}, 1), DataError);
}

TEST(BuildVocab, IndicesAreDense) {
  const auto b = generate_synthetic(SyntheticSpec{});
  const Vocab v = build_vocab(b.train_ind, 1);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v.index_of(v.token(i)), i);
}

TEST(LoadEmbeddings, RandomInitRangeAndDeterminism) {
  const Vocab v = build_vocab(rows({"a b c d e"}), 1);
  const auto t1 = load_embeddings(std::nullopt, v, 8, 42), t2 = load_embeddings(std::nullopt, v, 8, 42);
  ASSERT_EQ(t1.vectors.rows, v.size());
  EXPECT_EQ(t1.vectors, t2.vectors);
  for (double x : t1.vectors.data) {
    EXPECT_GE(x, -0.0625);
    EXPECT_LE(x, 0.0625);
  }
  EXPECT_FALSE(load_embeddings(std::nullopt, v, 8, 43).vectors == t1.vectors);
}

TEST(LoadEmbeddings, FileRowsPassThrough) {
  ScratchDir dir;
  const Vocab v = build_vocab(rows({"a b"}), 1);
  const std::vector<WordVector> words{{"a", {0.1, -2.5, 3e-7}}, {"b", {1.0 / 3.0, 0.0, -1e10}}, {"unused", {1, 2, 3}}};
  write_word_vectors(dir / "vec.txt", words);
  const auto t = load_embeddings(dir / "vec.txt", v, 3, 0);
  for (std::size_t d = 0; d < 3; ++d) {
    EXPECT_EQ(t.vectors(v.index_of("a"), d), words[0].vector[d]);
    EXPECT_EQ(t.vectors(v.index_of("b"), d), words[1].vector[d]);
    EXPECT_LE(std::abs(t.vectors(Vocab::kOov, d)), 0.5 / 3);
  }
}

TEST(LoadEmbeddings, WrongFloatCountNamesLine) {
  ScratchDir dir;
  const Vocab v = build_vocab(rows({"a b"}), 1);
  const auto p = dir.write("vec.txt", "a 0.1 0.2 0.3\nb 0.1 0.2\n");
  try {
    load_embeddings(p, v, 3, 0);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(MakeBatches, PartitionSizes) {
  const auto b = make_batches(10, 4, 7);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_EQ(b[0].size(), 4u);
  EXPECT_EQ(b[1].size(), 4u);
  EXPECT_EQ(b[2].size(), 2u);
  std::set<std::size_t> all;
  for (const auto& batch : b) all.insert(batch.begin(), batch.end());
  EXPECT_EQ(all.size(), 10u);
}

TEST(MakeBatches, SeededOrder) {
  EXPECT_EQ(make_batches(37, 5, 3), make_batches(37, 5, 3));
  EXPECT_NE(make_batches(37, 5, 3), make_batches(37, 5, 4));
}

TEST(MakeBatches, BatchSizeOneIsAnError) { EXPECT_THROW(make_batches(10, 1, 0), ConfigError); }

TEST(EncodeSplit, LabelsAndOodMarker) {
  DatasetBundle b;
  b.train_ind = {{"a b", "y"}, {"c", "x"}};
  b.dev = {{"a", "x"}, {"zzz", "oos"}};
  b.test = b.dev;
  finalize_bundle(b);
  const Vocab v = build_vocab(b.train_ind, 1);
  const auto s = encode_split(b.dev, v, b);
  EXPECT_EQ(s.labels, (std::vector<int>{0, -1}));
  EXPECT_EQ(s.tokens[1], (std::vector<std::size_t>{Vocab::kOov}));
  EXPECT_EQ(s.ind_only().size(), 1u);
}

TEST(Synthetic, ShapeAndDeterminism) {
  SyntheticSpec spec;
  const auto a = generate_synthetic(spec), b = generate_synthetic(spec);
  EXPECT_EQ(a.label_set.size(), 10u);
  EXPECT_EQ(a.train_ind.size(), 1000u);
  EXPECT_EQ(a.dev.size(), 10u * 20 + 3 * 20);
  EXPECT_EQ(a.test.size(), 10u * 30 + 3 * 50);
  ASSERT_EQ(a.test.size(), b.test.size());
  for (std::size_t i = 0; i < a.test.size(); ++i) EXPECT_EQ(a.test[i].text, b.test[i].text);
  std::set<std::string> words;
  for (const auto& u : a.train_ind)
    for (const auto& t : tokenize(u.text)) words.insert(t);
  EXPECT_LE(words.size(), synthetic_lexicon().size());
  EXPECT_EQ(synthetic_lexicon().size(), 40u);
}

TEST(Synthetic, WordVectorsCoverLexicon) {
  SyntheticSpec spec;
  const auto v = synthetic_word_vectors(spec);
  ASSERT_EQ(v.size(), 40u);
  for (const auto& w : v) EXPECT_EQ(w.vector.size(), spec.embed_dim);
  EXPECT_EQ(synthetic_word_vectors(spec)[5].vector, v[5].vector);
}
