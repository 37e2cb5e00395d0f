#include "sclood/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sclood/errors.hpp"

namespace sclood {

namespace {

using json = nlohmann::json;

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

LabeledUtterance make_utterance(std::string text, std::string label, const std::string& where) {
  if (trim(text).empty()) throw DataError(where + ": empty text");
  if (label.empty()) throw DataError(where + ": empty label");
  return {std::move(text), std::move(label)};
}

std::vector<LabeledUtterance> read_clinc_split(const json& doc, const std::string& key, bool force_ood) {
  if (!doc.contains(key)) throw DataError("CLINC file is missing key \"" + key + "\"");
  const json& rows = doc.at(key);
  if (!rows.is_array()) throw DataError("CLINC key \"" + key + "\" is not a list");
  std::vector<LabeledUtterance> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const json& pair = rows[i];
    const std::string where = "CLINC " + key + " row " + std::to_string(i);
    if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string())
      throw DataError(where + ": expected a [text, label] pair");
    std::string label = pair[1].get<std::string>();
    if (force_ood) label = std::string(kOodLabel);
    out.push_back(make_utterance(pair[0].get<std::string>(), std::move(label), where));
  }
  return out;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": invalid JSON: " + e.what());
  }
}

}  // namespace

int DatasetBundle::label_index(std::string_view label) const {
  if (label == kOodLabel) return -1;
  auto it = std::lower_bound(label_set.begin(), label_set.end(), label);
  if (it == label_set.end() || *it != label) throw DataError("label \"" + std::string(label) + "\" is not a training intent");
  return static_cast<int>(it - label_set.begin());
}

SplitSizes split_sizes(const DatasetBundle& bundle) {
  return {bundle.train_ind.size() + bundle.discarded_ood_train, bundle.dev.size(), bundle.test.size(),
          bundle.label_set.size()};
}

void finalize_bundle(DatasetBundle& bundle) {
  if (bundle.train_ind.empty()) throw DataError("training split is empty");
  std::set<std::string> labels;
  for (const auto& u : bundle.train_ind) {
    if (u.is_ood()) throw DataError("training split contains an OOD row");
    labels.insert(u.label);
  }
  bundle.label_set.assign(labels.begin(), labels.end());
  for (const auto* split : {&bundle.dev, &bundle.test})
    for (const auto& u : *split)
      if (!u.is_ood() && !labels.contains(u.label))
        throw DataError("evaluation label \"" + u.label + "\" does not occur in training data");
}

DatasetBundle load_clinc(const std::filesystem::path& path) {
  const json doc = read_json_file(path);
  if (!doc.is_object()) throw DataError(path.string() + ": top level must be an object");
  DatasetBundle bundle;
  bundle.train_ind = read_clinc_split(doc, "train", false);
  auto val = read_clinc_split(doc, "val", false);
  auto test = read_clinc_split(doc, "test", false);
  bundle.discarded_ood_train = read_clinc_split(doc, "oos_train", true).size();
  auto oos_val = read_clinc_split(doc, "oos_val", true);
  auto oos_test = read_clinc_split(doc, "oos_test", true);

  // The IND lists never legitimately carry "oos"; move any such rows aside.
  const auto is_ood = [](const LabeledUtterance& u) { return u.is_ood(); };
  bundle.discarded_ood_train += static_cast<std::size_t>(std::count_if(bundle.train_ind.begin(), bundle.train_ind.end(), is_ood));
  std::erase_if(bundle.train_ind, is_ood);

  bundle.dev = std::move(val);
  bundle.dev.insert(bundle.dev.end(), oos_val.begin(), oos_val.end());
  bundle.test = std::move(test);
  bundle.test.insert(bundle.test.end(), oos_test.begin(), oos_test.end());
  finalize_bundle(bundle);
  return bundle;
}

std::vector<LabeledUtterance> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<LabeledUtterance> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = path.filename().string() + " line " + std::to_string(lineno);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + ": invalid JSON: " + e.what());
    }
    if (!obj.is_object() || !obj.contains("text") || !obj.contains("label") || !obj["text"].is_string() ||
        !obj["label"].is_string())
      throw DataError(where + ": expected {\"text\": string, \"label\": string}");
    rows.push_back(make_utterance(obj["text"].get<std::string>(), obj["label"].get<std::string>(), where));
  }
  return rows;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<LabeledUtterance>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& u : rows) out << json{{"text", u.text}, {"label", u.label}}.dump() << '\n';
}

DatasetBundle load_jsonl_dir(const std::filesystem::path& dir) {
  DatasetBundle bundle;
  bundle.train_ind = read_jsonl(dir / "train.jsonl");
  const auto is_ood = [](const LabeledUtterance& u) { return u.is_ood(); };
  bundle.discarded_ood_train = static_cast<std::size_t>(std::count_if(bundle.train_ind.begin(), bundle.train_ind.end(), is_ood));
  std::erase_if(bundle.train_ind, is_ood);
  bundle.dev = read_jsonl(dir / "dev.jsonl");
  bundle.test = read_jsonl(dir / "test.jsonl");
  finalize_bundle(bundle);
  return bundle;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

Vocab::Vocab() : Vocab(std::vector<std::string>{}) {}

Vocab::Vocab(std::vector<std::string> tokens_after_oov) {
  tokens_.reserve(tokens_after_oov.size() + 1);
  tokens_.emplace_back(kOovToken);
  for (auto& t : tokens_after_oov) {
    if (t == kOovToken || index_.contains(t)) throw DataError("Vocab: duplicate or reserved token \"" + t + "\"");
    index_.emplace(t, tokens_.size());
    tokens_.push_back(std::move(t));
  }
}

std::size_t Vocab::index_of(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kOov : it->second;
}

std::vector<std::size_t> Vocab::encode(std::string_view text) const {
  std::vector<std::size_t> ids;
  for (const auto& t : tokenize(text)) ids.push_back(index_of(t));
  if (ids.empty()) ids.push_back(kOov);
  return ids;
}

Vocab build_vocab(const std::vector<LabeledUtterance>& utterances, std::size_t min_freq) {
  if (min_freq < 1) throw ConfigError("build_vocab: min_freq must be >= 1");
  if (utterances.empty()) throw DataError("build_vocab: empty corpus");
  std::map<std::string, std::size_t> freq;
  for (const auto& u : utterances)
    for (auto& t : tokenize(u.text)) ++freq[std::move(t)];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : freq)
    if (n >= min_freq && tok != Vocab::kOovToken) kept.emplace_back(tok, n);
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [tok, n] : kept) tokens.push_back(tok);
  return Vocab(std::move(tokens));
}

void write_word_vectors(const std::filesystem::path& path, const std::vector<WordVector>& vectors) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  char buf[64];
  for (const auto& wv : vectors) {
    out << wv.word;
    for (double v : wv.vector) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
      out << ' ' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing " + path.string());
}

EmbeddingTable load_embeddings(const std::optional<std::filesystem::path>& path, const Vocab& vocab,
                               std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw ConfigError("load_embeddings: dim must be positive");
  EmbeddingTable table{Matrix(vocab.size(), dim)};
  Rng rng(seed);
  const double bound = 0.5 / static_cast<double>(dim);
  for (double& x : table.vectors.data) x = rng.uniform(-bound, bound);
  if (!path) return table;

  std::ifstream in(*path);
  if (!in) throw DataError("cannot open embeddings file " + path->string());
  std::string line;
  std::size_t lineno = 0;
  Vec values;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string word;
    if (!(ss >> word)) continue;
    values.clear();
    std::string field;
    while (ss >> field) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size())
        throw DataError(path->string() + " line " + std::to_string(lineno) + ": bad float \"" + field + "\"");
      values.push_back(v);
    }
    if (values.size() != dim)
      throw DataError(path->string() + " line " + std::to_string(lineno) + ": expected " + std::to_string(dim) +
                      " floats, found " + std::to_string(values.size()));
    const std::size_t idx = vocab.index_of(word);
    if (idx == Vocab::kOov) continue;
    std::copy(values.begin(), values.end(), table.vectors.row(idx).begin());
  }
  return table;
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, std::uint64_t seed) {
  if (batch_size < 2) throw ConfigError("make_batches: batch_size must be >= 2");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size)
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(n, start + batch_size)));
  return batches;
}

EncodedSplit EncodedSplit::subset(const std::vector<std::size_t>& indices) const {
  EncodedSplit out;
  for (std::size_t i : indices) {
    out.tokens.push_back(tokens.at(i));
    out.labels.push_back(labels.at(i));
  }
  return out;
}

EncodedSplit EncodedSplit::ind_only() const {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] >= 0) keep.push_back(i);
  return subset(keep);
}

EncodedSplit encode_split(const std::vector<LabeledUtterance>& rows, const Vocab& vocab, const DatasetBundle& bundle) {
  EncodedSplit out;
  out.tokens.reserve(rows.size());
  out.labels.reserve(rows.size());
  for (const auto& u : rows) {
    out.tokens.push_back(vocab.encode(u.text));
    out.labels.push_back(bundle.label_index(u.label));
  }
  return out;
}

}  // namespace sclood
