#include "sclood/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <toml.hpp>

#include "sclood/errors.hpp"

namespace sclood {

namespace {

double parse_double(std::string_view key, std::string_view v) {
  double x = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw ConfigError("config key " + std::string(key) + ": expected a number, got \"" + std::string(v) + "\"");
  return x;
}

std::uint64_t parse_uint(std::string_view key, std::string_view v) {
  std::uint64_t x = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("config key " + std::string(key) + ": expected a non-negative integer, got \"" + std::string(v) + "\"");
  return x;
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key " + std::string(key) + ": expected true or false, got \"" + std::string(v) + "\"");
}

std::string node_to_text(const toml::node& node, std::string_view key) {
  if (auto s = node.value<std::string>(); s && node.is_string()) return *s;
  if (node.is_boolean()) return node.value<bool>().value_or(false) ? "true" : "false";
  if (node.is_integer()) return std::to_string(node.value<std::int64_t>().value_or(0));
  if (node.is_floating_point()) return format_double(node.value<double>().value_or(0.0));
  throw ConfigError("config key " + std::string(key) + ": unsupported value type");
}

}  // namespace

double RunConfig::resolved_epsilon() const {
  if (epsilon) return *epsilon;
  return detector.kind == DetectorKind::gda ? 1.5 : 1.0;
}

TrainConfig RunConfig::effective_train_config() const {
  TrainConfig t = train;
  t.adv.epsilon = resolved_epsilon();
  return t;
}

void RunConfig::validate() const {
  effective_train_config().validate();
  if (embed_dim < 1) throw ConfigError("embed_dim must be >= 1");
  if (min_freq < 1) throw ConfigError("min_freq must be >= 1");
  if (detector.lof_k < 1) throw ConfigError("lof_k must be >= 1");
  if (!(detector.msp_threshold > 0.0 && detector.msp_threshold < 1.0)) throw ConfigError("msp_threshold must be in (0, 1)");
  if (run_id.empty() || run_id.find_first_of(",\n\"") != std::string::npos)
    throw ConfigError("run_id must be non-empty and free of commas, quotes and newlines");
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  TrainConfig& t = cfg.train;
  if (key == "dataset") cfg.dataset = std::string(value);
  else if (key == "format") {
    if (value == "clinc") cfg.format = DatasetFormat::clinc;
    else if (value == "jsonl") cfg.format = DatasetFormat::jsonl;
    else throw ConfigError("format must be clinc or jsonl");
  } else if (key == "embeddings") {
    if (value.empty()) cfg.embeddings.reset();
    else cfg.embeddings = std::string(value);
  } else if (key == "embed_dim") cfg.embed_dim = parse_uint(key, value);
  else if (key == "min_freq") cfg.min_freq = parse_uint(key, value);
  else if (key == "output_dir") cfg.output_dir = std::string(value);
  else if (key == "run_id") cfg.run_id = std::string(value);
  else if (key == "detector") cfg.detector.kind = parse_detector_kind(value);
  else if (key == "lof_k") cfg.detector.lof_k = parse_uint(key, value);
  else if (key == "msp_threshold") cfg.detector.msp_threshold = parse_double(key, value);
  else if (key == "gda_ridge") cfg.detector.gda_ridge = parse_double(key, value);
  else if (key == "schedule") t.schedule = parse_schedule(value);
  else if (key == "finetune_loss" || key == "loss") t.finetune_loss = parse_finetune_loss(value);
  else if (key == "scl_epochs") t.scl_epochs = parse_uint(key, value);
  else if (key == "finetune_epochs") t.finetune_epochs = parse_uint(key, value);
  else if (key == "patience") t.patience = parse_uint(key, value);
  else if (key == "batch_size") t.batch_size = parse_uint(key, value);
  else if (key == "seed") t.seed = parse_uint(key, value);
  else if (key == "learning_rate") t.learning_rate = parse_double(key, value);
  else if (key == "hidden_dim") t.hidden_dim = parse_uint(key, value);
  else if (key == "rep_dim") t.rep_dim = parse_uint(key, value);
  else if (key == "tau_ce") t.loss.tau_ce = parse_double(key, value);
  else if (key == "tau_scl") t.loss.tau_scl = parse_double(key, value);
  else if (key == "margin" || key == "margin_m") t.loss.margin_m = parse_double(key, value);
  else if (key == "scl_weight") t.loss.scl_weight = parse_double(key, value);
  else if (key == "epsilon") cfg.epsilon = parse_double(key, value);
  else if (key == "adversarial") t.adv.enabled = parse_bool(key, value);
  else if (key == "adv_views_as_anchors") t.adv.adv_views_as_anchors = parse_bool(key, value);
  else if (key == "adversarial_in_finetune") t.adversarial_in_finetune = parse_bool(key, value);
  else if (key == "data_fraction") t.data_fraction = parse_double(key, value);
  else throw ConfigError("unknown config key \"" + std::string(key) + "\"");
}

RunConfig parse_run_config(std::string_view toml_text) {
  toml::table table;
  try {
    table = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "invalid TOML: " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(msg.str());
  }
  RunConfig cfg;
  for (const auto& [key, node] : table) apply_setting(cfg, key.str(), node_to_text(node, key.str()));
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& toml_path) {
  std::ifstream in(toml_path);
  if (!in) throw ConfigError("cannot open config " + toml_path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig cfg = parse_run_config(ss.str());
  // Relative paths inside the file are relative to the file.
  const auto base = toml_path.parent_path();
  if (!cfg.dataset.empty() && cfg.dataset.is_relative()) cfg.dataset = base / cfg.dataset;
  if (cfg.embeddings && cfg.embeddings->is_relative()) cfg.embeddings = base / *cfg.embeddings;
  return cfg;
}

DatasetBundle load_dataset(const RunConfig& cfg) {
  if (cfg.dataset.empty()) throw ConfigError("no dataset configured");
  if (!std::filesystem::exists(cfg.dataset)) throw DataError("dataset not found: " + cfg.dataset.string());
  return cfg.format == DatasetFormat::clinc ? load_clinc(cfg.dataset) : load_jsonl_dir(cfg.dataset);
}

EmbeddingTable make_embeddings(const RunConfig& cfg, const Vocab& vocab) {
  return load_embeddings(cfg.embeddings, vocab, cfg.embed_dim, Rng(cfg.train.seed).derive(2).seed());
}

ExperimentResult run_experiment(const RunConfig& cfg, const DatasetBundle& bundle) {
  cfg.validate();
  ExperimentResult r;
  r.data = prepare_data(bundle, cfg.min_freq);
  const EmbeddingTable emb = make_embeddings(cfg, r.data.vocab);
  r.model = train(cfg.effective_train_config(), r.data, emb);
  r.detector = fit_detector(r.model, r.data, cfg.detector);
  r.metrics = evaluate(r.model, r.detector, r.data.test, r.data.num_classes());
  return r;
}

std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string metrics_csv_header() {
  return "run_id,schedule,loss,detector,epsilon,batch_size,rep_dim,data_fraction,seed,ind_acc,ind_f1,ood_recall,ood_f1";
}

std::string metrics_csv_row(const RunConfig& cfg, const MetricsReport& m) {
  const TrainConfig t = cfg.effective_train_config();
  std::ostringstream row;
  row << cfg.run_id << ',' << to_string(t.schedule) << ',' << to_string(t.finetune_loss) << ','
      << to_string(cfg.detector.kind) << ',' << format_double(t.adv.active() ? t.adv.epsilon : 0.0) << ','
      << t.batch_size << ',' << t.rep_dim << ',' << format_double(t.data_fraction) << ',' << t.seed << ','
      << format_double(m.ind_accuracy) << ',' << format_double(m.ind_macro_f1) << ',' << format_double(m.ood_recall)
      << ',' << format_double(m.ood_f1);
  return row.str();
}

}  // namespace sclood
