#include "sclood/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sclood/errors.hpp"

namespace sclood {

namespace {

using json = nlohmann::json;

json config_to_json(const RunConfig& c) {
  const TrainConfig& t = c.train;
  json j;
  j["dataset"] = c.dataset.string();
  j["format"] = c.format == DatasetFormat::clinc ? "clinc" : "jsonl";
  j["embeddings"] = c.embeddings ? c.embeddings->string() : "";
  j["embed_dim"] = c.embed_dim;
  j["min_freq"] = c.min_freq;
  j["output_dir"] = c.output_dir.string();
  j["run_id"] = c.run_id;
  j["detector"] = std::string(to_string(c.detector.kind));
  j["lof_k"] = c.detector.lof_k;
  j["msp_threshold"] = c.detector.msp_threshold;
  if (c.detector.gda_ridge) j["gda_ridge"] = *c.detector.gda_ridge;
  j["schedule"] = std::string(to_string(t.schedule));
  j["finetune_loss"] = std::string(to_string(t.finetune_loss));
  j["scl_epochs"] = t.scl_epochs;
  j["finetune_epochs"] = t.finetune_epochs;
  j["patience"] = t.patience;
  j["batch_size"] = t.batch_size;
  j["seed"] = t.seed;
  j["learning_rate"] = t.learning_rate;
  j["hidden_dim"] = t.hidden_dim;
  j["rep_dim"] = t.rep_dim;
  j["tau_ce"] = t.loss.tau_ce;
  j["tau_scl"] = t.loss.tau_scl;
  j["margin_m"] = t.loss.margin_m;
  j["scl_weight"] = t.loss.scl_weight;
  if (c.epsilon) j["epsilon"] = *c.epsilon;
  j["adversarial"] = t.adv.enabled;
  j["adv_views_as_anchors"] = t.adv.adv_views_as_anchors;
  j["adversarial_in_finetune"] = t.adversarial_in_finetune;
  j["data_fraction"] = t.data_fraction;
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  for (const auto& [key, value] : j.items()) {
    std::string text;
    if (value.is_string()) text = value.get<std::string>();
    else if (value.is_boolean()) text = value.get<bool>() ? "true" : "false";
    else if (value.is_number_unsigned()) text = std::to_string(value.get<std::uint64_t>());
    else if (value.is_number_integer()) text = std::to_string(value.get<std::int64_t>());
    else if (value.is_number_float()) text = format_double(value.get<double>());
    else throw DataError("checkpoint config key " + key + " has an unsupported type");
    apply_setting(c, key, text);
  }
  return c;
}

json matrix_to_json(const Matrix& m) { return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}}; }

Matrix matrix_from_json(const json& j, const std::string& name) {
  Matrix m;
  try {
    m.rows = j.at("rows").get<std::size_t>();
    m.cols = j.at("cols").get<std::size_t>();
    m.data = j.at("data").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw DataError("checkpoint tensor " + name + ": " + e.what());
  }
  if (m.data.size() != m.rows * m.cols) throw DataError("checkpoint tensor " + name + ": data length does not match shape");
  return m;
}

json vec_to_json(const Vec& v) { return json{{"rows", 1}, {"cols", v.size()}, {"data", v}}; }

Vec vec_from_json(const json& j, const std::string& name) { return matrix_from_json(j, name).data; }

json detector_to_json(const DetectorModel& d) {
  json j;
  j["kind"] = std::string(to_string(kind_of(d)));
  if (const auto* msp = std::get_if<MspModel>(&d)) {
    j["threshold"] = msp->threshold;
  } else if (const auto* lof = std::get_if<LofModel>(&d)) {
    j["k"] = lof->k;
    j["reference"] = matrix_to_json(lof->reference);
    j["k_distance"] = lof->k_distance;
    j["lrd"] = lof->lrd;
    if (lof->threshold) j["threshold"] = *lof->threshold;
  } else {
    const auto& gda = std::get<GdaModel>(d);
    j["class_means"] = matrix_to_json(gda.class_means);
    j["shared_covariance"] = matrix_to_json(gda.shared_covariance);
    j["precision"] = matrix_to_json(gda.precision);
    if (gda.threshold) j["threshold"] = *gda.threshold;
  }
  return j;
}

DetectorModel detector_from_json(const json& j) {
  const DetectorKind kind = parse_detector_kind(j.at("kind").get<std::string>());
  std::optional<double> threshold;
  if (j.contains("threshold")) threshold = j.at("threshold").get<double>();
  switch (kind) {
    case DetectorKind::msp: return MspModel{threshold.value_or(0.5)};
    case DetectorKind::lof: {
      LofModel m;
      m.k = j.at("k").get<std::size_t>();
      m.reference = matrix_from_json(j.at("reference"), "lof.reference");
      m.k_distance = j.at("k_distance").get<Vec>();
      m.lrd = j.at("lrd").get<Vec>();
      m.threshold = threshold;
      if (m.k_distance.size() != m.reference.rows || m.lrd.size() != m.reference.rows)
        throw DataError("checkpoint LOF detector: inconsistent sizes");
      return m;
    }
    case DetectorKind::gda: {
      GdaModel m;
      m.class_means = matrix_from_json(j.at("class_means"), "gda.class_means");
      m.shared_covariance = matrix_from_json(j.at("shared_covariance"), "gda.shared_covariance");
      m.precision = matrix_from_json(j.at("precision"), "gda.precision");
      m.threshold = threshold;
      return m;
    }
  }
  throw DataError("checkpoint: unknown detector kind");
}

}  // namespace

// Where a run writes its outputs does not change what it computes.
std::string config_hash(const RunConfig& cfg) {
  json j = config_to_json(cfg);
  j.erase("output_dir");
  const std::string canonical = j.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string checkpoint_to_json(const Checkpoint& ckpt) {
  json j;
  j["format"] = kCheckpointFormat;
  j["config"] = config_to_json(ckpt.config);
  j["config_hash"] = config_hash(ckpt.config);
  std::vector<std::string> tokens(ckpt.vocab.tokens().begin() + 1, ckpt.vocab.tokens().end());
  j["vocab"] = json{{"lowercase", true}, {"tokens", tokens}};
  j["label_set"] = ckpt.label_set;
  j["representation"] = json{{"normalized", ckpt.model.normalized},
                             {"cosine_head", ckpt.model.cosine_head},
                             {"tau_ce", ckpt.model.tau_ce}};
  j["train_indices"] = ckpt.model.train_indices;
  const EncoderParams& p = ckpt.model.params;
  j["params"] = json{{"embeddings", matrix_to_json(p.embeddings)}, {"mlp_w1", matrix_to_json(p.mlp_w1)},
                     {"mlp_b1", vec_to_json(p.mlp_b1)},         {"mlp_w2", matrix_to_json(p.mlp_w2)},
                     {"mlp_b2", vec_to_json(p.mlp_b2)},         {"head_w", matrix_to_json(p.head_w)}};
  if (ckpt.detector) j["detector"] = detector_to_json(*ckpt.detector);
  return j.dump() + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat)
      throw DataError("unsupported checkpoint format " + j.at("format").get<std::string>());
    Checkpoint c;
    c.config = config_from_json(j.at("config"));
    if (config_hash(c.config) != j.at("config_hash").get<std::string>())
      throw DataError("checkpoint config hash mismatch");
    c.vocab = Vocab(j.at("vocab").at("tokens").get<std::vector<std::string>>());
    c.label_set = j.at("label_set").get<std::vector<std::string>>();
    const json& rep = j.at("representation");
    c.model.normalized = rep.at("normalized").get<bool>();
    c.model.cosine_head = rep.at("cosine_head").get<bool>();
    c.model.tau_ce = rep.at("tau_ce").get<double>();
    c.model.train_indices = j.at("train_indices").get<std::vector<std::size_t>>();
    const json& p = j.at("params");
    c.model.params.embeddings = matrix_from_json(p.at("embeddings"), "embeddings");
    c.model.params.mlp_w1 = matrix_from_json(p.at("mlp_w1"), "mlp_w1");
    c.model.params.mlp_b1 = vec_from_json(p.at("mlp_b1"), "mlp_b1");
    c.model.params.mlp_w2 = matrix_from_json(p.at("mlp_w2"), "mlp_w2");
    c.model.params.mlp_b2 = vec_from_json(p.at("mlp_b2"), "mlp_b2");
    c.model.params.head_w = matrix_from_json(p.at("head_w"), "head_w");
    c.model.params.validate();
    if (c.model.params.embeddings.rows != c.vocab.size()) throw DataError("checkpoint embeddings do not match vocabulary");
    if (c.model.params.head_w.cols != c.label_set.size()) throw DataError("checkpoint head does not match label set");
    if (j.contains("detector")) c.detector = detector_from_json(j.at("detector"));
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  } catch (const NumericError& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  out << checkpoint_to_json(ckpt);
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return checkpoint_from_json(ss.str());
}

}  // namespace sclood
