#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "sclood/corpus.hpp"
#include "sclood/trainer.hpp"

namespace sclood {

enum class DatasetFormat { clinc, jsonl };

/// Everything one train/evaluate run needs. TOML files use the flat key
/// names accepted by apply_setting.
struct RunConfig {
  std::filesystem::path dataset;
  DatasetFormat format = DatasetFormat::jsonl;
  std::optional<std::filesystem::path> embeddings;
  std::size_t embed_dim = 64;
  std::size_t min_freq = 1;
  TrainConfig train;
  DetectorConfig detector;
  // Unset means the per-detector default (1.5 for GDA, 1.0 for MSP/LOF).
  std::optional<double> epsilon;
  std::filesystem::path output_dir = "out";
  std::string run_id = "run";

  double resolved_epsilon() const;
  /// TrainConfig with the resolved epsilon applied.
  TrainConfig effective_train_config() const;
  void validate() const;
};

/// Sets one flat key from its textual value. Throws ConfigError for unknown
/// keys or unparsable values.
void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value);

RunConfig load_run_config(const std::filesystem::path& toml_path);
RunConfig parse_run_config(std::string_view toml_text);

DatasetBundle load_dataset(const RunConfig& cfg);
EmbeddingTable make_embeddings(const RunConfig& cfg, const Vocab& vocab);

struct ExperimentResult {
  PreparedData data;
  TrainedModel model;
  DetectorModel detector;
  MetricsReport metrics;
};

/// prepare -> train -> fit detector on train, threshold on dev -> evaluate on test.
ExperimentResult run_experiment(const RunConfig& cfg, const DatasetBundle& bundle);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

std::string metrics_csv_header();
std::string metrics_csv_row(const RunConfig& cfg, const MetricsReport& m);

}  // namespace sclood
