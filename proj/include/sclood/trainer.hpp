#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sclood/adversarial.hpp"
#include "sclood/corpus.hpp"
#include "sclood/detectors.hpp"
#include "sclood/encoder.hpp"
#include "sclood/losses.hpp"
#include "sclood/metrics.hpp"

namespace sclood {

enum class Schedule { scl_then_finetune, finetune_then_scl, multitask, finetune_only };
enum class FinetuneLoss { ce, lmcl };

std::string_view to_string(Schedule s);
std::string_view to_string(FinetuneLoss l);
Schedule parse_schedule(std::string_view name);
FinetuneLoss parse_finetune_loss(std::string_view name);

struct TrainConfig {
  Schedule schedule = Schedule::scl_then_finetune;
  FinetuneLoss finetune_loss = FinetuneLoss::ce;
  std::size_t scl_epochs = 100;
  std::size_t finetune_epochs = 10;
  std::size_t patience = 5;
  std::size_t batch_size = 50;
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
  std::size_t hidden_dim = 128;
  std::size_t rep_dim = 128;
  LossConfig loss;
  AdvConfig adv;
  bool adversarial_in_finetune = false;
  double data_fraction = 1.0;

  void validate() const;
  bool uses_scl() const { return schedule != Schedule::finetune_only; }
  /// Representations are unit-normalized for every schedule except the
  /// plain-CE baseline.
  bool normalize_reps() const { return uses_scl() || finetune_loss == FinetuneLoss::lmcl; }
  bool cosine_head() const { return finetune_loss == FinetuneLoss::lmcl; }
};

/// Vocabulary plus tokenized splits of a DatasetBundle.
struct PreparedData {
  Vocab vocab;
  std::vector<std::string> label_set;
  EncodedSplit train;
  EncodedSplit dev;
  EncodedSplit test;

  std::size_t num_classes() const { return label_set.size(); }
};

PreparedData prepare_data(const DatasetBundle& bundle, std::size_t min_freq = 1);

/// Per-class seeded subsample keeping round(fraction * n), at least 2, per class.
std::vector<std::size_t> subsample_per_class(const EncodedSplit& split, double fraction, std::uint64_t seed);

struct EpochRecord {
  std::string stage;
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_monitor = 0.0;
};

struct TrainedModel {
  EncoderParams params;
  bool normalized = false;
  bool cosine_head = false;
  double tau_ce = 1.0;
  std::vector<std::size_t> train_indices;  // rows of the training split actually used
  std::vector<EpochRecord> history;
};

TrainedModel train(const TrainConfig& config, const PreparedData& data, const EmbeddingTable& embeddings);

/// Representations of every row of `split` (normalized per the model).
Matrix represent(const TrainedModel& model, const EncodedSplit& split);
std::vector<int> classify(const TrainedModel& model, const Matrix& reps);
double dev_macro_f1(const TrainedModel& model, const EncodedSplit& dev);

struct DetectorConfig {
  DetectorKind kind = DetectorKind::gda;
  std::size_t lof_k = 20;
  double msp_threshold = 0.5;
  std::optional<double> gda_ridge;
};

/// Fits on the training rows the model used and selects the threshold on
/// dev (GDA, LOF); MSP keeps its fixed threshold.
DetectorModel fit_detector(const TrainedModel& model, const PreparedData& data, const DetectorConfig& cfg);

std::vector<Verdict> detect(const TrainedModel& model, const DetectorModel& detector, const EncodedSplit& split);

MetricsReport evaluate(const TrainedModel& model, const DetectorModel& detector, const EncodedSplit& split,
                       std::size_t num_classes);

}  // namespace sclood
