#include "sclood/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <utility>

#include "sclood/errors.hpp"

namespace sclood {

std::string_view to_string(Schedule s) {
  switch (s) {
    case Schedule::scl_then_finetune: return "scl_then_finetune";
    case Schedule::finetune_then_scl: return "finetune_then_scl";
    case Schedule::multitask: return "multitask";
    case Schedule::finetune_only: return "finetune_only";
  }
  return "?";
}

std::string_view to_string(FinetuneLoss l) { return l == FinetuneLoss::ce ? "ce" : "lmcl"; }

Schedule parse_schedule(std::string_view name) {
  for (Schedule s : {Schedule::scl_then_finetune, Schedule::finetune_then_scl, Schedule::multitask,
                     Schedule::finetune_only})
    if (name == to_string(s)) return s;
  throw ConfigError("unknown schedule \"" + std::string(name) +
                    "\" (expected scl_then_finetune, finetune_then_scl, multitask or finetune_only)");
}

FinetuneLoss parse_finetune_loss(std::string_view name) {
  if (name == "ce") return FinetuneLoss::ce;
  if (name == "lmcl") return FinetuneLoss::lmcl;
  throw ConfigError("unknown finetune loss \"" + std::string(name) + "\" (expected ce or lmcl)");
}

void TrainConfig::validate() const {
  loss.validate();
  adv.validate();
  if (uses_scl() && scl_epochs < 1) throw ConfigError("scl_epochs must be >= 1");
  if (schedule != Schedule::multitask && finetune_epochs < 1) throw ConfigError("finetune_epochs must be >= 1");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(data_fraction > 0.0 && data_fraction <= 1.0)) throw ConfigError("data_fraction must be in (0, 1]");
  if (rep_dim < 2 || hidden_dim < 1) throw ConfigError("rep_dim must be >= 2 and hidden_dim >= 1");
}

PreparedData prepare_data(const DatasetBundle& bundle, std::size_t min_freq) {
  PreparedData d;
  d.vocab = build_vocab(bundle.train_ind, min_freq);
  d.label_set = bundle.label_set;
  d.train = encode_split(bundle.train_ind, d.vocab, bundle);
  d.dev = encode_split(bundle.dev, d.vocab, bundle);
  d.test = encode_split(bundle.test, d.vocab, bundle);
  return d;
}

std::vector<std::size_t> subsample_per_class(const EncodedSplit& split, double fraction, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < split.size(); ++i) by_class[split.labels[i]].push_back(i);
  Rng rng(seed);
  std::vector<std::size_t> keep;
  for (auto& [label, idx] : by_class) {
    Rng cls_rng = rng.derive(static_cast<std::uint64_t>(label + 1));
    cls_rng.shuffle(idx);
    const auto want = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(idx.size())));
    const std::size_t n = std::min(idx.size(), std::max<std::size_t>(2, want));
    keep.insert(keep.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n));
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

Matrix represent(const TrainedModel& model, const EncodedSplit& split) {
  Matrix reps(split.size(), model.params.mlp_w2.cols);
  for (std::size_t i = 0; i < split.size(); ++i) {
    const ForwardTrace t = encode(model.params, split.tokens[i], model.normalized);
    std::copy(t.rep.vector.begin(), t.rep.vector.end(), reps.row(i).begin());
  }
  return reps;
}

std::vector<int> classify(const TrainedModel& model, const Matrix& reps) {
  std::vector<int> out(reps.rows);
  for (std::size_t i = 0; i < reps.rows; ++i) {
    const Vec logits = class_logits(model.params.head_w, reps.row(i), model.tau_ce, model.cosine_head);
    out[i] = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
  }
  return out;
}

double dev_macro_f1(const TrainedModel& model, const EncodedSplit& dev) {
  const EncodedSplit ind = dev.ind_only();
  const auto pred = classify(model, represent(model, ind));
  return macro_f1(ind.labels, pred, model.params.head_w.cols);
}

namespace {

enum class StageKind { scl, supervised, multitask };

const char* stage_name(StageKind k) {
  switch (k) {
    case StageKind::scl: return "scl";
    case StageKind::supervised: return "finetune";
    case StageKind::multitask: return "multitask";
  }
  return "?";
}

class Trainer {
 public:
  Trainer(const TrainConfig& cfg, const EncodedSplit& train, const EncodedSplit& dev_ind, TrainedModel& model)
      : cfg_(cfg), train_(train), dev_ind_(dev_ind), model_(model), root_(cfg.seed) {}

  void run_stage(StageKind kind, std::size_t epochs, std::uint64_t stage_id) {
    std::vector<AdamState> adam;
    model_.params.for_each_tensor(
        [&](std::span<const double> t) { adam.push_back(AdamState::for_size(t.size(), cfg_.learning_rate)); });

    const bool lower_is_better = kind == StageKind::scl;
    double best = lower_is_better ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    EncoderParams best_params = model_.params;
    std::size_t waited = 0;
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
      const std::uint64_t batch_seed = root_.derive(1000 + 100000 * stage_id + epoch).seed();
      const auto batches = make_batches(train_.size(), cfg_.batch_size, batch_seed);
      double loss_sum = 0.0;
      for (const auto& batch : batches) loss_sum += step(kind, batch, adam);

      const double monitor = kind == StageKind::scl ? dev_scl_loss() : dev_macro_f1(model_, dev_ind_);
      model_.history.push_back({stage_name(kind), epoch, loss_sum / static_cast<double>(batches.size()), monitor});
      const bool improved = lower_is_better ? monitor < best : monitor > best;
      if (improved) {
        best = monitor;
        best_params = model_.params;
        waited = 0;
      } else if (++waited >= cfg_.patience) {
        break;
      }
    }
    model_.params = std::move(best_params);
  }

 private:
  double dev_scl_loss() const {
    if (dev_ind_.size() < 2) throw DataError("dev split needs at least 2 IND samples");
    Matrix reps = represent(model_, dev_ind_);
    if (!model_.normalized)
      for (std::size_t i = 0; i < reps.rows; ++i) {
        const Vec u = l2_normalize(reps.row(i));
        std::copy(u.begin(), u.end(), reps.row(i).begin());
      }
    return scl_loss(reps, dev_ind_.labels, cfg_.loss).loss;
  }

  // Classification loss (CE or LMCL) on `reps`; the raw-head gradient is
  // returned in `grad_head`.
  BatchLossResult classification_loss(const Matrix& reps, std::span<const int> labels) const {
    const Matrix& head = model_.params.head_w;
    if (cfg_.finetune_loss == FinetuneLoss::ce) return ce_loss(reps, labels, head, cfg_.loss);
    const Matrix unit_head = normalize_columns(head);
    BatchLossResult r = lmcl_loss(reps, labels, unit_head, cfg_.loss);
    Matrix raw(head.rows, head.cols);
    normalize_columns_backward(head, r.grad_head, raw);
    r.grad_head = std::move(raw);
    return r;
  }

  static Matrix stack(const std::vector<ForwardTrace>& traces) {
    Matrix m(traces.size(), traces.front().rep.vector.size());
    for (std::size_t i = 0; i < traces.size(); ++i)
      std::copy(traces[i].rep.vector.begin(), traces[i].rep.vector.end(), m.row(i).begin());
    return m;
  }

  double step(StageKind kind, const std::vector<std::size_t>& batch, std::vector<AdamState>& adam) {
    EncoderParams& params = model_.params;
    std::vector<ForwardTrace> traces;
    std::vector<int> labels;
    traces.reserve(batch.size());
    for (std::size_t i : batch) {
      traces.push_back(encode(params, train_.tokens[i], model_.normalized));
      labels.push_back(train_.labels[i]);
    }
    EncoderParams grads = params.zeros_like();
    double reported = 0.0;

    const bool augment = cfg_.adv.active() && (kind != StageKind::supervised || cfg_.adversarial_in_finetune);
    AugmentedBatch aug = augment ? augment_batch(traces, labels, params, cfg_.adv, cfg_.loss, model_.cosine_head)
                                 : augment_batch(traces, labels, params, AdvConfig{0.0, false, true}, cfg_.loss);

    if (kind == StageKind::supervised) {
      const BatchLossResult r = classification_loss(aug.reps(), aug.labels);
      for (std::size_t i = 0; i < aug.traces.size(); ++i) encoder_backward(aug.traces[i], r.grad_reps.row(i), params, &grads);
      grads.head_w = r.grad_head;
      reported = r.loss;
    } else {
      // Contrastive term over originals plus adversarial views.
      if (aug.traces.size() >= 2) {
        const BatchLossResult scl = scl_loss(aug.reps(), aug.labels, cfg_.loss, aug.anchor_mask(cfg_.adv.adv_views_as_anchors));
        const double w = kind == StageKind::multitask ? cfg_.loss.scl_weight : 1.0;
        if (w != 0.0)
          for (std::size_t i = 0; i < aug.traces.size(); ++i) {
            Vec g(scl.grad_reps.row(i).begin(), scl.grad_reps.row(i).end());
            for (double& x : g) x *= w;
            encoder_backward(aug.traces[i], g, params, &grads);
          }
        reported += w * scl.loss;
      }
      const BatchLossResult cls = classification_loss(stack(traces), labels);
      grads.head_w = cls.grad_head;
      if (kind == StageKind::multitask) {
        for (std::size_t i = 0; i < traces.size(); ++i) encoder_backward(traces[i], cls.grad_reps.row(i), params, &grads);
        reported += cls.loss;
      }
      // In the pure SCL stage the classification loss only maintains the head.
    }

    std::vector<std::span<double>> p_tensors;
    std::vector<std::span<const double>> g_tensors;
    params.for_each_tensor([&](std::span<double> t) { p_tensors.push_back(t); });
    std::as_const(grads).for_each_tensor([&](std::span<const double> t) { g_tensors.push_back(t); });
    for (std::size_t t = 0; t < p_tensors.size(); ++t) adam_step(p_tensors[t], g_tensors[t], adam[t]);
    return reported;
  }

  const TrainConfig& cfg_;
  const EncodedSplit& train_;
  const EncodedSplit& dev_ind_;
  TrainedModel& model_;
  Rng root_;
};

}  // namespace

TrainedModel train(const TrainConfig& config, const PreparedData& data, const EmbeddingTable& embeddings) {
  config.validate();
  if (data.train.size() == 0) throw DataError("training split is empty");
  if (embeddings.vectors.rows != data.vocab.size())
    throw DataError("embedding table rows do not match the vocabulary size");
  const EncodedSplit dev_ind = data.dev.ind_only();
  if (dev_ind.size() == 0) throw DataError("dev split has no IND samples");

  const Rng root(config.seed);
  TrainedModel model;
  model.normalized = config.normalize_reps();
  model.cosine_head = config.cosine_head();
  model.tau_ce = config.loss.tau_ce;
  model.train_indices = config.data_fraction < 1.0
                            ? subsample_per_class(data.train, config.data_fraction, root.derive(10).seed())
                            : [&] {
                                std::vector<std::size_t> all(data.train.size());
                                for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
                                return all;
                              }();
  const EncodedSplit train_split = data.train.subset(model.train_indices);
  model.params = init_encoder(embeddings, config.hidden_dim, config.rep_dim, data.num_classes(), root.derive(1).seed());

  Trainer trainer(config, train_split, dev_ind, model);
  switch (config.schedule) {
    case Schedule::scl_then_finetune:
      trainer.run_stage(StageKind::scl, config.scl_epochs, 1);
      trainer.run_stage(StageKind::supervised, config.finetune_epochs, 2);
      break;
    case Schedule::finetune_then_scl:
      trainer.run_stage(StageKind::supervised, config.finetune_epochs, 1);
      trainer.run_stage(StageKind::scl, config.scl_epochs, 2);
      break;
    case Schedule::multitask:
      trainer.run_stage(StageKind::multitask, config.scl_epochs, 1);
      break;
    case Schedule::finetune_only:
      trainer.run_stage(StageKind::supervised, config.finetune_epochs, 1);
      break;
  }
  if (!model.params.embeddings.all_finite() || !model.params.mlp_w1.all_finite() || !model.params.head_w.all_finite())
    throw NumericError("training produced non-finite parameters");
  return model;
}

DetectorModel fit_detector(const TrainedModel& model, const PreparedData& data, const DetectorConfig& cfg) {
  const EncodedSplit train_split = data.train.subset(model.train_indices);
  const std::size_t classes = data.num_classes();
  std::vector<bool> dev_is_ood(data.dev.size());
  for (std::size_t i = 0; i < data.dev.size(); ++i) dev_is_ood[i] = data.dev.labels[i] < 0;

  switch (cfg.kind) {
    case DetectorKind::msp:
      return MspModel{cfg.msp_threshold};
    case DetectorKind::gda: {
      GdaModel gda = fit_gda(represent(model, train_split), train_split.labels, classes, cfg.gda_ridge);
      const Matrix dev_reps = represent(model, data.dev);
      Vec scores(dev_reps.rows);
      for (std::size_t i = 0; i < dev_reps.rows; ++i) scores[i] = gda_score(gda, dev_reps.row(i)).first;
      gda.threshold = select_threshold(scores, dev_is_ood, true);
      return gda;
    }
    case DetectorKind::lof: {
      const Matrix train_reps = represent(model, train_split);
      const std::size_t k = std::min(cfg.lof_k, train_reps.rows - 1);
      LofModel lof = fit_lof(train_reps, k);
      const Matrix dev_reps = represent(model, data.dev);
      Vec scores(dev_reps.rows);
      for (std::size_t i = 0; i < dev_reps.rows; ++i) scores[i] = lof_score(lof, dev_reps.row(i));
      lof.threshold = select_threshold(scores, dev_is_ood, true);
      return lof;
    }
  }
  throw ConfigError("unknown detector kind");
}

std::vector<Verdict> detect(const TrainedModel& model, const DetectorModel& detector, const EncodedSplit& split) {
  const Matrix reps = represent(model, split);
  std::vector<Verdict> out(reps.rows);
  if (const auto* gda = std::get_if<GdaModel>(&detector)) {
    for (std::size_t i = 0; i < reps.rows; ++i) out[i] = gda_detect(*gda, reps.row(i));
    return out;
  }
  const auto predicted = classify(model, reps);
  if (const auto* lof = std::get_if<LofModel>(&detector)) {
    for (std::size_t i = 0; i < reps.rows; ++i) out[i] = lof_detect(*lof, reps.row(i), predicted[i]);
    return out;
  }
  const auto& msp = std::get<MspModel>(detector);
  for (std::size_t i = 0; i < reps.rows; ++i) {
    const Vec probs = softmax(class_logits(model.params.head_w, reps.row(i), model.tau_ce, model.cosine_head));
    out[i] = msp_detect(msp, probs);
  }
  return out;
}

MetricsReport evaluate(const TrainedModel& model, const DetectorModel& detector, const EncodedSplit& split,
                       std::size_t num_classes) {
  const auto verdicts = detect(model, detector, split);
  return compute_metrics(split.labels, verdicts, num_classes);
}

}  // namespace sclood
