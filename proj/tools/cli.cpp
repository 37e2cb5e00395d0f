#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include "sclood/analysis.hpp"
#include "sclood/checkpoint.hpp"
#include "sclood/errors.hpp"
#include "sclood/run_config.hpp"
#include "sclood/sweep.hpp"
#include "sclood/synthetic.hpp"

namespace fs = std::filesystem;

namespace sclood::cli {

namespace {

// Staged outputs: every file is written as "<name>.partial" and renamed only
// once the whole command succeeded; on failure the partials are deleted.
class OutputSet {
 public:
  OutputSet(fs::path dir, bool overwrite) : dir_(std::move(dir)), overwrite_(overwrite) {}
  OutputSet(const OutputSet&) = delete;
  OutputSet& operator=(const OutputSet&) = delete;

  ~OutputSet() {
    if (committed_) return;
    std::error_code ec;
    for (const auto& f : files_) fs::remove(staged(f), ec);
    if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
  }

  // Registers `name` and returns the staging path to write to.
  fs::path claim(const std::string& name) {
    const fs::path target = dir_ / name;
    if (fs::exists(target) && !overwrite_)
      throw ConfigError("refusing to overwrite " + target.string() + " (pass --overwrite)");
    if (!fs::exists(dir_)) {
      std::error_code ec;
      fs::create_directories(dir_, ec);
      if (ec) throw ConfigError("cannot create output directory " + dir_.string() + ": " + ec.message());
      created_dir_ = true;
    }
    files_.push_back(target);
    return staged(target);
  }

  void write_text(const std::string& name, const std::string& text) {
    const fs::path p = claim(name);
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw DataError("failed writing " + p.string());
  }

  void commit() {
    for (const auto& f : files_) fs::rename(staged(f), f);
    committed_ = true;
  }

 private:
  static fs::path staged(const fs::path& p) { return fs::path(p.string() + ".partial"); }

  fs::path dir_;
  bool overwrite_;
  bool created_dir_ = false;
  bool committed_ = false;
  std::vector<fs::path> files_;
};

// Flags shared by train and sweep; each one overrides the config file.
struct RunFlags {
  std::string config;
  std::vector<std::string> settings;
  std::string dataset, format, embeddings, detector, schedule, loss, run_id, output;
  std::optional<std::uint64_t> seed;
  bool overwrite = false;

  void add_to(CLI::App& cmd) {
    cmd.add_option("--config", config, "TOML run configuration")->check(CLI::ExistingFile);
    cmd.add_option("--set", settings, "extra key=value overrides (repeatable)");
    cmd.add_option("--dataset", dataset, "dataset path (CLINC JSON file or JSONL directory)");
    cmd.add_option("--format", format, "clinc or jsonl");
    cmd.add_option("--embeddings", embeddings, "word vector text file");
    cmd.add_option("--run-id", run_id);
    cmd.add_option("--output", output, "output directory");
    cmd.add_flag("--overwrite", overwrite, "replace existing outputs");
  }

  RunConfig resolve() const {
    RunConfig cfg = config.empty() ? RunConfig{} : load_run_config(config);
    for (const auto& kv : settings) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got \"" + kv + "\"");
      apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    const auto set_if = [&](const char* key, const std::string& v) {
      if (!v.empty()) apply_setting(cfg, key, v);
    };
    set_if("dataset", dataset);
    set_if("format", format);
    set_if("embeddings", embeddings);
    set_if("detector", detector);
    set_if("schedule", schedule);
    set_if("finetune_loss", loss);
    set_if("run_id", run_id);
    set_if("output_dir", output);
    if (seed) cfg.train.seed = *seed;
    return cfg;
  }
};

std::string metrics_csv(const std::vector<std::string>& rows) {
  std::string text = metrics_csv_header() + "\n";
  for (const auto& r : rows) text += r + "\n";
  return text;
}

int cmd_train(const RunFlags& flags, std::optional<double> epsilon, std::optional<double> fraction,
              std::optional<std::size_t> batch, std::optional<std::size_t> rep, std::ostream& out) {
  RunConfig cfg = flags.resolve();
  if (epsilon) cfg.epsilon = *epsilon;
  if (fraction) cfg.train.data_fraction = *fraction;
  if (batch) cfg.train.batch_size = *batch;
  if (rep) cfg.train.rep_dim = *rep;
  cfg.validate();

  OutputSet outputs(cfg.output_dir, flags.overwrite);
  const fs::path ckpt_path = outputs.claim("checkpoint.json");
  const auto bundle = load_dataset(cfg);
  ExperimentResult result = run_experiment(cfg, bundle);

  Checkpoint ckpt{cfg, result.data.vocab, result.data.label_set, std::move(result.model), std::move(result.detector)};
  save_checkpoint(ckpt_path, ckpt);
  const std::string row = metrics_csv_row(cfg, result.metrics);
  outputs.write_text("metrics.csv", metrics_csv({row}));
  outputs.commit();
  out << metrics_csv({row});
  return kOk;
}

// Loads a checkpoint and tokenizes a dataset with its vocabulary.
struct LoadedRun {
  Checkpoint ckpt;
  PreparedData data;
};

LoadedRun load_run(const std::string& checkpoint, const std::string& dataset, const std::string& format) {
  LoadedRun run{load_checkpoint(checkpoint), {}};
  RunConfig& cfg = run.ckpt.config;
  if (!dataset.empty()) apply_setting(cfg, "dataset", dataset);
  if (!format.empty()) apply_setting(cfg, "format", format);
  const DatasetBundle bundle = load_dataset(cfg);
  if (bundle.label_set != run.ckpt.label_set)
    throw DataError("dataset intents do not match the checkpoint's label set");
  run.data.vocab = run.ckpt.vocab;
  run.data.label_set = run.ckpt.label_set;
  run.data.train = encode_split(bundle.train_ind, run.data.vocab, bundle);
  run.data.dev = encode_split(bundle.dev, run.data.vocab, bundle);
  run.data.test = encode_split(bundle.test, run.data.vocab, bundle);
  for (std::size_t i : run.ckpt.model.train_indices)
    if (i >= run.data.train.size()) throw DataError("checkpoint training indices exceed the dataset's training split");
  return run;
}

int cmd_eval(const std::string& checkpoint, const std::string& dataset, const std::string& format,
             const std::string& detector, const std::string& output, bool overwrite, std::ostream& out) {
  LoadedRun run = load_run(checkpoint, dataset, format);
  RunConfig& cfg = run.ckpt.config;
  if (!detector.empty()) apply_setting(cfg, "detector", detector);

  // Reuse the stored detector when it is the one asked for; otherwise fit.
  DetectorModel det = run.ckpt.detector && kind_of(*run.ckpt.detector) == cfg.detector.kind
                          ? *run.ckpt.detector
                          : fit_detector(run.ckpt.model, run.data, cfg.detector);
  const MetricsReport m = evaluate(run.ckpt.model, det, run.data.test, run.data.num_classes());

  OutputSet outputs(output.empty() ? fs::path(checkpoint).parent_path() : fs::path(output), overwrite);
  const std::string text = metrics_csv({metrics_csv_row(cfg, m)});
  outputs.write_text("eval_metrics.csv", text);
  outputs.commit();
  out << text;
  return kOk;
}

int cmd_analyze(const std::string& checkpoint, const std::string& dataset, const std::string& format,
                const std::string& split_name, std::vector<std::size_t> ks, const std::vector<std::string>& pca_classes,
                const std::string& output, bool overwrite, std::ostream& out, std::ostream& err) {
  LoadedRun run = load_run(checkpoint, dataset, format);
  const EncodedSplit* split = nullptr;
  if (split_name == "train") split = &run.data.train;
  else if (split_name == "dev") split = &run.data.dev;
  else if (split_name == "test") split = &run.data.test;
  else throw ConfigError("--split must be train, dev or test");
  const EncodedSplit ind = split->ind_only();
  const std::size_t classes = run.data.num_classes();

  const Matrix unit = normalize_rows(represent(run.ckpt.model, ind));
  const VarianceStats var = intra_class_stats(unit, ind.labels);
  for (int c : var.excluded_singletons)
    err << "warning: class " << run.data.label_set[static_cast<std::size_t>(c)] << " has one sample; excluded from variance\n";

  const Matrix centers = normalize_rows(class_centers(unit, ind.labels, classes));
  if (ks.empty())
    for (std::size_t k : {1, 2, 3, 5})
      if (k < classes) ks.push_back(k);

  std::vector<int> subset;
  for (const auto& name : pca_classes) {
    auto it = std::find(run.data.label_set.begin(), run.data.label_set.end(), name);
    if (it == run.data.label_set.end()) throw ConfigError("--pca-classes: unknown intent " + name);
    subset.push_back(static_cast<int>(it - run.data.label_set.begin()));
  }
  const PcaResult pca = pca_project(unit, ind.labels, subset);
  if (pca.rank_deficient) err << "warning: representations span fewer than 2 directions; pc2 set to 0\n";

  std::ostringstream variance, inter, rows;
  variance << "split,classes,min,max,mean,median\n"
           << split_name << ',' << var.classes << ',' << format_double(var.min) << ',' << format_double(var.max) << ','
           << format_double(var.mean) << ',' << format_double(var.median) << '\n';
  inter << "k,distance\n";
  for (std::size_t k : ks) inter << k << ',' << format_double(inter_class_distance(centers, k)) << '\n';
  rows << "id,label,pc1,pc2\n";
  for (const auto& r : pca.rows)
    rows << r.id << ',' << run.data.label_set[static_cast<std::size_t>(r.label)] << ',' << format_double(r.pc1) << ','
         << format_double(r.pc2) << '\n';

  OutputSet outputs(output.empty() ? fs::path(checkpoint).parent_path() : fs::path(output), overwrite);
  outputs.write_text("variance.csv", variance.str());
  outputs.write_text("inter_class_distance.csv", inter.str());
  outputs.write_text("pca.csv", rows.str());
  outputs.commit();
  out << variance.str() << inter.str();
  return kOk;
}

template <typename T>
std::vector<T> parse_all(const std::vector<std::string>& names, T (*parse)(std::string_view)) {
  std::vector<T> out;
  for (const auto& n : names) out.push_back(parse(n));
  return out;
}

int cmd_sweep(const RunFlags& flags, SweepGrid grid, const std::vector<std::string>& schedules,
              const std::vector<std::string>& losses, const std::vector<std::string>& detectors, std::size_t jobs,
              std::ostream& out) {
  const RunConfig base = flags.resolve();
  grid.schedules = parse_all(schedules, &parse_schedule);
  grid.losses = parse_all(losses, &parse_finetune_loss);
  grid.detectors = parse_all(detectors, &parse_detector_kind);
  base.validate();

  OutputSet outputs(base.output_dir, flags.overwrite);
  const fs::path csv_path = outputs.claim("sweep.csv");
  const auto rows = run_sweep(base, grid, load_dataset(base), jobs);
  std::vector<std::string> lines;
  for (const auto& r : rows) lines.push_back(metrics_csv_row(r.config, r.metrics));
  const std::string text = metrics_csv(lines);
  std::ofstream(csv_path, std::ios::binary) << text;
  outputs.commit();
  out << text;
  return kOk;
}

int cmd_gen_synth(const SyntheticSpec& spec, const std::string& output, bool overwrite, std::ostream& out) {
  const DatasetBundle b = generate_synthetic(spec);
  OutputSet outputs(output, overwrite);
  write_jsonl(outputs.claim("train.jsonl"), b.train_ind);
  write_jsonl(outputs.claim("dev.jsonl"), b.dev);
  write_jsonl(outputs.claim("test.jsonl"), b.test);
  write_word_vectors(outputs.claim("embeddings.txt"), synthetic_word_vectors(spec));
  outputs.commit();
  out << "wrote " << b.train_ind.size() << " train, " << b.dev.size() << " dev, " << b.test.size()
      << " test rows and " << spec.embed_dim << "-d word vectors to " << output << "\n";
  return kOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Supervised contrastive intent representations and out-of-domain detection"};
  app.name("sclood");
  app.require_subcommand(1);
  std::function<int()> action;

  // train
  RunFlags train_flags;
  std::optional<double> train_eps, train_fraction;
  std::optional<std::size_t> train_batch, train_rep;
  auto* train = app.add_subcommand("train", "train an encoder, fit a detector, write checkpoint + metrics");
  train_flags.add_to(*train);
  train->add_option("--detector", train_flags.detector, "gda, lof or msp");
  train->add_option("--schedule", train_flags.schedule);
  train->add_option("--loss", train_flags.loss, "ce or lmcl");
  train->add_option("--seed", train_flags.seed);
  train->add_option("--epsilon", train_eps, "adversarial perturbation norm");
  train->add_option("--data-fraction", train_fraction);
  train->add_option("--batch-size", train_batch);
  train->add_option("--rep-dim", train_rep);
  train->callback([&] {
    action = [&] { return cmd_train(train_flags, train_eps, train_fraction, train_batch, train_rep, out); };
  });

  // eval / analyze
  std::string checkpoint, dataset, format, detector, output, split = "test";
  bool overwrite = false;
  std::vector<std::size_t> ks;
  std::vector<std::string> pca_classes;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset's test split");
  auto* analyze = app.add_subcommand("analyze", "variance, inter-class distance and PCA of a checkpoint's representations");
  for (auto* cmd : {eval, analyze}) {
    cmd->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
    cmd->add_option("--dataset", dataset, "defaults to the dataset recorded in the checkpoint");
    cmd->add_option("--format", format);
    cmd->add_option("--output", output, "defaults to the checkpoint's directory");
    cmd->add_flag("--overwrite", overwrite);
  }
  eval->add_option("--detector", detector, "refits on the training split when it differs from the stored detector");
  eval->callback([&] { action = [&] { return cmd_eval(checkpoint, dataset, format, detector, output, overwrite, out); }; });
  analyze->add_option("--split", split, "train, dev or test");
  analyze->add_option("--k", ks, "neighbor counts for inter-class distance")->delimiter(',');
  analyze->add_option("--pca-classes", pca_classes, "intents to project (default: all)")->delimiter(',');
  analyze->callback([&] {
    action = [&] { return cmd_analyze(checkpoint, dataset, format, split, ks, pca_classes, output, overwrite, out, err); };
  });

  // sweep
  RunFlags sweep_flags;
  SweepGrid grid;
  std::vector<std::string> schedules, losses, detectors;
  std::size_t jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "train and evaluate every point of a parameter grid");
  sweep_flags.add_to(*sweep);
  sweep->add_option("--epsilon", grid.epsilons)->delimiter(',');
  sweep->add_option("--data-fraction", grid.data_fractions)->delimiter(',');
  sweep->add_option("--batch-size", grid.batch_sizes)->delimiter(',');
  sweep->add_option("--rep-dim", grid.rep_dims)->delimiter(',');
  sweep->add_option("--seeds", grid.seeds)->delimiter(',');
  sweep->add_option("--schedule", schedules)->delimiter(',');
  sweep->add_option("--loss", losses)->delimiter(',');
  sweep->add_option("--detector", detectors)->delimiter(',');
  sweep->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  sweep->callback([&] {
    action = [&] { return cmd_sweep(sweep_flags, grid, schedules, losses, detectors, jobs, out); };
  });

  // gen-synth
  SyntheticSpec spec;
  std::string synth_out;
  bool synth_overwrite = false;
  auto* gen = app.add_subcommand("gen-synth", "write the synthetic benchmark as train/dev/test JSONL");
  gen->add_option("--output", synth_out)->required();
  gen->add_option("--seed", spec.seed);
  gen->add_option("--ind-classes", spec.ind_classes);
  gen->add_option("--ood-clusters", spec.ood_clusters);
  gen->add_option("--train-per-class", spec.train_per_class);
  gen->add_option("--dev-per-class", spec.dev_per_class);
  gen->add_option("--test-per-class", spec.test_per_class);
  gen->add_option("--embed-dim", spec.embed_dim, "width of the shipped word vectors");
  gen->add_flag("--overwrite", synth_overwrite);
  gen->callback([&] { action = [&] { return cmd_gen_synth(spec, synth_out, synth_overwrite, out); }; });

  if (!args.empty() && !args.front().starts_with('-') && app.get_subcommand_no_throw(args.front()) == nullptr) {
    err << "error: unknown command \"" << args.front() << "\" (expected train, eval, analyze, sweep or gen-synth)\n";
    return kConfigError;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    return action();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kNumericError;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  }
}

}  // namespace sclood::cli
