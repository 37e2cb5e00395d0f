#include "sclood/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "sclood/errors.hpp"

namespace sclood {

namespace {

template <typename T>
std::vector<T> sorted_unique(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

template <typename T>
std::vector<std::optional<T>> axis(const std::vector<T>& values) {
  if (values.empty()) return {std::nullopt};
  return {values.begin(), values.end()};
}

}  // namespace

std::vector<RunConfig> expand_grid(const RunConfig& base, const SweepGrid& grid) {
  std::vector<RunConfig> out;
  const auto eps = sorted_unique(grid.epsilons);
  const auto bs = sorted_unique(grid.batch_sizes);
  const auto rd = sorted_unique(grid.rep_dims);
  const auto df = sorted_unique(grid.data_fractions);
  for (const auto& sched : axis(grid.schedules))
    for (const auto& loss : axis(grid.losses))
      for (const auto& det : axis(grid.detectors))
        for (const auto& e : axis(eps))
          for (const auto& b : axis(bs))
            for (const auto& r : axis(rd))
              for (const auto& f : axis(df))
                for (const auto& s : axis(grid.seeds)) {
                  RunConfig c = base;
                  if (sched) c.train.schedule = *sched;
                  if (loss) c.train.finetune_loss = *loss;
                  if (det) c.detector.kind = *det;
                  if (e) c.epsilon = *e;
                  if (b) c.train.batch_size = *b;
                  if (r) c.train.rep_dim = *r;
                  if (f) c.train.data_fraction = *f;
                  if (s) c.train.seed = *s;
                  c.run_id = base.run_id + "-" + std::to_string(out.size());
                  out.push_back(std::move(c));
                }
  return out;
}

std::vector<SweepRow> run_sweep(const RunConfig& base, const SweepGrid& grid, const DatasetBundle& bundle,
                                std::size_t jobs) {
  const auto points = expand_grid(base, grid);
  for (const auto& p : points) p.validate();
  std::vector<SweepRow> rows(points.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  const auto worker = [&] {
    for (std::size_t i = next++; i < points.size(); i = next++) {
      try {
        rows[i] = {points[i], run_experiment(points[i], bundle).metrics};
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = points.size();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, points.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

}  // namespace sclood
