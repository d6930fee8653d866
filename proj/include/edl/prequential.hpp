#pragma once

// The measurement engine: one prequential pass (score each example with the
// state that precedes it, then update), continued training to the final
// state, test loss, and the EDL report built from them.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "learners.hpp"
#include "random.hpp"
#include "stats.hpp"
#include "toymodels.hpp"

namespace edl
{

struct PrequentialTrace
{
  std::vector<Codelength> step_codelengths; // presentation order
  std::vector<std::size_t> batch_boundaries; // start index of each batch
  std::size_t n = 0;

  double mdl_nats() const
  {
    stats::Sum s;
    for (auto c : step_codelengths)
      s += c.nats();
    return s.value();
  }
};

struct StoppingRule
{
  std::size_t max_epochs = 0;
  std::size_t patience = 0; // 0 disables early stopping
  double validation_fraction = 0.1;

  void validate() const
  {
    if (patience > max_epochs)
      throw ArgumentError("patience must not exceed max_epochs");
    if (!(validation_fraction >= 0.0 && validation_fraction <= 0.5))
      throw ArgumentError("validation_fraction must be in [0, 0.5]");
  }
};

// Called with the state in force before each batch and the batch's first index.
using StateObserver = std::function<void(LearnerState const &, std::size_t)>;

inline std::pair<PrequentialTrace, LearnerState>
run_prequential(LabeledDataset const &dataset, LearnerState initial, std::size_t batch_size = 1,
                StateObserver const &observer = {})
{
  if (dataset.empty())
    throw ArgumentError("run_prequential needs a non-empty dataset");
  if (batch_size == 0)
    throw ArgumentError("batch_size must be >= 1");

  PrequentialTrace trace;
  trace.n = dataset.size();
  trace.step_codelengths.reserve(dataset.size());
  LearnerState state = std::move(initial);
  auto const examples = dataset.examples();
  for (std::size_t start = 0; start < examples.size(); start += batch_size)
  {
    auto const batch = examples.subspan(start, std::min(batch_size, examples.size() - start));
    trace.batch_boundaries.push_back(start);
    if (observer)
      observer(state, start);
    for (auto const &ex : batch)
      trace.step_codelengths.push_back(codelength(state.predict(ex.input), ex.label));
    try
    {
      if (batch.size() == 1)
        state.observe(batch.front());
      else
        state.observe_batch(batch);
    }
    catch (ContradictionError const &e)
    {
      throw ContradictionError(std::string(e.what()) + " (example " + std::to_string(start) + ")",
                               start);
    }
  }
  return {std::move(trace), std::move(state)};
}

inline double test_loss(LearnerState const &state, LabeledDataset const &test_set)
{
  if (test_set.empty())
    throw ArgumentError("test set must be non-empty");
  stats::Sum s;
  for (auto const &ex : test_set.examples())
    s += codelength(state.predict(ex.input), ex.label).nats();
  return s.value() / static_cast<double>(test_set.size());
}

/// Expected codelength under the toy's population, by enumeration.
inline double population_loss_exact(LearnerState const &state, ToySpec const &truth)
{
  auto const &pop = truth.world().population;
  if (pop.empty())
    throw UnsupportedError("toy spec has no enumerable population");
  double s = 0.0;
  for (auto const &[ex, w] : pop)
    s += w * codelength(state.predict(ex.input), ex.label).nats();
  return s;
}

/// Continue training past the first pass to the final state. Each epoch
/// visits the training split in a seed-derived order. With patience > 0 and a
/// validation split, training stops once validation loss has not improved
/// for `patience` epochs and the best validated state is returned.
inline LearnerState continue_training(LearnerState state, LabeledDataset const &dataset,
                                      StoppingRule const &rule, std::uint64_t seed,
                                      std::size_t batch_size = 1)
{
  rule.validate();
  if (rule.max_epochs == 0 || dataset.empty())
    return state;
  if (batch_size == 0)
    throw ArgumentError("batch_size must be >= 1");

  Rng split_rng(hash_seed({seed, 0x7370}));
  auto perm = split_rng.permutation(dataset.size());
  auto n_val = static_cast<std::size_t>(rule.validation_fraction *
                                        static_cast<double>(dataset.size()));
  bool const early_stopping = rule.patience > 0 && n_val > 0;
  if (!early_stopping)
    n_val = 0;
  n_val = std::min(n_val, dataset.size() - 1);
  std::vector<std::size_t> val_idx(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_idx(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());
  std::optional<LabeledDataset> validation;
  if (early_stopping)
    validation = dataset.select(val_idx);

  LearnerState best = state;
  double best_val = early_stopping ? test_loss(state, *validation) : 0.0;
  std::size_t stale = 0;
  for (std::size_t epoch = 0; epoch < rule.max_epochs; ++epoch)
  {
    Rng epoch_rng(hash_seed({seed, 0x6570, epoch}));
    auto order = train_idx;
    epoch_rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch_size)
    {
      auto const end = std::min(order.size(), start + batch_size);
      if (end - start == 1)
        state.observe(dataset[order[start]]);
      else
      {
        std::vector<Example> batch;
        for (std::size_t i = start; i < end; ++i)
          batch.push_back(dataset[order[i]]);
        state.observe_batch(batch);
      }
    }
    if (!early_stopping)
      continue;
    double const v = test_loss(state, *validation);
    if (v < best_val)
    {
      best_val = v;
      best = state;
      stale = 0;
    }
    else if (++stale >= rule.patience)
      break;
  }
  return early_stopping ? best : state;
}

struct EdlReport
{
  double mdl_nats = 0.0;
  std::size_t n = 0;
  double test_loss_nats_per_example = 0.0;
  double edl_nats = 0.0;
  double edl_per_example = 0.0; // nats
  double edl_per_token = 0.0;   // nats
  std::size_t token_count = 0;
  std::optional<double> edl_per_parameter; // nats
  std::optional<double> regret_vs_final_nats;
  std::optional<double> sdl_nats;

  double edl_bits() const { return nats_to_bits(edl_nats); }

  // Internal-consistency check; returns a description of the first violation.
  std::optional<std::string> violation() const
  {
    double const expect = mdl_nats - static_cast<double>(n) * test_loss_nats_per_example;
    if (std::abs(edl_nats - expect) > 1e-9 * std::max(1.0, std::abs(mdl_nats)))
      return "edl != mdl - n * test_loss";
    if (sdl_nats && edl_nats > *sdl_nats + 1e-9 * std::max(1.0, std::abs(mdl_nats)))
      return "edl exceeds sdl";
    if (!std::isfinite(mdl_nats) || !std::isfinite(edl_nats))
      return "non-finite report";
    return std::nullopt;
  }

  nlohmann::json to_json() const
  {
    auto opt = [](std::optional<double> v) {
      return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    return {{"mdl_nats", mdl_nats},
            {"n", n},
            {"test_loss_nats", test_loss_nats_per_example},
            {"edl_nats", edl_nats},
            {"edl_bits", edl_bits()},
            {"edl_bits_per_example", nats_to_bits(edl_per_example)},
            {"edl_bits_per_token", nats_to_bits(edl_per_token)},
            {"edl_bits_per_parameter",
             edl_per_parameter ? nlohmann::json(nats_to_bits(*edl_per_parameter)) : nullptr},
            {"regret_nats", opt(regret_vs_final_nats)},
            {"sdl_nats", opt(sdl_nats)}};
  }
};

inline EdlReport edl(PrequentialTrace const &trace, double test_loss_value,
                     std::size_t token_count, std::optional<std::size_t> parameter_count = {})
{
  if (token_count < trace.n)
    throw ArgumentError("token_count must be >= n");
  EdlReport r;
  r.mdl_nats = trace.mdl_nats();
  r.n = trace.n;
  r.test_loss_nats_per_example = test_loss_value;
  r.edl_nats = r.mdl_nats - static_cast<double>(trace.n) * test_loss_value;
  r.token_count = token_count;
  r.edl_per_example = trace.n ? r.edl_nats / static_cast<double>(trace.n) : 0.0;
  r.edl_per_token = token_count ? r.edl_nats / static_cast<double>(token_count) : 0.0;
  if (parameter_count && *parameter_count > 0)
    r.edl_per_parameter = r.edl_nats / static_cast<double>(*parameter_count);
  return r;
}

/// Sum of codelengths a fixed state assigns to the dataset, in order.
inline double cumulative_loss(LearnerState const &state, LabeledDataset const &dataset)
{
  stats::Sum s;
  for (auto const &ex : dataset.examples())
    s += codelength(state.predict(ex.input), ex.label).nats();
  return s.value();
}

/// R_n(comparator) = MDL - sum_i loss(comparator; x_i, y_i).
inline double regret_vs_comparator(PrequentialTrace const &trace, LearnerState const &comparator,
                                   LabeledDataset const &dataset)
{
  if (trace.n != dataset.size() || trace.step_codelengths.size() != dataset.size())
    throw ArgumentError("trace and dataset lengths differ");
  return trace.mdl_nats() - cumulative_loss(comparator, dataset);
}

/// SDL = MDL - n L*.
inline double sdl(PrequentialTrace const &trace, double optimal_loss)
{
  return trace.mdl_nats() - static_cast<double>(trace.n) * optimal_loss;
}

struct AuditRecord
{
  std::size_t n = 0;
  double initial_loss = 0.0;    // L(theta_0)
  double trajectory_mean = 0.0; // mean of L(theta_{i-1}), i = 1..n
  double final_loss = 0.0;      // L(theta*)

  // n (Lbar - L(theta*)): the expected EDL given this trajectory.
  double expected_edl() const
  {
    return static_cast<double>(n) * (trajectory_mean - final_loss);
  }
};

/// Exact population losses along a trajectory. trajectory_states holds the
/// n states that scored examples 1..n (theta_0 .. theta_{n-1}).
inline AuditRecord generalization_audit(std::span<LearnerState const> trajectory_states,
                                        LearnerState const &final, ToySpec const &truth)
{
  if (trajectory_states.empty())
    throw ArgumentError("audit needs at least one trajectory state");
  AuditRecord r;
  r.n = trajectory_states.size();
  double s = 0.0;
  for (std::size_t i = 0; i < trajectory_states.size(); ++i)
  {
    double const L = population_loss_exact(trajectory_states[i], truth);
    if (i == 0)
      r.initial_loss = L;
    s += L;
  }
  r.trajectory_mean = s / static_cast<double>(r.n);
  r.final_loss = population_loss_exact(final, truth);
  return r;
}

/// Same audit without materializing the trajectory: runs the pass and
/// evaluates L(theta_{i-1}) on the fly. Also returns the realized trace.
inline std::pair<AuditRecord, PrequentialTrace>
audited_run(LabeledDataset const &dataset, LearnerState initial, ToySpec const &truth,
            LearnerState *final_state = nullptr)
{
  double s = 0.0, first = 0.0;
  std::size_t count = 0;
  auto [trace, state] = run_prequential(dataset, std::move(initial), 1,
                                        [&](LearnerState const &st, std::size_t) {
                                          double const L = population_loss_exact(st, truth);
                                          if (count++ == 0)
                                            first = L;
                                          s += L;
                                        });
  AuditRecord r;
  r.n = dataset.size();
  r.initial_loss = first;
  r.trajectory_mean = s / static_cast<double>(r.n);
  r.final_loss = population_loss_exact(state, truth);
  if (final_state)
    *final_state = std::move(state);
  return {r, std::move(trace)};
}

struct DecompositionCheck
{
  double mean_edl = 0.0;
  double mean_expected = 0.0;
  double standard_error = 0.0; // of the paired difference
  bool within_3se = false;
};

/// Monte-Carlo check of E[EDL] = n (Lbar - L(theta*)) over independent runs:
/// the paired difference MDL - n Lbar has mean zero.
inline DecompositionCheck check_decomposition(std::span<AuditRecord const> audits,
                                              std::span<double const> edls)
{
  if (audits.size() != edls.size() || audits.size() < 2)
    throw ArgumentError("need matching audits and EDL values (>= 2 runs)");
  std::vector<double> diff(edls.size()), expected(edls.size());
  for (std::size_t i = 0; i < edls.size(); ++i)
  {
    expected[i] = audits[i].expected_edl();
    diff[i] = edls[i] - expected[i];
  }
  DecompositionCheck c;
  c.mean_edl = stats::mean(edls);
  c.mean_expected = stats::mean(expected);
  c.standard_error = stats::standard_error(diff);
  c.within_3se = std::abs(stats::mean(diff)) <= 3.0 * c.standard_error + 1e-12;
  return c;
}

/// One full measurement: prequential pass, continued training, test loss
/// (exact population loss when `truth` is given, otherwise the test set),
/// regret against the final state, and SDL when L* is known.
struct Measurement
{
  PrequentialTrace trace;
  LearnerState final_state;
  EdlReport report;
};

inline Measurement measure(LabeledDataset const &train, LearnerState initial,
                           StoppingRule const &rule, std::uint64_t seed,
                           ToySpec const *truth = nullptr,
                           LabeledDataset const *test_set = nullptr, std::size_t batch_size = 1)
{
  auto [trace, state] = run_prequential(train, std::move(initial), batch_size);
  auto final_state = continue_training(std::move(state), train, rule, seed, batch_size);
  double L;
  if (truth)
    L = population_loss_exact(final_state, *truth);
  else if (test_set)
    L = test_loss(final_state, *test_set);
  else
    throw ArgumentError("measure needs a toy truth or a test set");
  auto report = edl(trace, L, train.token_count(), final_state.parameter_count());
  report.regret_vs_final_nats = regret_vs_comparator(trace, final_state, train);
  if (truth && truth->optimal_loss())
    report.sdl_nats = sdl(trace, *truth->optimal_loss());
  return {std::move(trace), std::move(final_state), std::move(report)};
}

} // namespace edl
