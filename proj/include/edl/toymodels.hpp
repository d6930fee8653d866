#pragma once

// Generators for the five toy settings and their closed-form EDL oracles.
// Every toy has a finite, enumerable population, so population losses are
// computed exactly rather than sampled.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "learners.hpp"
#include "random.hpp"

namespace edl
{

enum class ToyKind
{
  random_labels,
  hypothesis_collapse,
  disjoint_mixture,
  coupon_collector,
  format_learning
};

inline std::string_view to_string(ToyKind kind)
{
  switch (kind)
  {
  case ToyKind::random_labels: return "random_labels";
  case ToyKind::hypothesis_collapse: return "hypothesis_collapse";
  case ToyKind::disjoint_mixture: return "disjoint_mixture";
  case ToyKind::coupon_collector: return "coupon_collector";
  case ToyKind::format_learning: return "format_learning";
  }
  return "?";
}

inline ToyKind toy_kind_from_string(std::string_view s)
{
  for (auto k : {ToyKind::random_labels, ToyKind::hypothesis_collapse, ToyKind::disjoint_mixture,
                 ToyKind::coupon_collector, ToyKind::format_learning})
    if (to_string(k) == s)
      return k;
  throw ConfigError("unknown toy kind '" + std::string(s) + "'");
}

struct MixtureComponent
{
  double weight = 1.0;     // pi_j
  double delta_nats = 0.0; // loss reduction once mastered
  std::int64_t support_tag = 0;
};

struct FormatTaskParams
{
  double n_F = 1;
  double n_C = 1;
  double L_F0 = 0.0;
  double L_C0 = 0.0;

  void validate() const
  {
    if (!(n_F > 0) || !(n_C > 0) || L_F0 < 0 || L_C0 < 0)
      throw ArgumentError("format params: n_F, n_C > 0 and losses >= 0 required");
    if (n_F > n_C)
      throw ArgumentError("format params: n_F must not exceed n_C");
  }
};

struct RandomLabelsParams
{
  std::size_t k = 2;
};

// `graded` places one input per hypothesis digit with input probabilities
// 1/2, 1/4, ..., so rarer digits stay unresolved for longer.
struct HypothesisParams
{
  std::size_t m = 4;
  std::size_t k = 4;
  std::size_t input_space_size = 64;
  bool graded = false;
};

struct MixtureParams
{
  std::vector<MixtureComponent> components;
  std::size_t k = 2;
  std::size_t inputs_per_component = 8;
  std::optional<std::size_t> trained_component; // train only on this component
};

struct CouponParams
{
  std::size_t K = 1;
  std::size_t k = 2;
};

struct FormatWorldParams
{
  std::size_t concepts = 10;
  std::size_t k_format = 4;
  std::size_t k_capability = 4;
};

using ToyParams = std::variant<RandomLabelsParams, HypothesisParams, MixtureParams, CouponParams,
                               FormatWorldParams>;

struct WeightedExample
{
  Example example;
  double weight;
};

// Materialized truth of a toy setting.
struct ToyWorld
{
  std::size_t k = 2;
  std::vector<WeightedExample> population; // enumerable test distribution
  std::vector<WeightedExample> training;   // distribution training data is drawn from
  bool fresh_inputs = false;               // random labels: every draw is a new input
  std::optional<double> optimal_loss;      // L*, nats per example

  std::shared_ptr<HypothesisClass const> hypotheses;
  std::size_t truth = 0;
  std::optional<Example> diagnostic;
  std::shared_ptr<std::vector<MasteryComponent> const> components;
};

namespace detail
{
inline std::shared_ptr<ToyWorld const> materialize(ToyParams const &params, std::uint64_t seed);
}

class ToySpec
{
public:
  ToySpec(ToyParams params, std::uint64_t seed)
      : params_(std::move(params)), seed_(seed), world_(detail::materialize(params_, seed_))
  {}

  ToyKind kind() const { return static_cast<ToyKind>(params_.index()); }
  ToyParams const &params() const { return params_; }
  std::uint64_t seed() const { return seed_; }
  ToyWorld const &world() const { return *world_; }
  std::size_t k() const { return world_->k; }
  std::optional<double> optimal_loss() const { return world_->optimal_loss; }

  // Draw n training examples. `rng` drives the draws; the world (rules,
  // tables, labels) is fixed by the spec seed. Fresh-input toys number their
  // inputs from `first_id`.
  LabeledDataset sample(std::size_t n, Rng &rng, std::int64_t first_id = 0) const
  {
    return draw(world_->training, n, rng, first_id);
  }

  // Draw n examples from the full population (test distribution).
  LabeledDataset sample_population(std::size_t n, Rng &rng, std::int64_t first_id = 0) const
  {
    return draw(world_->population, n, rng, first_id);
  }

private:
  LabeledDataset draw(std::vector<WeightedExample> const &from, std::size_t n, Rng &rng,
                      std::int64_t first_id) const
  {
    std::vector<Example> out;
    out.reserve(n);
    bool const equal = std::all_of(from.begin(), from.end(), [&](auto const &w) {
      return w.weight == from.front().weight;
    });
    std::vector<double> cumulative;
    if (!equal)
    {
      double acc = 0.0;
      for (auto const &w : from)
        cumulative.push_back(acc += w.weight);
    }
    for (std::size_t i = 0; i < n; ++i)
    {
      std::size_t pick;
      if (equal)
        pick = static_cast<std::size_t>(rng.index(from.size()));
      else
      {
        double const u = rng.uniform() * cumulative.back();
        pick = static_cast<std::size_t>(
            std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
        pick = std::min(pick, from.size() - 1);
      }
      Example ex = from[pick].example;
      if (world_->fresh_inputs)
        ex.input.id = first_id + static_cast<std::int64_t>(i);
      out.push_back(std::move(ex));
    }
    return LabeledDataset(std::move(out), LabelSpace{world_->k});
  }

  ToyParams params_;
  std::uint64_t seed_;
  std::shared_ptr<ToyWorld const> world_;
};

namespace detail
{

inline std::size_t digits_needed(std::size_t m, std::size_t k)
{
  std::size_t r = 1, span = k;
  while (span < m)
  {
    span *= k;
    ++r;
  }
  return r;
}

// Hypothesis j at an input testing digit d predicts (digit_d(j) + offset) mod k.
// Inputs testing digit 0 split the class into k groups of m/k.
inline std::shared_ptr<ToyWorld const> hypothesis_world(HypothesisParams const &p,
                                                        std::uint64_t seed)
{
  if (p.k < 2 || p.m == 0 || p.m % p.k != 0)
    throw ArgumentError("hypothesis collapse needs k >= 2 and k dividing m");
  if (p.k > 65535)
    throw ArgumentError("hypothesis tables hold labels below 65536");
  Rng rng(hash_seed({seed, 0x4879}));
  auto const r = digits_needed(p.m, p.k);
  std::size_t const n_inputs = p.graded ? r : p.input_space_size;
  if (n_inputs < (p.graded ? 1u : 2u))
    throw ArgumentError("input_space_size must be >= 2");

  std::vector<std::size_t> digit_of(n_inputs), offset(n_inputs);
  std::vector<double> weight(n_inputs);
  for (std::size_t x = 0; x < n_inputs; ++x)
  {
    digit_of[x] = x % r;
    offset[x] = static_cast<std::size_t>(rng.index(p.k));
    if (p.graded)
      weight[x] = x + 1 < n_inputs ? std::ldexp(1.0, -static_cast<int>(x + 1))
                                   : std::ldexp(1.0, -static_cast<int>(n_inputs - 1));
    else
      weight[x] = 1.0 / static_cast<double>(n_inputs);
  }

  auto cls = std::make_shared<HypothesisClass>();
  cls->m = p.m;
  cls->k = p.k;
  cls->input_space_size = n_inputs;
  cls->table.resize(p.m * n_inputs);
  std::vector<std::size_t> power(r, 1);
  for (std::size_t d = 1; d < r; ++d)
    power[d] = power[d - 1] * p.k;
  for (std::size_t j = 0; j < p.m; ++j)
    for (std::size_t x = 0; x < n_inputs; ++x)
    {
      auto const digit = (j / power[digit_of[x]]) % p.k;
      cls->table[j * n_inputs + x] = static_cast<std::uint16_t>((digit + offset[x]) % p.k);
    }

  auto world = std::make_shared<ToyWorld>();
  world->k = p.k;
  world->truth = static_cast<std::size_t>(rng.index(p.m));
  for (std::size_t x = 0; x < n_inputs; ++x)
  {
    Example ex{Input{static_cast<std::int64_t>(x), {}}, (*cls)(world->truth, x)};
    world->population.push_back({ex, weight[x]});
  }
  world->training = world->population;
  world->diagnostic = world->population.front().example;
  world->optimal_loss = 0.0;
  world->hypotheses = std::move(cls);
  return world;
}

inline std::shared_ptr<ToyWorld const> materialize(ToyParams const &params, std::uint64_t seed)
{
  auto world = std::make_shared<ToyWorld>();
  Rng rng(hash_seed({seed, 0x746f79}));
  auto uniform_population = [&](std::vector<Example> const &support) {
    for (auto const &ex : support)
      world->population.push_back({ex, 1.0 / static_cast<double>(support.size())});
    world->training = world->population;
  };

  if (auto const *p = std::get_if<RandomLabelsParams>(&params))
  {
    LabelSpace{p->k};
    world->k = p->k;
    world->fresh_inputs = true;
    std::vector<Example> support;
    for (std::size_t y = 0; y < p->k; ++y)
      support.push_back({Input{-1, {}}, y});
    uniform_population(support);
    world->optimal_loss = std::log(static_cast<double>(p->k));
    return world;
  }
  if (auto const *p = std::get_if<HypothesisParams>(&params))
    return hypothesis_world(*p, seed);
  if (auto const *p = std::get_if<CouponParams>(&params))
  {
    if (p->K == 0)
      throw ArgumentError("coupon needs K >= 1");
    LabelSpace{p->k};
    world->k = p->k;
    std::vector<Example> support;
    for (std::size_t c = 0; c < p->K; ++c)
      support.push_back({Input{static_cast<std::int64_t>(c), {}},
                         static_cast<std::size_t>(rng.index(p->k))});
    uniform_population(support);
    world->optimal_loss = 0.0;
    return world;
  }
  if (auto const *p = std::get_if<FormatWorldParams>(&params))
  {
    if (p->concepts == 0)
      throw ArgumentError("format world needs at least one concept");
    LabelSpace{p->k_format};
    LabelSpace{p->k_capability};
    world->k = p->k_format * p->k_capability;
    auto const format = static_cast<std::size_t>(rng.index(p->k_format));
    std::vector<Example> support;
    for (std::size_t c = 0; c < p->concepts; ++c)
    {
      auto const answer = static_cast<std::size_t>(rng.index(p->k_capability));
      support.push_back({Input{static_cast<std::int64_t>(c), {}}, format * p->k_capability + answer});
    }
    uniform_population(support);
    world->optimal_loss = 0.0;
    return world;
  }

  auto const &p = std::get<MixtureParams>(params);
  LabelSpace{p.k};
  if (p.components.empty() || p.inputs_per_component == 0)
    throw ArgumentError("mixture needs components and inputs");
  double total = 0.0;
  std::vector<std::int64_t> tags;
  for (auto const &c : p.components)
  {
    if (!(c.weight > 0.0 && c.weight <= 1.0) || c.delta_nats < 0.0)
      throw ArgumentError("mixture component weight must be in (0,1], delta >= 0");
    total += c.weight;
    tags.push_back(c.support_tag);
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw ArgumentError("mixture weights must sum to 1");
  std::sort(tags.begin(), tags.end());
  if (std::adjacent_find(tags.begin(), tags.end()) != tags.end())
    throw ArgumentError("mixture support tags must be distinct");
  if (p.trained_component && *p.trained_component >= p.components.size())
    throw ArgumentError("trained component index out of range");

  world->k = p.k;
  auto comps = std::make_shared<std::vector<MasteryComponent>>();
  auto const per = p.inputs_per_component;
  for (std::size_t j = 0; j < p.components.size(); ++j)
  {
    auto const &c = p.components[j];
    MasteryComponent mc;
    mc.first_id = c.support_tag * static_cast<std::int64_t>(per);
    mc.delta_nats = c.delta_nats;
    for (std::size_t i = 0; i < per; ++i)
    {
      mc.labels.push_back(static_cast<std::size_t>(rng.index(p.k)));
      Example ex{Input{mc.first_id + static_cast<std::int64_t>(i), {}}, mc.labels.back()};
      double const w = c.weight / static_cast<double>(per);
      world->population.push_back({ex, w});
      if (!p.trained_component || *p.trained_component == j)
        world->training.push_back({ex, w});
    }
    comps->push_back(std::move(mc));
  }
  world->components = std::move(comps);
  world->optimal_loss = 0.0;
  return world;
}

} // namespace detail

// Generators.

inline std::pair<LabeledDataset, LabeledDataset> gen_random_labels(std::size_t n, std::size_t k,
                                                                   std::uint64_t seed)
{
  ToySpec spec(RandomLabelsParams{k}, seed);
  Rng train_rng(hash_seed({seed, 1})), test_rng(hash_seed({seed, 2}));
  return {spec.sample(n, train_rng, 0),
          spec.sample(n, test_rng, static_cast<std::int64_t>(n))};
}

inline std::pair<ToySpec, Example> gen_hypothesis_collapse(std::size_t m, std::size_t k,
                                                           std::size_t input_space_size,
                                                           std::uint64_t seed)
{
  ToySpec spec(HypothesisParams{m, k, input_space_size, false}, seed);
  return {spec, *spec.world().diagnostic};
}

inline std::pair<ToySpec, LabeledDataset>
gen_disjoint_mixture(std::vector<MixtureComponent> components, std::size_t n,
                     std::optional<std::size_t> trained_component, std::uint64_t seed,
                     std::size_t k = 2, std::size_t inputs_per_component = 8)
{
  ToySpec spec(MixtureParams{std::move(components), k, inputs_per_component, trained_component},
               seed);
  Rng rng(hash_seed({seed, 3}));
  auto train = spec.sample(n, rng);
  return {std::move(spec), std::move(train)};
}

inline LabeledDataset gen_coupon(std::size_t K, std::size_t n, std::size_t k, std::uint64_t seed)
{
  ToySpec spec(CouponParams{K, k}, seed);
  Rng rng(hash_seed({seed, 4}));
  return spec.sample(n, rng);
}

// Linearly separable feature data for the SGD learner: x uniform in
// [-1,1]^d plus a trailing bias feature, labelled by argmax of a random
// linear map, keeping only points with logit margin >= `margin`.
inline LabeledDataset gen_separable(std::size_t n, std::size_t d, std::size_t k, double margin,
                                    std::uint64_t seed)
{
  LabelSpace{k};
  Rng rng(hash_seed({seed, 5}));
  std::vector<double> truth(k * (d + 1));
  for (double &w : truth)
    w = rng.uniform(-1.0, 1.0);
  std::vector<Example> out;
  while (out.size() < n)
  {
    std::vector<double> x(d + 1, 1.0);
    for (std::size_t j = 0; j < d; ++j)
      x[j] = rng.uniform(-1.0, 1.0);
    std::vector<double> z(k, 0.0);
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t j = 0; j <= d; ++j)
        z[c] += truth[c * (d + 1) + j] * x[j];
    auto best = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
    double runner_up = -1e300;
    for (std::size_t c = 0; c < k; ++c)
      if (c != best)
        runner_up = std::max(runner_up, z[c]);
    if (z[best] - runner_up < margin)
      continue;
    out.push_back({Input{static_cast<std::int64_t>(out.size()), std::move(x)}, best});
  }
  return LabeledDataset(std::move(out), LabelSpace{k});
}

// Train and test sets labelled by the same hidden linear map.
inline std::pair<LabeledDataset, LabeledDataset> gen_separable_split(std::size_t n_train,
                                                                     std::size_t n_test,
                                                                     std::size_t d, std::size_t k,
                                                                     double margin,
                                                                     std::uint64_t seed)
{
  auto const all = gen_separable(n_train + n_test, d, k, margin, seed);
  std::vector<std::size_t> head(n_train), tail(n_test);
  std::iota(head.begin(), head.end(), std::size_t{0});
  std::iota(tail.begin(), tail.end(), n_train);
  return {all.select(head), all.select(tail)};
}

// Oracles.

/// Expected EDL for the coupon model with K concepts and per-concept
/// improvement delta: delta * (K(1 - e^{-u}) - n e^{-u}), u = n/K.
inline double oracle_coupon_edl(double n, double K, double delta_nats)
{
  if (n < 0 || K < 1 || delta_nats < 0)
    throw ArgumentError("oracle_coupon_edl: n >= 0, K >= 1, delta >= 0");
  double const e = std::exp(-n / K);
  return delta_nats * (K * -std::expm1(-n / K) - n * e);
}

/// Small-n regime of the coupon oracle, delta n^2 / (2K).
inline double oracle_coupon_edl_small_n(double n, double K, double delta_nats)
{
  if (n < 0 || K < 1 || delta_nats < 0)
    throw ArgumentError("oracle_coupon_edl_small_n: n >= 0, K >= 1, delta >= 0");
  return delta_nats * n * n / (2.0 * K);
}

/// Finite-K expectation with exact coverage probabilities: concept draws
/// miss a given concept with probability q = 1 - 1/K, so
/// E[EDL] = delta * (K(1 - q^n) - n q^n).
inline double coupon_edl_exact(std::size_t n, std::size_t K, double delta_nats)
{
  double const q = 1.0 - 1.0 / static_cast<double>(K);
  double const qn = std::pow(q, static_cast<double>(n));
  return delta_nats * (static_cast<double>(K) * (1.0 - qn) - static_cast<double>(n) * qn);
}

/// u = n/K at which E[EDL]/n peaks: root of d/du [(1 - (1+u)e^{-u}) / u] = 0,
/// i.e. e^u = 1 + u + u^2. Solved by bisection.
inline double coupon_peak_u()
{
  auto f = [](double u) { return std::exp(u) - 1.0 - u - u * u; };
  double lo = 1.0, hi = 3.0;
  for (int i = 0; i < 200; ++i)
  {
    double const mid = 0.5 * (lo + hi);
    (f(mid) < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

enum class FormatRegime
{
  learning_both = 1,
  format_learned = 2,
  saturated = 3
};

inline FormatRegime format_regime(double n, FormatTaskParams const &p)
{
  if (n < p.n_F)
    return FormatRegime::learning_both;
  if (n > p.n_C)
    return FormatRegime::saturated;
  return FormatRegime::format_learned;
}

/// Piecewise format/capability oracle: n^2 (L_F0/n_F + L_C0/n_C) below n_F,
/// (n_F L_F0 + n_C L_C0)/2 above n_C, and a linear bridge between the two
/// endpoint values in between.
inline double oracle_format_edl(double n, FormatTaskParams const &p)
{
  p.validate();
  if (n < 0)
    throw ArgumentError("n must be non-negative");
  double const rate = p.L_F0 / p.n_F + p.L_C0 / p.n_C;
  double const saturated = (p.n_F * p.L_F0 + p.n_C * p.L_C0) / 2.0;
  switch (format_regime(n, p))
  {
  case FormatRegime::learning_both: return n * n * rate;
  case FormatRegime::saturated: return saturated;
  case FormatRegime::format_learned:
    break;
  }
  double const start = p.n_F * p.n_F * rate;
  if (p.n_C == p.n_F)
    return saturated;
  double const t = (n - p.n_F) / (p.n_C - p.n_F);
  return start + t * (saturated - start);
}

struct ToyOracleCurve
{
  std::vector<double> n_values;
  std::vector<double> expected_edl_nats;
  std::vector<int> regime_labels;
};

inline ToyOracleCurve coupon_curve(std::vector<double> const &n_grid, double K, double delta)
{
  ToyOracleCurve c;
  for (double n : n_grid)
  {
    c.n_values.push_back(n);
    c.expected_edl_nats.push_back(oracle_coupon_edl(n, K, delta));
    // 1: coverage building, 2: around the peak, 3: full coverage
    double const u = n / K;
    c.regime_labels.push_back(u < 1.0 ? 1 : (u <= 2.5 ? 2 : 3));
  }
  return c;
}

inline ToyOracleCurve format_curve(std::vector<double> const &n_grid, FormatTaskParams const &p)
{
  ToyOracleCurve c;
  for (double n : n_grid)
  {
    c.n_values.push_back(n);
    c.expected_edl_nats.push_back(oracle_format_edl(n, p));
    c.regime_labels.push_back(static_cast<int>(format_regime(n, p)));
  }
  return c;
}

/// A learner whose codelength at step i is exactly schedule[i] (and
/// final_loss afterwards). Inputs must carry the target label as their id.
inline LearnerState scripted_learner(std::vector<double> loss_schedule, double final_loss = 0.0,
                                     std::size_t k = 2)
{
  LabelSpace{k};
  double const ceiling = -std::log(clamp_floor);
  for (double v : loss_schedule)
  {
    if (v < 0.0)
      throw ArgumentError("scripted losses must be non-negative");
    if (v > ceiling)
      throw ArgumentError("scripted loss exceeds the largest reachable codelength");
  }
  if (final_loss < 0.0 || final_loss > ceiling)
    throw ArgumentError("scripted final loss out of range");
  return learner::Scripted{k, std::move(loss_schedule), final_loss};
}

// Dataset for a scripted learner: n examples whose input id names the label.
inline LabeledDataset scripted_dataset(std::size_t n, std::size_t k = 2)
{
  std::vector<Example> ex(n, Example{Input{0, {}}, 0});
  return LabeledDataset(std::move(ex), LabelSpace{k});
}

// Linear-learning schedules for the two-component format task.
namespace format_schedule
{

// Step i loss L_F0 (1 - i/n_F) + L_C0 (1 - i/n_C), i = 0..n-1 (valid for n <= n_F).
inline std::vector<double> linear(std::size_t n, FormatTaskParams const &p)
{
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    double const x = static_cast<double>(i);
    s[i] = p.L_F0 * (1.0 - x / p.n_F) + p.L_C0 * (1.0 - x / p.n_C);
  }
  return s;
}

// Closed form of the sum of linear(n, p).
inline double linear_sum(double n, FormatTaskParams const &p)
{
  return n * p.L_F0 - p.L_F0 * n * (n - 1.0) / (2.0 * p.n_F) + n * p.L_C0 -
         p.L_C0 * n * (n - 1.0) / (2.0 * p.n_C);
}

// Each component's loss ramps linearly to zero, sampled at step midpoints so
// the discrete sum of a full ramp of length n_X is exactly n_X L_X0 / 2.
inline std::vector<double> saturating(std::size_t n, FormatTaskParams const &p)
{
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i)
  {
    double const x = static_cast<double>(i) + 0.5;
    s[i] = p.L_F0 * std::max(0.0, 1.0 - x / p.n_F) + p.L_C0 * std::max(0.0, 1.0 - x / p.n_C);
  }
  return s;
}

// Test loss after n examples under linear learning (regime 1).
inline double linear_test_loss(double n, FormatTaskParams const &p)
{
  return p.L_F0 * std::max(0.0, 1.0 - n / p.n_F) + p.L_C0 * std::max(0.0, 1.0 - n / p.n_C);
}

} // namespace format_schedule

// Learner matched to a toy world (the canonical A for each setting).
inline LearnerState matched_learner(ToySpec const &spec)
{
  auto const &w = spec.world();
  switch (spec.kind())
  {
  case ToyKind::random_labels: return make_kt(w.k);
  case ToyKind::hypothesis_collapse: return make_bayesian(w.hypotheses);
  case ToyKind::disjoint_mixture: return make_mastery(w.k, w.components);
  case ToyKind::coupon_collector: return make_concept_table(w.k);
  case ToyKind::format_learning:
  {
    auto const &p = std::get<FormatWorldParams>(spec.params());
    return make_format_capability(p.k_format, p.k_capability);
  }
  }
  throw UnsupportedError("no matched learner");
}

// Declarative config record: {"kind": ..., "parameters": {...}, "seed": ...}.

inline nlohmann::json to_json(ToySpec const &spec)
{
  nlohmann::json params;
  std::visit(
      [&](auto const &p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, RandomLabelsParams>)
          params = {{"k", p.k}};
        else if constexpr (std::is_same_v<T, HypothesisParams>)
          params = {{"m", p.m}, {"k", p.k}, {"input_space_size", p.input_space_size},
                    {"graded", p.graded}};
        else if constexpr (std::is_same_v<T, CouponParams>)
          params = {{"K", p.K}, {"k", p.k}};
        else if constexpr (std::is_same_v<T, FormatWorldParams>)
          params = {{"concepts", p.concepts}, {"k_format", p.k_format},
                    {"k_capability", p.k_capability}};
        else
        {
          nlohmann::json comps = nlohmann::json::array();
          for (auto const &c : p.components)
            comps.push_back(
                {{"weight", c.weight}, {"delta_nats", c.delta_nats}, {"support_tag", c.support_tag}});
          params = {{"components", comps}, {"k", p.k},
                    {"inputs_per_component", p.inputs_per_component}};
          if (p.trained_component)
            params["trained_component"] = *p.trained_component;
        }
      },
      spec.params());
  return {{"kind", to_string(spec.kind())}, {"parameters", params}, {"seed", spec.seed()}};
}

inline ToySpec toy_spec_from_json(nlohmann::json const &j)
{
  try
  {
    auto const kind = toy_kind_from_string(j.at("kind").get<std::string>());
    auto const &p = j.contains("parameters") ? j.at("parameters") : nlohmann::json::object();
    std::uint64_t const seed = j.value("seed", std::uint64_t{0});
    switch (kind)
    {
    case ToyKind::random_labels: return ToySpec(RandomLabelsParams{p.at("k")}, seed);
    case ToyKind::hypothesis_collapse:
      return ToySpec(HypothesisParams{p.at("m"), p.at("k"), p.value("input_space_size", 64u),
                                      p.value("graded", false)},
                     seed);
    case ToyKind::coupon_collector: return ToySpec(CouponParams{p.at("K"), p.at("k")}, seed);
    case ToyKind::format_learning:
      return ToySpec(FormatWorldParams{p.at("concepts"), p.at("k_format"), p.at("k_capability")},
                     seed);
    case ToyKind::disjoint_mixture:
    {
      MixtureParams mp;
      for (auto const &c : p.at("components"))
        mp.components.push_back({c.at("weight"), c.at("delta_nats"), c.at("support_tag")});
      mp.k = p.value("k", std::size_t{2});
      mp.inputs_per_component = p.value("inputs_per_component", std::size_t{8});
      if (p.contains("trained_component"))
        mp.trained_component = p.at("trained_component").get<std::size_t>();
      return ToySpec(std::move(mp), seed);
    }
    }
  }
  catch (nlohmann::json::exception const &e)
  {
    throw ConfigError(std::string("bad toy spec: ") + e.what());
  }
  catch (ArgumentError const &e)
  {
    throw ConfigError(std::string("bad toy spec: ") + e.what());
  }
  throw ConfigError("bad toy spec");
}

} // namespace edl
