#pragma once

// Online learners: predict a distribution, then update on the observed
// example. Every update is deterministic given (state, example), so two
// parties replaying the same examples hold byte-identical states.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "core.hpp"
#include "random.hpp"
#include "serialize.hpp"

namespace edl
{

// m deterministic label functions tabulated over inputs [0, input_space_size).
struct HypothesisClass
{
  std::size_t m = 0;
  std::size_t k = 0;
  std::size_t input_space_size = 0;
  std::vector<std::uint16_t> table; // row-major: table[j * input_space_size + x]

  std::size_t operator()(std::size_t j, std::size_t x) const
  {
    return table[j * input_space_size + x];
  }

  std::uint64_t digest() const
  {
    Fnv1a h;
    h.u64(m).u64(k).u64(input_space_size);
    for (auto v : table)
      h.u64(v);
    return h.digest();
  }
};

// One tag-disjoint block of inputs [first_id, first_id + labels.size()) with a
// fixed rule (labels[i] for input first_id + i) and a loss reduction of
// delta_nats once the block is mastered.
struct MasteryComponent
{
  std::int64_t first_id = 0;
  double delta_nats = 0.0;
  std::vector<std::size_t> labels;

  bool contains(std::int64_t id) const
  {
    return id >= first_id && id < first_id + static_cast<std::int64_t>(labels.size());
  }
};

namespace learner
{

/// Predicts uniform forever and never changes.
struct Uniform
{
  std::size_t k;

  PredictiveDistribution predict(Input const &, std::uint64_t) const
  {
    return PredictiveDistribution::uniform(k);
  }
  void observe(Example const &) {}
  void write(ByteWriter &w) const { w.u64(k); }
};

/// Krichevsky-Trofimov estimator: p(y) = (count_y + 1/2) / (total + k/2).
/// Ignores inputs.
struct KT
{
  std::vector<std::uint64_t> counts;

  PredictiveDistribution predict(Input const &, std::uint64_t) const
  {
    double const k = static_cast<double>(counts.size());
    std::uint64_t total = 0;
    for (auto c : counts)
      total += c;
    double const denom = static_cast<double>(total) + k / 2.0;
    std::vector<double> p(counts.size());
    for (std::size_t y = 0; y < counts.size(); ++y)
      p[y] = (static_cast<double>(counts[y]) + 0.5) / denom;
    return PredictiveDistribution(std::move(p));
  }
  void observe(Example const &ex) { ++counts.at(ex.label); }
  void write(ByteWriter &w) const
  {
    w.u64(counts.size());
    for (auto c : counts)
      w.u64(c);
  }
};

/// Bayesian model average over a finite class of deterministic hypotheses.
/// `weights` holds prior times likelihood (unnormalized); with deterministic
/// hypotheses the likelihood is 0 or 1.
struct Bayesian
{
  std::shared_ptr<HypothesisClass const> hypotheses;
  std::vector<double> weights;

  std::size_t input_index(Input const &in) const
  {
    if (in.id < 0 || static_cast<std::size_t>(in.id) >= hypotheses->input_space_size)
      throw ArgumentError("input id outside the hypothesis input space");
    return static_cast<std::size_t>(in.id);
  }

  PredictiveDistribution predict(Input const &in, std::uint64_t) const
  {
    auto const x = input_index(in);
    std::vector<double> p(hypotheses->k, 0.0);
    double total = 0.0;
    for (std::size_t j = 0; j < hypotheses->m; ++j)
    {
      if (weights[j] == 0.0)
        continue;
      p[(*hypotheses)(j, x)] += weights[j];
      total += weights[j];
    }
    for (double &v : p)
      v /= total;
    return PredictiveDistribution(std::move(p));
  }

  void observe(Example const &ex)
  {
    auto const x = input_index(ex.input);
    double remaining = 0.0;
    for (std::size_t j = 0; j < hypotheses->m; ++j)
    {
      if ((*hypotheses)(j, x) != ex.label)
        weights[j] = 0.0;
      remaining += weights[j];
    }
    if (remaining == 0.0)
      throw ContradictionError("no hypothesis is consistent with the observed example");
  }

  std::vector<double> posterior() const
  {
    double total = 0.0;
    for (double w : weights)
      total += w;
    std::vector<double> out(weights.size());
    for (std::size_t j = 0; j < weights.size(); ++j)
      out[j] = weights[j] / total;
    return out;
  }

  // Shannon entropy of the posterior, nats.
  double posterior_entropy() const
  {
    double h = 0.0;
    for (double p : posterior())
      if (p > 0.0)
        h -= p * std::log(p);
    return h;
  }

  std::size_t survivors() const
  {
    return static_cast<std::size_t>(
        std::count_if(weights.begin(), weights.end(), [](double w) { return w > 0.0; }));
  }

  void write(ByteWriter &w) const
  {
    w.u64(hypotheses->digest()).u64(weights.size());
    for (double v : weights)
      w.f64(v);
  }
};

/// Multinomial logistic regression trained by plain SGD on cross-entropy.
/// weights is k x d, row-major.
struct Softmax
{
  std::size_t k;
  std::size_t d;
  std::vector<double> weights;
  double learning_rate = 0.1;

  void check(Input const &in) const
  {
    if (in.features.size() != d)
      throw ArgumentError("feature length " + std::to_string(in.features.size()) +
                          " does not match d=" + std::to_string(d));
  }

  std::vector<double> logits(std::span<double const> x) const
  {
    std::vector<double> z(k, 0.0);
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t j = 0; j < d; ++j)
        z[c] += weights[c * d + j] * x[j];
    return z;
  }

  PredictiveDistribution predict(Input const &in, std::uint64_t) const
  {
    check(in);
    auto z = logits(in.features);
    double const zmax = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double &v : z)
    {
      v = std::exp(v - zmax);
      total += v;
    }
    for (double &v : z)
      v /= total;
    return PredictiveDistribution(std::move(z));
  }

  // d(-log softmax(Wx)_y)/dW = (p - e_y) x^T
  std::vector<double> gradient(Example const &ex) const
  {
    auto const p = predict(ex.input, 0);
    std::vector<double> g(k * d);
    for (std::size_t c = 0; c < k; ++c)
    {
      double const r = p[c] - (c == ex.label ? 1.0 : 0.0);
      for (std::size_t j = 0; j < d; ++j)
        g[c * d + j] = r * ex.input.features[j];
    }
    return g;
  }

  void step(std::span<double const> grad, double scale)
  {
    for (std::size_t i = 0; i < weights.size(); ++i)
      weights[i] -= learning_rate * scale * grad[i];
    for (double w : weights)
      if (!std::isfinite(w))
        throw ArgumentError("softmax weights diverged");
  }

  void observe(Example const &ex) { step(gradient(ex), 1.0); }

  // One SGD step on the mean gradient of the batch.
  void observe_batch(std::span<Example const> batch)
  {
    std::vector<double> g(k * d, 0.0);
    for (auto const &ex : batch)
    {
      auto const gi = gradient(ex);
      for (std::size_t i = 0; i < g.size(); ++i)
        g[i] += gi[i];
    }
    step(g, 1.0 / static_cast<double>(batch.size()));
  }

  void write(ByteWriter &w) const
  {
    w.u64(k).u64(d).f64(learning_rate);
    for (double v : weights)
      w.f64(v);
  }
};

/// Memorizes the label of each concept id. Point mass on seen concepts,
/// uniform on unseen ones.
struct ConceptTable
{
  std::size_t k;
  std::map<std::int64_t, std::size_t> memory;

  PredictiveDistribution predict(Input const &in, std::uint64_t) const
  {
    auto it = memory.find(in.id);
    if (it == memory.end())
      return PredictiveDistribution::uniform(k);
    return PredictiveDistribution::point_mass(k, it->second);
  }
  void observe(Example const &ex)
  {
    if (ex.input.id >= 0)
      memory[ex.input.id] = ex.label;
  }
  void write(ByteWriter &w) const
  {
    w.u64(k).u64(memory.size());
    for (auto const &[c, y] : memory)
      w.i64(c).u64(y);
  }
};

/// Emits a two-point distribution whose codelength on the input's target
/// label (input.id) is schedule[step], or final_loss once the schedule is
/// exhausted. Remaining mass goes to the next label.
struct Scripted
{
  std::size_t k;
  std::vector<double> schedule;
  double final_loss = 0.0;

  PredictiveDistribution predict(Input const &in, std::uint64_t step) const
  {
    if (in.id < 0 || static_cast<std::size_t>(in.id) >= k)
      throw ArgumentError("scripted learner needs the target label as input id");
    auto const target = static_cast<std::size_t>(in.id);
    double const loss = step < schedule.size() ? schedule[step] : final_loss;
    std::vector<double> p(k, 0.0);
    p[target] = std::exp(-loss);
    p[(target + 1) % k] = 1.0 - p[target];
    return PredictiveDistribution(std::move(p));
  }
  void observe(Example const &) {}
  void write(ByteWriter &w) const
  {
    w.u64(k).f64(final_loss).u64(schedule.size());
    for (double v : schedule)
      w.f64(v);
  }
};

/// Two KT components over a product label y = format * k_capability + answer.
/// The format part is context-free; the capability part keeps one KT
/// estimator per concept (input id).
struct FormatCapability
{
  std::size_t k_format;
  std::size_t k_capability;
  std::vector<std::uint64_t> format_counts;
  std::map<std::int64_t, std::vector<std::uint64_t>> capability_counts;

  static double kt(std::span<std::uint64_t const> counts, std::size_t y, std::size_t k)
  {
    std::uint64_t total = 0;
    for (auto c : counts)
      total += c;
    return (static_cast<double>(counts[y]) + 0.5) /
           (static_cast<double>(total) + static_cast<double>(k) / 2.0);
  }

  PredictiveDistribution predict(Input const &in, std::uint64_t) const
  {
    std::vector<std::uint64_t> const empty(k_capability, 0);
    auto it = capability_counts.find(in.id);
    std::span<std::uint64_t const> cap = it == capability_counts.end()
                                             ? std::span<std::uint64_t const>(empty)
                                             : std::span<std::uint64_t const>(it->second);
    std::vector<double> p(k_format * k_capability);
    for (std::size_t f = 0; f < k_format; ++f)
    {
      double const pf = kt(format_counts, f, k_format);
      for (std::size_t a = 0; a < k_capability; ++a)
        p[f * k_capability + a] = pf * kt(cap, a, k_capability);
    }
    return PredictiveDistribution(std::move(p));
  }

  void observe(Example const &ex)
  {
    ++format_counts.at(ex.label / k_capability);
    auto &cap = capability_counts[ex.input.id];
    if (cap.empty())
      cap.assign(k_capability, 0);
    ++cap[ex.label % k_capability];
  }

  void write(ByteWriter &w) const
  {
    w.u64(k_format).u64(k_capability);
    for (auto c : format_counts)
      w.u64(c);
    w.u64(capability_counts.size());
    for (auto const &[id, counts] : capability_counts)
    {
      w.i64(id);
      for (auto c : counts)
        w.u64(c);
    }
  }
};

/// Two-level loss model for a disjoint mixture: on component j the learner
/// pays delta_j nats until it has seen one example from j, then 0.
struct Mastery
{
  std::size_t k;
  std::shared_ptr<std::vector<MasteryComponent> const> components;
  std::vector<bool> mastered;

  std::size_t component_of(Input const &in) const
  {
    for (std::size_t j = 0; j < components->size(); ++j)
      if ((*components)[j].contains(in.id))
        return j;
    throw ArgumentError("input id belongs to no mixture component");
  }

  PredictiveDistribution predict(Input const &in, std::uint64_t) const
  {
    auto const j = component_of(in);
    auto const &comp = (*components)[j];
    auto const target = comp.labels[static_cast<std::size_t>(in.id - comp.first_id)];
    double const p_target = mastered[j] ? 1.0 : std::exp(-comp.delta_nats);
    std::vector<double> p(k, (1.0 - p_target) / static_cast<double>(k - 1));
    p[target] = p_target;
    return PredictiveDistribution(std::move(p));
  }
  void observe(Example const &ex) { mastered[component_of(ex.input)] = true; }
  void write(ByteWriter &w) const
  {
    w.u64(k).u64(mastered.size());
    for (bool b : mastered)
      w.u8(b ? 1 : 0);
  }
};

} // namespace learner

using LearnerVariant = std::variant<learner::Uniform, learner::KT, learner::Bayesian,
                                    learner::Softmax, learner::ConceptTable, learner::Scripted,
                                    learner::FormatCapability, learner::Mastery>;

class LearnerState
{
public:
  template<typename L>
    requires std::is_constructible_v<LearnerVariant, L>
  LearnerState(L learner, std::uint64_t step_count = 0)
      : impl_(std::move(learner)), steps_(step_count)
  {}

  std::string_view kind() const
  {
    static constexpr std::string_view names[] = {"uniform", "kt",      "bayesian",
                                                 "softmax", "concept", "scripted",
                                                 "format_capability", "mastery"};
    return names[impl_.index()];
  }

  std::uint64_t step_count() const { return steps_; }

  std::size_t k() const
  {
    return std::visit(
        [](auto const &l) -> std::size_t {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, learner::KT>)
            return l.counts.size();
          else if constexpr (std::is_same_v<T, learner::Bayesian>)
            return l.hypotheses->k;
          else if constexpr (std::is_same_v<T, learner::FormatCapability>)
            return l.k_format * l.k_capability;
          else
            return l.k;
        },
        impl_);
  }

  PredictiveDistribution predict(Input const &in) const
  {
    return std::visit([&](auto const &l) { return l.predict(in, steps_); }, impl_);
  }

  // In-place update; callers wanting value semantics use edl::update().
  void observe(Example const &ex)
  {
    if (ex.label >= k())
      throw ArgumentError("example label outside the learner's label space");
    std::visit([&](auto &l) { l.observe(ex); }, impl_);
    ++steps_;
  }

  // Batch update: every example contributes to one combined step. Learners
  // without a batch rule apply the examples in order, which is equivalent
  // for count-based learners.
  void observe_batch(std::span<Example const> batch)
  {
    if (batch.empty())
      return;
    for (auto const &ex : batch)
      if (ex.label >= k())
        throw ArgumentError("example label outside the learner's label space");
    std::visit(
        [&](auto &l) {
          if constexpr (requires { l.observe_batch(batch); })
            l.observe_batch(batch);
          else
            for (auto const &ex : batch)
              l.observe(ex);
        },
        impl_);
    steps_ += batch.size();
  }

  std::optional<std::size_t> parameter_count() const
  {
    return std::visit(
        [](auto const &l) -> std::optional<std::size_t> {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, learner::KT>)
            return l.counts.size();
          else if constexpr (std::is_same_v<T, learner::Bayesian>)
            return l.weights.size();
          else if constexpr (std::is_same_v<T, learner::Softmax>)
            return l.weights.size();
          else
            return std::nullopt;
        },
        impl_);
  }

  std::vector<std::uint8_t> serialize() const
  {
    ByteWriter w;
    w.str(kind()).u64(steps_);
    std::visit([&](auto const &l) { l.write(w); }, impl_);
    return std::move(w).bytes();
  }

  template<typename L>
  L const *get() const
  {
    return std::get_if<L>(&impl_);
  }
  template<typename L>
  L *get()
  {
    return std::get_if<L>(&impl_);
  }

  bool operator==(LearnerState const &other) const { return serialize() == other.serialize(); }

private:
  LearnerVariant impl_;
  std::uint64_t steps_;
};

inline PredictiveDistribution predict(LearnerState const &state, Input const &in)
{
  return state.predict(in);
}

inline LearnerState update(LearnerState state, Example const &ex)
{
  state.observe(ex);
  return state;
}

inline std::vector<double> gradient(learner::Softmax const &state, Example const &ex)
{
  state.check(ex.input);
  if (ex.label >= state.k)
    throw ArgumentError("label out of range");
  return state.gradient(ex);
}

// Factories.

inline LearnerState make_uniform(std::size_t k)
{
  LabelSpace{k};
  return learner::Uniform{k};
}

inline LearnerState make_kt(std::size_t k)
{
  LabelSpace{k};
  return learner::KT{std::vector<std::uint64_t>(k, 0)};
}

inline LearnerState make_bayesian(std::shared_ptr<HypothesisClass const> hypotheses)
{
  if (!hypotheses || hypotheses->m == 0)
    throw ArgumentError("hypothesis class must be non-empty");
  std::vector<double> w(hypotheses->m, 1.0);
  return learner::Bayesian{std::move(hypotheses), std::move(w)};
}

inline LearnerState make_softmax(std::size_t k, std::size_t d, double learning_rate = 0.1)
{
  LabelSpace{k};
  if (d == 0)
    throw ArgumentError("softmax needs d >= 1");
  if (!(learning_rate > 0.0))
    throw ArgumentError("learning rate must be positive");
  return learner::Softmax{k, d, std::vector<double>(k * d, 0.0), learning_rate};
}

inline LearnerState make_concept_table(std::size_t k)
{
  LabelSpace{k};
  return learner::ConceptTable{k, {}};
}

inline LearnerState make_format_capability(std::size_t k_format, std::size_t k_capability)
{
  LabelSpace{k_format};
  LabelSpace{k_capability};
  return learner::FormatCapability{k_format, k_capability,
                                   std::vector<std::uint64_t>(k_format, 0), {}};
}

inline LearnerState make_mastery(std::size_t k,
                                 std::shared_ptr<std::vector<MasteryComponent> const> components)
{
  LabelSpace{k};
  for (auto const &c : *components)
    if (c.delta_nats < 0.0 || c.delta_nats > -std::log(clamp_floor))
      throw ArgumentError("component delta out of range");
  std::vector<bool> mastered(components->size(), false);
  return learner::Mastery{k, std::move(components), std::move(mastered)};
}

} // namespace edl
