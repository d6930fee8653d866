#pragma once

// Foundational types and codelength arithmetic. All accounting is in nats;
// bits appear only at reporting boundaries.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace edl
{

// Error taxonomy. Each maps onto one failure class of the toolkit.
struct ArgumentError : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};
struct ContradictionError : std::runtime_error
{
  ContradictionError(std::string const &what, std::size_t index = 0)
      : std::runtime_error(what), index(index)
  {}
  std::size_t index; // offending example index, when known
};
struct ConfigError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};
struct UnsupportedError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};
struct ProtocolError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};
struct DecodeError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};
struct InvariantError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

// Minimum probability substituted before taking -log.
inline constexpr double clamp_floor = 1e-12;

inline constexpr double nats_to_bits(double nats) { return nats / std::numbers::ln2; }
inline constexpr double bits_to_nats(double bits) { return bits * std::numbers::ln2; }

class LabelSpace
{
public:
  explicit LabelSpace(std::size_t k) : k_(k)
  {
    if (k < 2)
      throw ArgumentError("label space needs k >= 2");
  }
  std::size_t size() const { return k_; }
  bool contains(std::size_t label) const { return label < k_; }
  bool operator==(LabelSpace const &) const = default;

private:
  std::size_t k_;
};

// Opaque input token. Count-based learners ignore it, table learners read
// `id`, feature learners read `features`. id < 0 marks an input never seen
// in training (a fresh draw).
struct Input
{
  std::int64_t id = -1;
  std::vector<double> features;

  bool operator==(Input const &) const = default;
};

struct Example
{
  Input input;
  std::size_t label = 0;
};

class LabeledDataset
{
public:
  LabeledDataset(std::vector<Example> examples, LabelSpace labels)
      : LabeledDataset(std::move(examples), labels, 0)
  {}

  // token_count == 0 means "one scored token per example".
  LabeledDataset(std::vector<Example> examples, LabelSpace labels, std::size_t token_count)
      : examples_(std::move(examples)), labels_(labels),
        token_count_(token_count == 0 ? examples_.size() : token_count)
  {
    for (auto const &ex : examples_)
      if (!labels_.contains(ex.label))
        throw ArgumentError("example label outside label space");
    if (token_count_ < examples_.size())
      throw ArgumentError("token_count must be >= example count");
  }

  std::span<Example const> examples() const { return examples_; }
  Example const &operator[](std::size_t i) const { return examples_[i]; }
  std::size_t size() const { return examples_.size(); }
  bool empty() const { return examples_.empty(); }
  LabelSpace label_space() const { return labels_; }
  std::size_t k() const { return labels_.size(); }
  std::size_t token_count() const { return token_count_; }

  std::vector<Input> inputs() const
  {
    std::vector<Input> out;
    out.reserve(examples_.size());
    for (auto const &ex : examples_)
      out.push_back(ex.input);
    return out;
  }

  std::vector<std::size_t> labels() const
  {
    std::vector<std::size_t> out;
    out.reserve(examples_.size());
    for (auto const &ex : examples_)
      out.push_back(ex.label);
    return out;
  }

  // Same label space, examples reordered/selected by index.
  LabeledDataset select(std::span<std::size_t const> indices) const
  {
    std::vector<Example> picked;
    picked.reserve(indices.size());
    for (auto i : indices)
      picked.push_back(examples_.at(i));
    return LabeledDataset(std::move(picked), labels_);
  }

private:
  std::vector<Example> examples_;
  LabelSpace labels_;
  std::size_t token_count_;
};

// Categorical distribution over k labels. Normalization is checked once at
// construction. Entries are stored unclamped; the floor is applied when a
// label is scored.
class PredictiveDistribution
{
public:
  explicit PredictiveDistribution(std::vector<double> probabilities)
      : p_(std::move(probabilities))
  {
    if (p_.size() < 2)
      throw ArgumentError("distribution needs at least 2 entries");
    double total = 0.0;
    for (double v : p_)
    {
      if (!(v >= 0.0) || !std::isfinite(v))
        throw ArgumentError("distribution entries must be finite and non-negative");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-12)
    {
      // renormalize small drift, reject anything else
      if (std::abs(total - 1.0) > 1e-9)
        throw ArgumentError("distribution does not sum to 1");
      for (double &v : p_)
        v /= total;
    }
  }

  static PredictiveDistribution uniform(std::size_t k)
  {
    return PredictiveDistribution(std::vector<double>(k, 1.0 / static_cast<double>(k)));
  }

  static PredictiveDistribution point_mass(std::size_t k, std::size_t label)
  {
    std::vector<double> p(k, 0.0);
    p.at(label) = 1.0;
    return PredictiveDistribution(std::move(p));
  }

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<double const> probabilities() const { return p_; }

private:
  std::vector<double> p_;
};

class Codelength
{
public:
  constexpr Codelength() = default;
  explicit Codelength(double nats) : nats_(nats)
  {
    if (!(nats >= 0.0) || !std::isfinite(nats))
      throw ArgumentError("codelength must be finite and non-negative");
  }
  constexpr double nats() const { return nats_; }
  constexpr double bits() const { return nats_to_bits(nats_); }

private:
  double nats_ = 0.0;
};

inline Codelength codelength(PredictiveDistribution const &dist, std::size_t label)
{
  if (label >= dist.size())
    throw ArgumentError("label " + std::to_string(label) + " out of range for k=" +
                        std::to_string(dist.size()));
  double const p = std::max(dist[label], clamp_floor);
  // -log(1) is -0.0; normalize the sign.
  return Codelength(p >= 1.0 ? 0.0 : -std::log(p));
}

} // namespace edl
