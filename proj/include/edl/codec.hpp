#pragma once

// Prequential label codec. The sender arithmetic-codes each label with the
// current learner's predictive distribution and then updates the learner; the
// receiver, holding the same inputs and initial state, decodes each label
// with the identical distribution and applies the identical update. Both end
// with byte-identical learner states.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <iterator>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "core.hpp"
#include "learners.hpp"
#include "prequential.hpp"
#include "random.hpp"
#include "serialize.hpp"

namespace edl
{

struct CodecConfig
{
  unsigned frequency_bits = 16;
  unsigned range_bits = 64;

  void validate() const
  {
    if (frequency_bits < 8 || frequency_bits > 24)
      throw ConfigError("frequency_bits must be in [8, 24]");
    if (range_bits != 32 && range_bits != 64)
      throw ConfigError("range_bits must be 32 or 64");
  }

  bool operator==(CodecConfig const &) const = default;
};

/// Integer frequencies summing to 2^frequency_bits, every symbol >= 1.
/// One count goes to each symbol, the remaining 2^f - k are apportioned by
/// largest remainder (ties to the lower index). Hence
/// freq[y] / 2^f >= p[y] (2^f - k) / 2^f.
inline std::vector<std::uint32_t> quantize(PredictiveDistribution const &dist,
                                           unsigned frequency_bits)
{
  std::uint64_t const total = std::uint64_t{1} << frequency_bits;
  std::size_t const k = dist.size();
  if (k > total)
    throw ConfigError("label space too large for the frequency table");
  std::uint64_t const spare = total - k;
  std::vector<std::uint32_t> freq(k, 1);
  std::vector<double> remainder(k);
  std::uint64_t assigned = 0;
  for (std::size_t y = 0; y < k; ++y)
  {
    double const share = dist[y] * static_cast<double>(spare);
    double const whole = std::floor(share);
    freq[y] += static_cast<std::uint32_t>(whole);
    assigned += static_cast<std::uint64_t>(whole);
    remainder[y] = share - whole;
  }
  // Distribution sums to 1 within 1e-12, so the floors never overshoot.
  std::uint64_t left = spare > assigned ? spare - assigned : 0;
  if (left > 0)
  {
    std::vector<std::size_t> order(k);
    for (std::size_t y = 0; y < k; ++y)
      order[y] = y;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; left > 0; i = (i + 1) % k, --left)
      ++freq[order[i]];
  }
  else if (assigned > spare)
  {
    // Only reachable if rounding pushed the floors past the budget; take the
    // excess from the largest entries.
    std::uint64_t excess = assigned - spare;
    while (excess > 0)
    {
      auto it = std::max_element(freq.begin(), freq.end());
      --*it;
      --excess;
    }
  }
  return freq;
}

namespace detail
{

class BitWriter
{
public:
  void put(bool bit)
  {
    if (bits_ % 8 == 0)
      bytes_.push_back(0);
    if (bit)
      bytes_.back() |= static_cast<std::uint8_t>(0x80u >> (bits_ % 8));
    ++bits_;
  }
  std::uint64_t bit_count() const { return bits_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
  std::vector<std::uint8_t> bytes_;
  std::uint64_t bits_ = 0;
};

class BitReader
{
public:
  BitReader(std::span<std::uint8_t const> bytes, std::uint64_t bit_count)
      : bytes_(bytes), bits_(bit_count)
  {}
  // Reads past the end yield zeros.
  bool get()
  {
    bool bit = false;
    if (pos_ < bits_)
      bit = (bytes_[pos_ / 8] >> (7 - pos_ % 8)) & 1u;
    ++pos_;
    return bit;
  }

private:
  std::span<std::uint8_t const> bytes_;
  std::uint64_t bits_;
  std::uint64_t pos_ = 0;
};

// Binary arithmetic coder over [0, 2^P). Straddles of the midpoint are
// deferred as pending bits instead of propagating carries.
struct CoderBounds
{
  explicit CoderBounds(unsigned range_bits)
      : precision(range_bits - 2), top((std::uint64_t{1} << precision) - 1),
        half(std::uint64_t{1} << (precision - 1)), quarter(std::uint64_t{1} << (precision - 2))
  {}
  unsigned precision;
  std::uint64_t top, half, quarter;
};

class ArithmeticEncoder
{
public:
  explicit ArithmeticEncoder(unsigned range_bits) : b_(range_bits), high_(b_.top) {}

  void encode(std::uint64_t cum_low, std::uint64_t cum_high, unsigned frequency_bits)
  {
    std::uint64_t const range = high_ - low_ + 1;
    std::uint64_t const step = range >> frequency_bits;
    if (cum_high != (std::uint64_t{1} << frequency_bits))
      high_ = low_ + step * cum_high - 1;
    low_ += step * cum_low;
    for (;;)
    {
      if (high_ < b_.half)
        emit(false);
      else if (low_ >= b_.half)
      {
        emit(true);
        low_ -= b_.half;
        high_ -= b_.half;
      }
      else if (low_ >= b_.quarter && high_ < b_.half + b_.quarter)
      {
        ++pending_;
        low_ -= b_.quarter;
        high_ -= b_.quarter;
      }
      else
        break;
      low_ <<= 1;
      high_ = (high_ << 1) | 1;
    }
  }

  // Two bits (plus pending) pin a value inside the final interval.
  std::pair<std::vector<std::uint8_t>, std::uint64_t> finish()
  {
    ++pending_;
    emit(low_ >= b_.quarter);
    auto const bits = out_.bit_count();
    return {out_.take(), bits};
  }

private:
  void emit(bool bit)
  {
    out_.put(bit);
    for (; pending_ > 0; --pending_)
      out_.put(!bit);
  }

  CoderBounds b_;
  std::uint64_t low_ = 0;
  std::uint64_t high_;
  std::uint64_t pending_ = 0;
  BitWriter out_;
};

class ArithmeticDecoder
{
public:
  ArithmeticDecoder(unsigned range_bits, std::span<std::uint8_t const> bytes, std::uint64_t bits)
      : b_(range_bits), high_(b_.top), in_(bytes, bits)
  {
    for (unsigned i = 0; i < b_.precision; ++i)
      value_ = (value_ << 1) | (in_.get() ? 1u : 0u);
  }

  std::size_t decode(std::span<std::uint32_t const> freq, unsigned frequency_bits)
  {
    std::uint64_t const total = std::uint64_t{1} << frequency_bits;
    std::uint64_t const range = high_ - low_ + 1;
    std::uint64_t const step = range >> frequency_bits;
    std::uint64_t target = (value_ - low_) / step;
    if (target >= total)
      target = total - 1;
    std::size_t symbol = 0;
    std::uint64_t cum_low = 0;
    while (cum_low + freq[symbol] <= target)
      cum_low += freq[symbol++];
    std::uint64_t const cum_high = cum_low + freq[symbol];

    if (cum_high != total)
      high_ = low_ + step * cum_high - 1;
    low_ += step * cum_low;
    for (;;)
    {
      if (high_ < b_.half)
      {
      }
      else if (low_ >= b_.half)
      {
        low_ -= b_.half;
        high_ -= b_.half;
        value_ -= b_.half;
      }
      else if (low_ >= b_.quarter && high_ < b_.half + b_.quarter)
      {
        low_ -= b_.quarter;
        high_ -= b_.quarter;
        value_ -= b_.quarter;
      }
      else
        break;
      low_ <<= 1;
      high_ = (high_ << 1) | 1;
      value_ = (value_ << 1) | (in_.get() ? 1u : 0u);
    }
    return symbol;
  }

private:
  CoderBounds b_;
  std::uint64_t low_ = 0;
  std::uint64_t high_;
  std::uint64_t value_ = 0;
  BitReader in_;
};

inline std::uint64_t digest_inputs(std::span<Input const> inputs)
{
  Fnv1a h;
  h.u64(inputs.size());
  for (auto const &in : inputs)
  {
    h.u64(static_cast<std::uint64_t>(in.id)).u64(in.features.size());
    for (double f : in.features)
      h.f64(f);
  }
  return h.digest();
}

inline std::uint64_t digest_labels(std::span<std::size_t const> labels)
{
  Fnv1a h;
  h.u64(labels.size());
  for (auto y : labels)
    h.u64(y);
  return h.digest();
}

} // namespace detail

struct StreamHeader
{
  std::uint64_t n = 0;
  std::uint32_t k = 0;
  std::string learner_kind;
  CodecConfig config;
  std::uint64_t fingerprint = 0; // hash of (k, n, inputs, learner kind, config)
  std::uint64_t label_check = 0; // hash of the labels, verified after decoding

  bool operator==(StreamHeader const &) const = default;
};

struct EncodedStream
{
  StreamHeader header;
  std::vector<std::uint8_t> payload; // MSB-first, zero-padded to a byte
  std::uint64_t payload_bits = 0;

  bool operator==(EncodedStream const &) const = default;
};

inline std::uint64_t stream_fingerprint(std::size_t k, std::span<Input const> inputs,
                                        std::string_view learner_kind, CodecConfig const &config)
{
  return Fnv1a()
      .u64(k)
      .u64(inputs.size())
      .u64(detail::digest_inputs(inputs))
      .str(learner_kind)
      .u64(config.frequency_bits)
      .u64(config.range_bits)
      .digest();
}

inline EncodedStream encode_labels(LabeledDataset const &dataset, LearnerState initial,
                                   CodecConfig const &config = {},
                                   LearnerState *final_state = nullptr)
{
  config.validate();
  if (dataset.k() > (std::size_t{1} << config.frequency_bits))
    throw ConfigError("label space too large for the frequency table");
  if (initial.k() != dataset.k())
    throw ArgumentError("learner and dataset label spaces differ");

  auto const inputs = dataset.inputs();
  auto const labels = dataset.labels();
  EncodedStream s;
  s.header.n = dataset.size();
  s.header.k = static_cast<std::uint32_t>(dataset.k());
  s.header.learner_kind = std::string(initial.kind());
  s.header.config = config;
  s.header.fingerprint = stream_fingerprint(dataset.k(), inputs, initial.kind(), config);
  s.header.label_check = detail::digest_labels(labels);

  LearnerState state = std::move(initial);
  if (!dataset.empty())
  {
    detail::ArithmeticEncoder enc(config.range_bits);
    for (auto const &ex : dataset.examples())
    {
      auto const freq = quantize(state.predict(ex.input), config.frequency_bits);
      std::uint64_t cum = 0;
      for (std::size_t y = 0; y < ex.label; ++y)
        cum += freq[y];
      enc.encode(cum, cum + freq[ex.label], config.frequency_bits);
      state.observe(ex);
    }
    std::tie(s.payload, s.payload_bits) = enc.finish();
  }
  if (final_state)
    *final_state = std::move(state);
  return s;
}

inline std::pair<std::vector<std::size_t>, LearnerState>
decode_labels(std::span<Input const> inputs, EncodedStream const &stream, LearnerState initial)
{
  auto const &h = stream.header;
  h.config.validate();
  if (inputs.size() != h.n)
    throw ProtocolError("input count does not match stream header");
  if (h.learner_kind != initial.kind())
    throw ProtocolError("learner kind does not match stream header");
  if (initial.k() != h.k)
    throw ProtocolError("learner label space does not match stream header");
  if (stream_fingerprint(h.k, inputs, initial.kind(), h.config) != h.fingerprint)
    throw ProtocolError("dataset fingerprint mismatch");
  if (stream.payload.size() != (stream.payload_bits + 7) / 8)
    throw DecodeError("payload length does not match its bit count (truncated stream?)");
  if (h.n > 0 && stream.payload_bits == 0)
    throw DecodeError("empty payload for a non-empty stream");

  std::vector<std::size_t> labels;
  labels.reserve(h.n);
  LearnerState state = std::move(initial);
  if (h.n > 0)
  {
    detail::ArithmeticDecoder dec(h.config.range_bits, stream.payload, stream.payload_bits);
    for (auto const &in : inputs)
    {
      auto const freq = quantize(state.predict(in), h.config.frequency_bits);
      auto const y = dec.decode(freq, h.config.frequency_bits);
      labels.push_back(y);
      state.observe(Example{in, y});
    }
  }
  if (detail::digest_labels(labels) != h.label_check)
    throw DecodeError("decoded labels fail the label check (corrupted payload)");
  return {std::move(labels), std::move(state)};
}

/// Codelength in bits of the labels under the quantized distributions the
/// coder actually uses.
inline double quantized_codelength_bits(LabeledDataset const &dataset, LearnerState state,
                                        CodecConfig const &config = {})
{
  double bits = 0.0;
  double const total = std::ldexp(1.0, static_cast<int>(config.frequency_bits));
  for (auto const &ex : dataset.examples())
  {
    auto const freq = quantize(state.predict(ex.input), config.frequency_bits);
    bits -= std::log2(static_cast<double>(freq[ex.label]) / total);
    state.observe(ex);
  }
  return bits;
}

/// Payload bits minus the ideal prequential codelength in bits.
inline double quantized_codelength_gap(LabeledDataset const &dataset, LearnerState const &initial,
                                       CodecConfig const &config = {})
{
  auto const stream = encode_labels(dataset, initial, config);
  double ideal = 0.0;
  if (!dataset.empty())
    ideal = run_prequential(dataset, initial).first.mdl_nats();
  return static_cast<double>(stream.payload_bits) - nats_to_bits(ideal);
}

/// Per-symbol worst-case quantization loss, log2(2^f / (2^f - k)).
inline double quantization_bound_bits(std::size_t k, unsigned frequency_bits)
{
  double const total = std::ldexp(1.0, static_cast<int>(frequency_bits));
  return std::log2(total / (total - static_cast<double>(k)));
}

// Stream file layout:
//   "EDL1"
//   records (u32 length + bytes): n u64, k u32, learner kind, frequency_bits u8,
//                                 range_bits u8, fingerprint u64, label check u64
//   payload bytes
//   u64 payload bit length

inline std::vector<std::uint8_t> to_bytes(EncodedStream const &s)
{
  auto rec = [](auto fill) {
    ByteWriter inner;
    fill(inner);
    return std::move(inner).bytes();
  };
  ByteWriter w;
  w.raw(std::vector<std::uint8_t>{'E', 'D', 'L', '1'});
  w.record(rec([&](ByteWriter &r) { r.u64(s.header.n); }));
  w.record(rec([&](ByteWriter &r) { r.u32(s.header.k); }));
  w.record(std::vector<std::uint8_t>(s.header.learner_kind.begin(), s.header.learner_kind.end()));
  w.record(rec([&](ByteWriter &r) { r.u8(static_cast<std::uint8_t>(s.header.config.frequency_bits)); }));
  w.record(rec([&](ByteWriter &r) { r.u8(static_cast<std::uint8_t>(s.header.config.range_bits)); }));
  w.record(rec([&](ByteWriter &r) { r.u64(s.header.fingerprint); }));
  w.record(rec([&](ByteWriter &r) { r.u64(s.header.label_check); }));
  w.raw(s.payload);
  w.u64(s.payload_bits);
  return std::move(w).bytes();
}

inline EncodedStream from_bytes(std::span<std::uint8_t const> bytes)
{
  ByteReader r(bytes);
  auto const magic = r.take(4);
  if (!(magic[0] == 'E' && magic[1] == 'D' && magic[2] == 'L' && magic[3] == '1'))
    throw DecodeError("not an EDL1 stream");
  auto field = [&](std::size_t width) {
    auto rec = r.record();
    if (rec.size() != width)
      throw DecodeError("malformed header record");
    return ByteReader(rec);
  };
  EncodedStream s;
  s.header.n = field(8).u64();
  s.header.k = field(4).u32();
  auto kind = r.record();
  s.header.learner_kind.assign(kind.begin(), kind.end());
  s.header.config.frequency_bits = field(1).u8();
  s.header.config.range_bits = field(1).u8();
  s.header.fingerprint = field(8).u64();
  s.header.label_check = field(8).u64();
  if (r.remaining() < 8)
    throw DecodeError("stream truncated before the footer");
  auto const payload = r.take(r.remaining() - 8);
  s.payload.assign(payload.begin(), payload.end());
  s.payload_bits = r.u64();
  if (s.payload.size() != (s.payload_bits + 7) / 8)
    throw DecodeError("payload length does not match footer (truncated stream?)");
  return s;
}

inline void write_stream(std::ostream &os, EncodedStream const &s)
{
  auto const bytes = to_bytes(s);
  os.write(reinterpret_cast<char const *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os)
    throw std::runtime_error("failed to write stream");
}

inline EncodedStream read_stream(std::istream &is)
{
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                                  std::istreambuf_iterator<char>());
  return from_bytes(bytes);
}

} // namespace edl
