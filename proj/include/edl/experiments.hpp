#pragma once

// Seeded experiment harness. Rows are independent work items; each run's
// generator is seeded from (spec seed, n, seed) so a grid can grow without
// perturbing rows already computed.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "core.hpp"
#include "learners.hpp"
#include "prequential.hpp"
#include "random.hpp"
#include "stats.hpp"
#include "toymodels.hpp"

namespace edl
{

struct LearnerConfig
{
  std::string kind = "matched"; // matched|uniform|kt|bayesian|concept|format_capability|mastery
  double learning_rate = 0.1;
};

inline LearnerState make_learner(LearnerConfig const &cfg, ToySpec const &spec)
{
  auto const &w = spec.world();
  auto require = [&](ToyKind kind) {
    if (spec.kind() != kind)
      throw ConfigError("learner '" + cfg.kind + "' is incompatible with toy '" +
                        std::string(to_string(spec.kind())) + "'");
  };
  if (cfg.kind == "matched")
    return matched_learner(spec);
  if (cfg.kind == "uniform")
    return make_uniform(w.k);
  if (cfg.kind == "kt")
    return make_kt(w.k);
  if (cfg.kind == "concept")
    return make_concept_table(w.k);
  if (cfg.kind == "bayesian")
  {
    require(ToyKind::hypothesis_collapse);
    return make_bayesian(w.hypotheses);
  }
  if (cfg.kind == "mastery")
  {
    require(ToyKind::disjoint_mixture);
    return make_mastery(w.k, w.components);
  }
  if (cfg.kind == "format_capability")
  {
    require(ToyKind::format_learning);
    return matched_learner(spec);
  }
  if (cfg.kind == "softmax")
    throw ConfigError("softmax needs feature inputs; toy specs provide none");
  throw ConfigError("unknown learner kind '" + cfg.kind + "'");
}

struct OutputPaths
{
  std::string dir = ".";
  std::string csv = "rows.csv";
  std::string summary = "summary.json";
};

struct SweepConfig
{
  ToySpec spec;
  std::vector<std::size_t> n_grid;
  std::vector<std::uint64_t> seeds;
  LearnerConfig learner;
  StoppingRule stopping;
  std::size_t batch_size = 1;
  bool record_wall_time = false; // off keeps output files byte-stable
  OutputPaths outputs;

  void validate() const
  {
    if (n_grid.empty() || seeds.empty())
      throw ConfigError("sweep needs a non-empty n_grid and seed list");
    for (std::size_t i = 0; i < n_grid.size(); ++i)
    {
      if (n_grid[i] == 0)
        throw ConfigError("n_grid entries must be >= 1");
      if (i > 0 && n_grid[i] <= n_grid[i - 1])
        throw ConfigError("n_grid must be strictly increasing");
    }
    auto sorted = seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ConfigError("seeds must be distinct");
    if (batch_size == 0)
      throw ConfigError("batch_size must be >= 1");
    try
    {
      stopping.validate();
    }
    catch (ArgumentError const &e)
    {
      throw ConfigError(e.what());
    }
    make_learner(learner, spec);
  }
};

inline SweepConfig sweep_config_from_json(nlohmann::json const &j)
{
  try
  {
    SweepConfig c{toy_spec_from_json(j.at("spec")), {}, {}, {}, {}, 1, false, {}};
    c.n_grid = j.at("n_grid").get<std::vector<std::size_t>>();
    auto const &s = j.at("seeds");
    if (s.is_array())
      c.seeds = s.get<std::vector<std::uint64_t>>();
    else
    {
      auto const start = s.value("start", std::uint64_t{0});
      auto const count = s.at("count").get<std::uint64_t>();
      for (std::uint64_t i = 0; i < count; ++i)
        c.seeds.push_back(start + i);
    }
    if (j.contains("learner"))
    {
      auto const &l = j.at("learner");
      c.learner.kind = l.value("kind", std::string("matched"));
      c.learner.learning_rate = l.value("learning_rate", 0.1);
    }
    if (j.contains("stopping"))
    {
      auto const &st = j.at("stopping");
      c.stopping.max_epochs = st.value("max_epochs", std::size_t{0});
      c.stopping.patience = st.value("patience", std::size_t{0});
      c.stopping.validation_fraction = st.value("validation_fraction", 0.1);
    }
    c.batch_size = j.value("batch_size", std::size_t{1});
    c.record_wall_time = j.value("record_wall_time", false);
    if (j.contains("outputs"))
    {
      auto const &o = j.at("outputs");
      c.outputs.dir = o.value("dir", std::string("."));
      c.outputs.csv = o.value("csv", std::string("rows.csv"));
      c.outputs.summary = o.value("summary", std::string("summary.json"));
    }
    c.validate();
    return c;
  }
  catch (nlohmann::json::exception const &e)
  {
    throw ConfigError(std::string("bad sweep config: ") + e.what());
  }
}

struct SweepRow
{
  std::size_t n = 0;
  std::uint64_t seed = 0;
  EdlReport report;
  std::optional<double> oracle_edl_nats;
  std::optional<std::int64_t> wall_time_ms;
};

/// Closed-form expected EDL for (spec, learner), when one exists.
inline std::optional<double> oracle_for(ToySpec const &spec, LearnerState const &learner,
                                        std::size_t n)
{
  if (spec.kind() == ToyKind::coupon_collector && learner.kind() == "concept")
  {
    auto const &p = std::get<CouponParams>(spec.params());
    return oracle_coupon_edl(static_cast<double>(n), static_cast<double>(p.K),
                             std::log(static_cast<double>(p.k)));
  }
  if (spec.kind() == ToyKind::random_labels &&
      (learner.kind() == "uniform" || learner.kind() == "concept"))
    return 0.0;
  return std::nullopt;
}

// Verifies the regret identity and the report's internal consistency.
inline void check_row_invariants(Measurement const &m, LabeledDataset const &train)
{
  double const comparator = cumulative_loss(m.final_state, train);
  double const gap = m.report.mdl_nats - comparator - *m.report.regret_vs_final_nats;
  if (std::abs(gap) >= 1e-9 * std::max(1.0, m.report.mdl_nats))
    throw InvariantError("regret identity violated: residual " + std::to_string(gap));
  if (auto v = m.report.violation())
    throw InvariantError("report inconsistent: " + *v);
}

inline SweepRow run_one(SweepConfig const &cfg, std::size_t n, std::uint64_t seed)
{
  auto const t0 = std::chrono::steady_clock::now();
  auto const run_seed = hash_seed({cfg.spec.seed(), n, seed});
  Rng rng(run_seed);
  auto const train = cfg.spec.sample(n, rng);
  auto learner = make_learner(cfg.learner, cfg.spec);
  auto const oracle = oracle_for(cfg.spec, learner, n);
  auto m = measure(train, std::move(learner), cfg.stopping, run_seed, &cfg.spec, nullptr,
                   cfg.batch_size);
  check_row_invariants(m, train);
  SweepRow row{n, seed, m.report, oracle, std::nullopt};
  if (cfg.record_wall_time)
    row.wall_time_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
  return row;
}

// Runs fn(i) for i in [0, count) on `threads` workers.
template<typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn &&fn)
{
  threads = std::max(1u, threads);
  if (threads == 1 || count < 2)
  {
    for (std::size_t i = 0; i < count; ++i)
      fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < std::min<std::size_t>(threads, count); ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;)
      {
        try
        {
          fn(i);
        }
        catch (...)
        {
          std::lock_guard lock(failure_mutex);
          if (!failure)
            failure = std::current_exception();
          next = count;
        }
      }
    });
  for (auto &th : pool)
    th.join();
  if (failure)
    std::rethrow_exception(failure);
}

inline std::vector<SweepRow> run_sweep(SweepConfig const &cfg, unsigned threads = 1)
{
  cfg.validate();
  std::vector<std::pair<std::size_t, std::uint64_t>> items;
  for (auto n : cfg.n_grid)
    for (auto s : cfg.seeds)
      items.emplace_back(n, s);
  std::vector<std::optional<SweepRow>> slots(items.size());
  parallel_for(items.size(), threads,
               [&](std::size_t i) { slots[i] = run_one(cfg, items[i].first, items[i].second); });
  std::vector<SweepRow> rows;
  rows.reserve(slots.size());
  for (auto &r : slots)
    rows.push_back(std::move(*r));
  std::sort(rows.begin(), rows.end(), [](SweepRow const &a, SweepRow const &b) {
    return std::tie(a.n, a.seed) < std::tie(b.n, b.seed);
  });
  return rows;
}

struct SummaryRow
{
  std::size_t n = 0;
  std::size_t seeds = 0;
  double mean_edl_nats = 0.0;
  double se_edl_nats = 0.0;
  double var_edl_nats = 0.0;
  double mean_mdl_nats = 0.0;
  double mean_edl_per_example = 0.0;
  std::optional<double> oracle_edl_nats;
};

inline std::vector<SummaryRow> summarize(std::vector<SweepRow> const &rows)
{
  std::map<std::size_t, std::vector<SweepRow const *>> by_n;
  for (auto const &r : rows)
    by_n[r.n].push_back(&r);
  std::vector<SummaryRow> out;
  for (auto const &[n, group] : by_n)
  {
    std::vector<double> edl, mdl;
    for (auto const *r : group)
    {
      edl.push_back(r->report.edl_nats);
      mdl.push_back(r->report.mdl_nats);
    }
    SummaryRow s;
    s.n = n;
    s.seeds = group.size();
    s.mean_edl_nats = stats::mean(edl);
    s.se_edl_nats = stats::standard_error(edl);
    s.var_edl_nats = stats::variance(edl);
    s.mean_mdl_nats = stats::mean(mdl);
    s.mean_edl_per_example = s.mean_edl_nats / static_cast<double>(n);
    s.oracle_edl_nats = group.front()->oracle_edl_nats;
    out.push_back(s);
  }
  return out;
}

struct VarianceRow
{
  std::size_t n = 0;
  double variance = 0.0;
  double mean = 0.0;
  std::size_t seeds = 0;
  std::optional<double> ratio_to_previous; // Var(n) / Var(n_prev)
};

inline std::vector<VarianceRow> variance_table(std::vector<SummaryRow> const &summary)
{
  std::vector<VarianceRow> out;
  for (std::size_t i = 0; i < summary.size(); ++i)
  {
    VarianceRow v{summary[i].n, summary[i].var_edl_nats, summary[i].mean_edl_nats,
                  summary[i].seeds, std::nullopt};
    if (i > 0 && summary[i - 1].var_edl_nats > 0.0)
      v.ratio_to_previous = summary[i].var_edl_nats / summary[i - 1].var_edl_nats;
    out.push_back(v);
  }
  return out;
}

/// Per-n sample variance of EDL with Var(2n)/Var(n) ratios.
inline std::vector<VarianceRow> variance_study(SweepConfig const &cfg, unsigned threads = 1,
                                               std::vector<SweepRow> *rows_out = nullptr)
{
  if (cfg.seeds.size() < 100)
    throw ConfigError("variance study needs >= 100 seeds per n");
  if (cfg.n_grid.size() < 3)
    throw ConfigError("variance study needs >= 3 grid points");
  for (std::size_t i = 1; i < cfg.n_grid.size(); ++i)
    if (cfg.n_grid[i] != 2 * cfg.n_grid[i - 1])
      throw ConfigError("variance study grid must double between consecutive points");
  auto rows = run_sweep(cfg, threads);
  auto table = variance_table(summarize(rows));
  if (rows_out)
    *rows_out = std::move(rows);
  return table;
}

struct OrderingResult
{
  std::vector<std::uint64_t> permutation_seeds;
  std::vector<double> mdl_nats;
  double first_half_mean = 0.0;
  double second_half_mean = 0.0;
  double pooled_se = 0.0;
  double spread = 0.0; // max - min over permutations

  double half_difference() const { return std::abs(first_half_mean - second_half_mean); }
  bool halves_agree() const { return half_difference() < 3.0 * pooled_se || spread == 0.0; }
};

/// MDL of the same dataset under seed-derived presentation orders.
inline OrderingResult ordering_study(LabeledDataset const &dataset, LearnerState const &learner,
                                     std::vector<std::uint64_t> const &permutation_seeds,
                                     unsigned threads = 1)
{
  if (permutation_seeds.size() < 100)
    throw ConfigError("ordering study needs >= 100 permutation seeds");
  OrderingResult r;
  r.permutation_seeds = permutation_seeds;
  r.mdl_nats.resize(permutation_seeds.size());
  parallel_for(permutation_seeds.size(), threads, [&](std::size_t i) {
    Rng rng(hash_seed({permutation_seeds[i], 0x6f7264}));
    auto const order = rng.permutation(dataset.size());
    r.mdl_nats[i] = run_prequential(dataset.select(order), learner).first.mdl_nats();
  });
  auto const half = r.mdl_nats.size() / 2;
  std::span<double const> all(r.mdl_nats);
  auto a = all.first(half), b = all.subspan(half);
  r.first_half_mean = stats::mean(a);
  r.second_half_mean = stats::mean(b);
  r.pooled_se = std::sqrt(stats::variance(a) / static_cast<double>(a.size()) +
                          stats::variance(b) / static_cast<double>(b.size()));
  auto [lo, hi] = std::minmax_element(r.mdl_nats.begin(), r.mdl_nats.end());
  r.spread = *hi - *lo;
  return r;
}

struct AlgorithmComparison
{
  EdlReport first;
  EdlReport second;
  double mdl_difference = 0.0; // first - second
  double edl_difference = 0.0;
  int mdl_order = 0; // -1: first < second, 0: equal, 1: first > second
};

/// Same data, two algorithms: report MDL, test loss and EDL for each.
inline AlgorithmComparison algorithm_dependence_study(LabeledDataset const &train,
                                                      LabeledDataset const &test,
                                                      LearnerState const &first,
                                                      LearnerState const &second,
                                                      StoppingRule const &rule, std::uint64_t seed,
                                                      ToySpec const *truth = nullptr)
{
  auto a = measure(train, first, rule, seed, truth, truth ? nullptr : &test);
  auto b = measure(train, second, rule, seed, truth, truth ? nullptr : &test);
  AlgorithmComparison c{a.report, b.report, a.report.mdl_nats - b.report.mdl_nats,
                        a.report.edl_nats - b.report.edl_nats, 0};
  c.mdl_order = c.mdl_difference < 0 ? -1 : (c.mdl_difference > 0 ? 1 : 0);
  return c;
}

// Output.

inline std::string format_number(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string rows_to_csv(std::vector<SweepRow> const &rows)
{
  std::ostringstream os;
  os << "n,seed,mdl_nats,test_loss_nats,edl_nats,edl_bits_per_example,edl_bits_per_token,"
        "oracle_edl_nats,wall_time_ms\n";
  for (auto const &r : rows)
  {
    os << r.n << ',' << r.seed << ',' << format_number(r.report.mdl_nats) << ','
       << format_number(r.report.test_loss_nats_per_example) << ','
       << format_number(r.report.edl_nats) << ','
       << format_number(nats_to_bits(r.report.edl_per_example)) << ','
       << format_number(nats_to_bits(r.report.edl_per_token)) << ',';
    if (r.oracle_edl_nats)
      os << format_number(*r.oracle_edl_nats);
    os << ',';
    if (r.wall_time_ms)
      os << *r.wall_time_ms;
    os << '\n';
  }
  return os.str();
}

inline nlohmann::json summary_to_json(std::vector<SummaryRow> const &summary)
{
  nlohmann::json arr = nlohmann::json::array();
  for (auto const &s : summary)
    arr.push_back({{"n", s.n},
                   {"seeds", s.seeds},
                   {"mean_edl_nats", s.mean_edl_nats},
                   {"se_edl_nats", s.se_edl_nats},
                   {"var_edl_nats", s.var_edl_nats},
                   {"mean_mdl_nats", s.mean_mdl_nats},
                   {"mean_edl_bits_per_example", nats_to_bits(s.mean_edl_per_example)},
                   {"oracle_edl_nats", s.oracle_edl_nats ? nlohmann::json(*s.oracle_edl_nats)
                                                         : nlohmann::json(nullptr)}});
  return {{"per_n", arr}};
}

inline void write_file(std::filesystem::path const &path, std::string const &content)
{
  if (path.has_parent_path())
  {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream os(path, std::ios::binary);
  if (!os)
    throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << content;
  if (!os)
    throw std::runtime_error("failed writing " + path.string());
}

enum class OutputFormat
{
  csv,
  json,
  both
};

/// Writes the per-row CSV and/or the per-n JSON summary. Returns the paths written.
inline std::vector<std::filesystem::path> emit_results(std::vector<SweepRow> const &rows,
                                                       OutputPaths const &out,
                                                       OutputFormat format = OutputFormat::both)
{
  if (rows.empty())
    throw ArgumentError("emit_results needs at least one row");
  std::vector<std::filesystem::path> written;
  std::filesystem::path const dir(out.dir);
  if (format != OutputFormat::json)
  {
    write_file(dir / out.csv, rows_to_csv(rows));
    written.push_back(dir / out.csv);
  }
  if (format != OutputFormat::csv)
  {
    write_file(dir / out.summary, summary_to_json(summarize(rows)).dump(2) + "\n");
    written.push_back(dir / out.summary);
  }
  return written;
}

} // namespace edl
