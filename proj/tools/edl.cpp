// Command-line front end for the EDL measurement library.
//
//   edl sweep     --config sweep.json [--out-dir DIR] [--threads N] [--format csv|json]
//   edl variance  --config sweep.json ...
//   edl ordering  --config ordering.json ...
//   edl algdep    --config algdep.json ...
//   edl oracle    --config oracle.json ...
//   edl encode    --input inputs.txt --labels labels.txt --learner kt --k 4 --out s.edl
//   edl decode    --input inputs.txt --stream s.edl --learner kt --k 4 [--out labels.txt]
//
// Exit codes: 0 ok, 1 other failure, 2 config error, 3 invariant violation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include <edl/codec.hpp>
#include <edl/experiments.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace edl;

namespace
{

json load_json(std::string const &path)
{
  std::ifstream is(path);
  if (!is)
    throw ConfigError("cannot read config " + path);
  try
  {
    return json::parse(is);
  }
  catch (json::exception const &e)
  {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
}

OutputFormat parse_format(std::string const &f)
{
  if (f == "csv")
    return OutputFormat::csv;
  if (f == "json")
    return OutputFormat::json;
  if (f == "both")
    return OutputFormat::both;
  throw ConfigError("format must be csv, json or both");
}

void report_written(std::vector<fs::path> const &paths)
{
  for (auto const &p : paths)
    std::cout << p.string() << '\n';
}

std::vector<std::uint64_t> seed_list(json const &s)
{
  if (s.is_array())
    return s.get<std::vector<std::uint64_t>>();
  std::vector<std::uint64_t> out;
  auto const start = s.value("start", std::uint64_t{0});
  auto const count = s.at("count").get<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i)
    out.push_back(start + i);
  return out;
}

// Dataset described by a config "data" record: either a toy spec sample
// {"toy": {...}, "n": N, "seed": S} or separable features
// {"separable": {"n", "d", "k", "margin", "seed"}}.
struct DataSource
{
  std::optional<ToySpec> spec;
  LabeledDataset train{{}, LabelSpace{2}};
  std::size_t d = 0;
};

DataSource load_data(json const &j)
{
  DataSource out;
  if (j.contains("separable"))
  {
    auto const &s = j.at("separable");
    out.d = s.at("d").get<std::size_t>();
    out.train = gen_separable(s.at("n"), out.d, s.at("k"), s.value("margin", 0.1),
                              s.value("seed", std::uint64_t{0}));
    out.d += 1; // bias feature
    return out;
  }
  out.spec = toy_spec_from_json(j.at("toy"));
  Rng rng(hash_seed({out.spec->seed(), j.at("n").get<std::uint64_t>(),
                     j.value("seed", std::uint64_t{0})}));
  out.train = out.spec->sample(j.at("n"), rng);
  return out;
}

LearnerState named_learner(std::string const &kind, std::size_t k, std::size_t d,
                           double learning_rate, ToySpec const *spec)
{
  if (kind == "softmax")
  {
    if (d == 0)
      throw ConfigError("softmax needs feature inputs");
    return make_softmax(k, d, learning_rate);
  }
  if (spec)
    return make_learner(LearnerConfig{kind, learning_rate}, *spec);
  if (kind == "uniform")
    return make_uniform(k);
  if (kind == "kt")
    return make_kt(k);
  if (kind == "concept")
    return make_concept_table(k);
  throw ConfigError("learner '" + kind + "' needs a toy spec (--spec)");
}

StoppingRule stopping_from(json const &j)
{
  StoppingRule r;
  if (j.contains("stopping"))
  {
    auto const &s = j.at("stopping");
    r.max_epochs = s.value("max_epochs", std::size_t{0});
    r.patience = s.value("patience", std::size_t{0});
    r.validation_fraction = s.value("validation_fraction", 0.1);
  }
  try
  {
    r.validate();
  }
  catch (ArgumentError const &e)
  {
    throw ConfigError(e.what());
  }
  return r;
}

// Plain-text inputs: one input per line, "id [feature ...]".
std::vector<Input> read_inputs(std::string const &path)
{
  std::ifstream is(path);
  if (!is)
    throw ConfigError("cannot read inputs " + path);
  std::vector<Input> out;
  std::string line;
  while (std::getline(is, line))
  {
    if (line.empty() || line[0] == '#')
      continue;
    std::istringstream ls(line);
    Input in;
    if (!(ls >> in.id))
      throw ConfigError("bad input line: " + line);
    for (double v; ls >> v;)
      in.features.push_back(v);
    out.push_back(std::move(in));
  }
  return out;
}

std::vector<std::size_t> read_labels(std::string const &path)
{
  std::ifstream is(path);
  if (!is)
    throw ConfigError("cannot read labels " + path);
  std::vector<std::size_t> out;
  for (long long v; is >> v;)
  {
    if (v < 0)
      throw ConfigError("labels must be non-negative");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (!is.eof())
    throw ConfigError("labels file holds a non-integer token");
  return out;
}

struct Common
{
  std::string config;
  std::string out_dir = ".";
  unsigned threads = 1;
  std::string format = "both";
};

void add_common(CLI::App *cmd, Common &c)
{
  cmd->add_option("--config", c.config, "JSON config record")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out-dir", c.out_dir, "output directory");
  cmd->add_option("--threads", c.threads, "worker threads")->check(CLI::Range(1u, 1024u));
  cmd->add_option("--format", c.format, "csv, json or both")
      ->check(CLI::IsMember({"csv", "json", "both"}));
}

int cmd_sweep(Common const &c)
{
  auto cfg = sweep_config_from_json(load_json(c.config));
  cfg.outputs.dir = c.out_dir;
  auto const rows = run_sweep(cfg, c.threads);
  report_written(emit_results(rows, cfg.outputs, parse_format(c.format)));
  return 0;
}

int cmd_variance(Common const &c)
{
  auto cfg = sweep_config_from_json(load_json(c.config));
  cfg.outputs.dir = c.out_dir;
  std::vector<SweepRow> rows;
  auto const table = variance_study(cfg, c.threads, &rows);
  auto const fmt = parse_format(c.format);
  std::vector<fs::path> written;
  if (fmt != OutputFormat::json)
  {
    std::string csv = "n,seeds,mean_edl_nats,var_edl_nats,var_ratio_to_previous\n";
    for (auto const &v : table)
      csv += std::to_string(v.n) + ',' + std::to_string(v.seeds) + ',' + format_number(v.mean) +
             ',' + format_number(v.variance) + ',' +
             (v.ratio_to_previous ? format_number(*v.ratio_to_previous) : "") + '\n';
    write_file(fs::path(c.out_dir) / "variance.csv", csv);
    written.push_back(fs::path(c.out_dir) / "variance.csv");
  }
  if (fmt != OutputFormat::csv)
  {
    json arr = json::array();
    for (auto const &v : table)
      arr.push_back({{"n", v.n},
                     {"seeds", v.seeds},
                     {"mean_edl_nats", v.mean},
                     {"var_edl_nats", v.variance},
                     {"var_ratio_to_previous",
                      v.ratio_to_previous ? json(*v.ratio_to_previous) : json(nullptr)}});
    write_file(fs::path(c.out_dir) / "variance.json", json{{"per_n", arr}}.dump(2) + "\n");
    written.push_back(fs::path(c.out_dir) / "variance.json");
  }
  report_written(written);
  return 0;
}

int cmd_ordering(Common const &c)
{
  auto const j = load_json(c.config);
  auto const data = load_data(j.at("data"));
  auto const &l = j.at("learner");
  auto learner = named_learner(l.value("kind", std::string("kt")), data.train.k(), data.d,
                               l.value("learning_rate", 0.1), data.spec ? &*data.spec : nullptr);
  auto const r =
      ordering_study(data.train, learner, seed_list(j.at("permutation_seeds")), c.threads);
  auto const fmt = parse_format(c.format);
  std::vector<fs::path> written;
  if (fmt != OutputFormat::json)
  {
    std::string csv = "permutation_seed,mdl_nats\n";
    for (std::size_t i = 0; i < r.mdl_nats.size(); ++i)
      csv += std::to_string(r.permutation_seeds[i]) + ',' + format_number(r.mdl_nats[i]) + '\n';
    write_file(fs::path(c.out_dir) / "ordering.csv", csv);
    written.push_back(fs::path(c.out_dir) / "ordering.csv");
  }
  if (fmt != OutputFormat::csv)
  {
    json s{{"permutations", r.mdl_nats.size()},
           {"first_half_mean", r.first_half_mean},
           {"second_half_mean", r.second_half_mean},
           {"pooled_se", r.pooled_se},
           {"spread", r.spread},
           {"halves_agree", r.halves_agree()}};
    write_file(fs::path(c.out_dir) / "ordering.json", s.dump(2) + "\n");
    written.push_back(fs::path(c.out_dir) / "ordering.json");
  }
  report_written(written);
  return 0;
}

int cmd_algdep(Common const &c)
{
  auto const j = load_json(c.config);
  auto const data = load_data(j.at("data"));
  auto const &ls = j.at("learners");
  if (!ls.is_array() || ls.size() != 2)
    throw ConfigError("algdep needs exactly two learners");
  ToySpec const *spec = data.spec ? &*data.spec : nullptr;
  auto mk = [&](json const &l) {
    return named_learner(l.value("kind", std::string("kt")), data.train.k(), data.d,
                         l.value("learning_rate", 0.1), spec);
  };
  auto const rule = stopping_from(j);
  auto const seed = j.value("seed", std::uint64_t{0});
  auto train = data.train;
  std::optional<LabeledDataset> test;
  if (!spec)
  {
    auto const &s = j.at("data").at("separable");
    auto split = gen_separable_split(s.at("n"), j.value("test_n", std::size_t{1000}), s.at("d"),
                                     s.at("k"), s.value("margin", 0.1), s.value("seed", std::uint64_t{0}));
    train = std::move(split.first);
    test = std::move(split.second);
  }
  auto const r = algorithm_dependence_study(train, test ? *test : train, mk(ls[0]),
                                            mk(ls[1]), rule, seed, spec);
  json out{{"first", r.first.to_json()},
           {"second", r.second.to_json()},
           {"mdl_difference_nats", r.mdl_difference},
           {"edl_difference_nats", r.edl_difference},
           {"mdl_order", r.mdl_order}};
  write_file(fs::path(c.out_dir) / "algdep.json", out.dump(2) + "\n");
  report_written({fs::path(c.out_dir) / "algdep.json"});
  return 0;
}

int cmd_oracle(Common const &c)
{
  auto const j = load_json(c.config);
  auto const grid = j.at("n_grid").get<std::vector<double>>();
  auto const kind = j.at("oracle").get<std::string>();
  ToyOracleCurve curve;
  if (kind == "coupon")
    curve = coupon_curve(grid, j.at("K"), j.at("delta_nats"));
  else if (kind == "format")
  {
    FormatTaskParams p{j.at("n_F"), j.at("n_C"), j.at("L_F0"), j.at("L_C0")};
    try
    {
      p.validate();
    }
    catch (ArgumentError const &e)
    {
      throw ConfigError(e.what());
    }
    curve = format_curve(grid, p);
  }
  else
    throw ConfigError("oracle must be coupon or format");
  auto const fmt = parse_format(c.format);
  std::vector<fs::path> written;
  if (fmt != OutputFormat::json)
  {
    std::string csv = "n,expected_edl_nats,regime\n";
    for (std::size_t i = 0; i < curve.n_values.size(); ++i)
      csv += format_number(curve.n_values[i]) + ',' + format_number(curve.expected_edl_nats[i]) +
             ',' + std::to_string(curve.regime_labels[i]) + '\n';
    write_file(fs::path(c.out_dir) / "oracle.csv", csv);
    written.push_back(fs::path(c.out_dir) / "oracle.csv");
  }
  if (fmt != OutputFormat::csv)
  {
    json out{{"n_values", curve.n_values},
             {"expected_edl_nats", curve.expected_edl_nats},
             {"regime_labels", curve.regime_labels}};
    write_file(fs::path(c.out_dir) / "oracle.json", out.dump(2) + "\n");
    written.push_back(fs::path(c.out_dir) / "oracle.json");
  }
  report_written(written);
  return 0;
}

struct CodecArgs
{
  std::string input, labels, stream, out, learner = "kt", spec;
  std::uint64_t seed = 0;
  unsigned freq_bits = 16;
  std::size_t k = 0;
  double learning_rate = 0.1;
};

LearnerState codec_learner(CodecArgs const &a, std::vector<Input> const &inputs)
{
  std::optional<ToySpec> spec;
  if (!a.spec.empty())
  {
    auto j = load_json(a.spec);
    j["seed"] = a.seed;
    spec = toy_spec_from_json(j);
  }
  std::size_t const k = a.k ? a.k : (spec ? spec->k() : 0);
  if (k == 0)
    throw ConfigError("--k is required without --spec");
  std::size_t const d = inputs.empty() ? 0 : inputs.front().features.size();
  return named_learner(a.learner, k, d, a.learning_rate, spec ? &*spec : nullptr);
}

int cmd_encode(CodecArgs const &a)
{
  auto inputs = read_inputs(a.input);
  auto const labels = read_labels(a.labels);
  if (labels.size() != inputs.size())
    throw ConfigError("inputs and labels differ in length");
  auto learner = codec_learner(a, inputs);
  std::vector<Example> ex;
  for (std::size_t i = 0; i < inputs.size(); ++i)
  {
    if (labels[i] >= learner.k())
      throw ConfigError("label " + std::to_string(labels[i]) + " outside the label space");
    ex.push_back({std::move(inputs[i]), labels[i]});
  }
  LabeledDataset const data(std::move(ex), LabelSpace{learner.k()});
  CodecConfig cfg;
  cfg.frequency_bits = a.freq_bits;
  auto const stream = encode_labels(data, learner, cfg);
  std::ofstream os(a.out, std::ios::binary);
  if (!os)
    throw std::runtime_error("cannot open " + a.out);
  write_stream(os, stream);
  double const ideal = data.empty() ? 0.0 : nats_to_bits(run_prequential(data, learner).first.mdl_nats());
  std::cout << "n=" << data.size() << " payload_bits=" << stream.payload_bits
            << " ideal_bits=" << format_number(ideal) << '\n';
  return 0;
}

int cmd_decode(CodecArgs const &a)
{
  auto const inputs = read_inputs(a.input);
  std::ifstream is(a.stream, std::ios::binary);
  if (!is)
    throw ConfigError("cannot read stream " + a.stream);
  auto const stream = read_stream(is);
  auto [labels, state] = decode_labels(inputs, stream, codec_learner(a, inputs));
  std::ostringstream os;
  for (auto y : labels)
    os << y << '\n';
  if (a.out.empty())
    std::cout << os.str();
  else
    write_file(a.out, os.str());
  return 0;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Excess description length measurements"};
  app.require_subcommand(1);

  Common common;
  struct Runner
  {
    char const *name;
    char const *help;
    std::function<int(Common const &)> fn;
  };
  std::vector<Runner> const runners{
      {"sweep", "EDL over an (n, seed) grid", cmd_sweep},
      {"variance", "Var(EDL) across a doubling n grid", cmd_variance},
      {"ordering", "MDL under random presentation orders", cmd_ordering},
      {"algdep", "two learners on the same data", cmd_algdep},
      {"oracle", "closed-form EDL curves", cmd_oracle}};
  std::vector<std::pair<CLI::App *, std::function<int(Common const &)>>> subs;
  for (auto const &[name, help, fn] : runners)
  {
    auto *cmd = app.add_subcommand(name, help);
    add_common(cmd, common);
    subs.emplace_back(cmd, fn);
  }

  CodecArgs codec;
  auto add_codec = [&](CLI::App *cmd) {
    cmd->add_option("--input", codec.input, "inputs, one per line: id [features]")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--learner", codec.learner, "uniform, kt, concept, softmax or a spec learner");
    cmd->add_option("--spec", codec.spec, "toy spec JSON for spec-bound learners");
    cmd->add_option("--seed", codec.seed, "toy spec seed (with --spec)");
    cmd->add_option("--freq-bits", codec.freq_bits, "frequency table width")
        ->check(CLI::Range(8u, 24u));
    cmd->add_option("--k", codec.k, "label space size");
    cmd->add_option("--learning-rate", codec.learning_rate, "softmax step size");
  };
  auto *encode = app.add_subcommand("encode", "arithmetic-code a label file");
  add_codec(encode);
  encode->add_option("--labels", codec.labels, "labels, whitespace separated")
      ->required()
      ->check(CLI::ExistingFile);
  encode->add_option("--out", codec.out, "stream file")->required();
  auto *decode = app.add_subcommand("decode", "recover labels from a stream");
  add_codec(decode);
  decode->add_option("--stream", codec.stream, "stream file")->required()->check(CLI::ExistingFile);
  decode->add_option("--out", codec.out, "label file (default stdout)");

  CLI11_PARSE(app, argc, argv);
  try
  {
    if (*encode)
      return cmd_encode(codec);
    if (*decode)
      return cmd_decode(codec);
    for (auto const &[cmd, fn] : subs)
      if (*cmd)
        return fn(common);
  }
  catch (ConfigError const &e)
  {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  catch (nlohmann::json::exception const &e)
  {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  catch (InvariantError const &e)
  {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return 3;
  }
  catch (std::exception const &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
