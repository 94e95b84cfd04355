#include "plr/runner.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "plr/error.hpp"
#include "plr/report.hpp"
#include "plr/stats.hpp"

namespace plr {

namespace {

using nlohmann::json;

constexpr std::array<double, 3> kSplitFractions = {0.6, 0.2, 0.2};
const std::vector<double> kLearningRateGrid = {0.01, 0.001};
const std::vector<double> kBeta2Grid = {10.0, 100.0, 500.0, 1000.0, 10000.0};
const std::vector<double> kHuberDeltaGrid = {1.0, 5.0};

std::string now_iso8601() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string git_short_hash() {
  FILE* pipe = ::popen("git rev-parse --short HEAD 2>/dev/null", "r");
  if (!pipe) return "unknown";
  char buf[64] = {0};
  std::string out;
  if (std::fgets(buf, sizeof(buf), pipe) != nullptr) out = buf;
  ::pclose(pipe);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out.empty() ? "unknown" : out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path.string() + "' for hashing");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return "fnv1a64:" + hex64(h);
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw LoadError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot open '" + path.string() + "' for writing");
  out << text;
}

void write_manifest(const std::filesystem::path& out_dir, const std::string& command,
                    const json& options, const std::vector<std::filesystem::path>& inputs,
                    const std::vector<std::string>& outputs, std::uint64_t base_seed) {
  json j;
  j["command"] = command;
  j["created_at"] = now_iso8601();
  j["options"] = options;
  json in = json::object();
  for (const auto& p : inputs) in[p.string()] = hash_file(p);
  j["inputs"] = std::move(in);
  j["outputs"] = outputs;
  j["base_seed"] = base_seed;
  write_text(out_dir / "manifest.json", j.dump(2) + "\n");
}

std::optional<double> opt_from_json(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

void opt_to_json(json& j, const char* key, const std::optional<double>& v) {
  if (v) {
    j[key] = *v;
  } else {
    j[key] = nullptr;
  }
}

// ---------------------------------------------------------------------------
// Options <-> JSON (manifest echo / replay)

json to_json(const CorruptOptions& o) {
  return json{{"data", o.data.string()},     {"schema", o.schema.string()},
              {"num_false", o.num_false},    {"seed", o.seed},
              {"out", o.out.string()}};
}

CorruptOptions corrupt_from_json(const json& j) {
  CorruptOptions o;
  o.data = j.at("data").get<std::string>();
  o.schema = j.at("schema").get<std::string>();
  o.num_false = j.at("num_false").get<std::size_t>();
  o.seed = j.at("seed").get<std::uint64_t>();
  o.out = j.at("out").get<std::string>();
  return o;
}

json to_json(const TrainOptions& o) {
  return json{{"data", o.data.string()},
              {"method", o.method},
              {"loss", o.loss},
              {"model", o.model},
              {"learning_rate", o.learning_rate},
              {"beta1", o.beta1},
              {"beta2", o.beta2},
              {"huber_delta", o.huber_delta},
              {"seed", o.seed},
              {"epochs", o.epochs},
              {"batch_size", o.batch_size},
              {"validation_metric", o.validation_metric},
              {"save_model", o.save_model},
              {"out", o.out.string()}};
}

TrainOptions train_from_json(const json& j) {
  TrainOptions o;
  o.data = j.at("data").get<std::string>();
  o.method = j.at("method").get<std::string>();
  o.loss = j.at("loss").get<std::string>();
  o.model = j.at("model").get<std::string>();
  o.learning_rate = j.at("learning_rate").get<double>();
  o.beta1 = j.at("beta1").get<double>();
  o.beta2 = j.at("beta2").get<double>();
  o.huber_delta = j.at("huber_delta").get<double>();
  o.seed = j.at("seed").get<std::uint64_t>();
  o.epochs = j.at("epochs").get<std::size_t>();
  o.batch_size = j.at("batch_size").get<std::size_t>();
  o.validation_metric = j.at("validation_metric").get<std::string>();
  o.save_model = j.at("save_model").get<bool>();
  o.out = j.at("out").get<std::string>();
  return o;
}

json to_json(const BenchOptions& o) {
  json data = json::array();
  for (const auto& p : o.data) data.push_back(p.string());
  json schemas = json::array();
  for (const auto& p : o.schemas) schemas.push_back(p.string());
  json j{{"data", std::move(data)},
         {"schemas", std::move(schemas)},
         {"num_false", o.num_false},
         {"methods", o.methods},
         {"repeats", o.repeats},
         {"seed", o.seed},
         {"workers", o.workers},
         {"model", o.model},
         {"beta1", o.beta1},
         {"epochs", o.epochs},
         {"batch_size", o.batch_size},
         {"validation_metric", o.validation_metric},
         {"out", o.out.string()}};
  opt_to_json(j, "learning_rate", o.learning_rate);
  opt_to_json(j, "beta2", o.beta2);
  opt_to_json(j, "huber_delta", o.huber_delta);
  return j;
}

BenchOptions bench_from_json(const json& j) {
  BenchOptions o;
  for (const auto& p : j.at("data")) o.data.emplace_back(p.get<std::string>());
  for (const auto& p : j.at("schemas")) o.schemas.emplace_back(p.get<std::string>());
  o.num_false = j.at("num_false").get<std::vector<std::size_t>>();
  o.methods = j.at("methods").get<std::vector<std::string>>();
  o.repeats = j.at("repeats").get<std::size_t>();
  o.seed = j.at("seed").get<std::uint64_t>();
  o.workers = j.at("workers").get<std::size_t>();
  o.model = j.at("model").get<std::string>();
  o.learning_rate = opt_from_json(j, "learning_rate");
  o.beta1 = j.at("beta1").get<double>();
  o.beta2 = opt_from_json(j, "beta2");
  o.huber_delta = opt_from_json(j, "huber_delta");
  o.epochs = j.at("epochs").get<std::size_t>();
  o.batch_size = j.at("batch_size").get<std::size_t>();
  o.validation_metric = j.at("validation_metric").get<std::string>();
  o.out = j.at("out").get<std::string>();
  return o;
}

json to_json(const ScalingOptions& o) {
  json j{{"data", o.data.string()},
         {"schema", o.schema.string()},
         {"method", o.method},
         {"num_false", o.num_false},
         {"fractions", o.fractions},
         {"repeats", o.repeats},
         {"seed", o.seed},
         {"model", o.model},
         {"beta1", o.beta1},
         {"epochs", o.epochs},
         {"batch_size", o.batch_size},
         {"validation_metric", o.validation_metric},
         {"out", o.out.string()}};
  opt_to_json(j, "learning_rate", o.learning_rate);
  opt_to_json(j, "beta2", o.beta2);
  opt_to_json(j, "huber_delta", o.huber_delta);
  return j;
}

ScalingOptions scaling_from_json(const json& j) {
  ScalingOptions o;
  o.data = j.at("data").get<std::string>();
  o.schema = j.at("schema").get<std::string>();
  o.method = j.at("method").get<std::string>();
  o.num_false = j.at("num_false").get<std::size_t>();
  o.fractions = j.at("fractions").get<std::vector<double>>();
  o.repeats = j.at("repeats").get<std::size_t>();
  o.seed = j.at("seed").get<std::uint64_t>();
  o.model = j.at("model").get<std::string>();
  o.learning_rate = opt_from_json(j, "learning_rate");
  o.beta1 = j.at("beta1").get<double>();
  o.beta2 = opt_from_json(j, "beta2");
  o.huber_delta = opt_from_json(j, "huber_delta");
  o.epochs = j.at("epochs").get<std::size_t>();
  o.batch_size = j.at("batch_size").get<std::size_t>();
  o.validation_metric = j.at("validation_metric").get<std::string>();
  o.out = j.at("out").get<std::string>();
  return o;
}

// ---------------------------------------------------------------------------
// Shared trial machinery

struct TrialParams {
  ModelKind model_kind;
  std::optional<double> learning_rate;
  double beta1;
  std::optional<double> beta2;
  std::optional<double> huber_delta;
  std::size_t epochs;
  std::size_t batch_size;
  ValidationMetric validation_metric;
};

/// The per-method hyperparameter grid realized as train configs. Grid order
/// fixes tie-breaking in selection: learning rates outermost, in the listed
/// order.
std::vector<TrainConfig> build_grid(const MethodSpec& spec, const TrialParams& params,
                                    std::uint64_t seed) {
  const std::vector<double> lrs =
      params.learning_rate ? std::vector<double>{*params.learning_rate} : kLearningRateGrid;
  std::vector<TrainConfig> grid;
  for (double lr : lrs) {
    TrainConfig base;
    base.model_kind = params.model_kind;
    base.aggregation = spec.aggregation;
    base.loss = spec.loss;
    base.learning_rate = lr;
    base.batch_size = params.batch_size;
    base.epochs = params.epochs;
    base.seed = seed;
    base.validation_metric = params.validation_metric;

    if (spec.aggregation.kind == AggregationKind::Weighted) {
      const std::vector<double> beta2s =
          params.beta2 ? std::vector<double>{*params.beta2} : kBeta2Grid;
      for (double b2 : beta2s) {
        TrainConfig c = base;
        c.aggregation = Aggregation::weighted(params.beta1, b2);
        grid.push_back(c);
      }
    } else if (spec.loss.kind == LossKind::Huber) {
      const std::vector<double> deltas =
          params.huber_delta ? std::vector<double>{*params.huber_delta} : kHuberDeltaGrid;
      for (double delta : deltas) {
        TrainConfig c = base;
        c.loss = PointwiseLoss::huber(delta);
        grid.push_back(c);
      }
    } else {
      grid.push_back(base);
    }
  }
  return grid;
}

struct TrialData {
  PartialDataset train;
  PartialDataset validation;
  PartialDataset test;
  double span_lo = 0.0;
  double span_hi = 0.0;
};

/// Split, preprocess, and corrupt one repetition of one dataset. All
/// randomness is derived from (base_seed, dataset name, repetition, |S|), so
/// every method sees identical data and the result does not depend on which
/// worker computes it.
TrialData prepare_trial_data(const RawTable& table, const std::string& dataset,
                             std::size_t num_false, std::size_t rep,
                             std::uint64_t base_seed) {
  Rng rep_rng = Rng(base_seed).derive(fnv1a64(dataset)).derive(rep);
  Rng split_rng = rep_rng.derive(0);
  const SplitTables st = split(table, kSplitFractions, split_rng);
  PreprocessedSplits pre = preprocess(st.train, st.validation, st.test);

  double lo = pre.train_y[0];
  double hi = pre.train_y[0];
  for (double y : pre.train_y) {
    lo = std::min(lo, y);
    hi = std::max(hi, y);
  }

  CorruptionConfig cc;
  cc.num_false = num_false;
  cc.span_lo = lo;
  cc.span_hi = hi;
  const Rng corr = rep_rng.derive(1).derive(num_false);

  TrialData data;
  data.span_lo = lo;
  data.span_hi = hi;
  data.train = PartialDataset{std::move(pre.train_X),
                              corrupt(pre.train_y, cc, corr.derive(0)), std::move(pre.train_y),
                              SplitTag::Train};
  data.validation = PartialDataset{std::move(pre.validation_X),
                                   corrupt(pre.validation_y, cc, corr.derive(1)),
                                   std::move(pre.validation_y), SplitTag::Validation};
  data.test = make_supervised(std::move(pre.test_X), std::move(pre.test_y), SplitTag::Test);
  return data;
}

std::uint64_t trial_fit_seed(const std::string& dataset, std::size_t num_false,
                             std::size_t rep, std::uint64_t base_seed) {
  return Rng(base_seed).derive(fnv1a64(dataset)).derive(rep).derive(2).derive(num_false).seed();
}

}  // namespace

MethodSpec parse_method(std::string_view token) {
  const std::string t(token);
  if (t == "supervised") return {t, Aggregation::supervised(), PointwiseLoss::mse()};
  if (t == "ident") return {t, Aggregation::min_loss(), PointwiseLoss::mse()};
  if (t == "pident") return {t, Aggregation::weighted(0.5, 100.0), PointwiseLoss::mse()};
  const auto dash = t.find('-');
  if (dash != std::string::npos) {
    const std::string agg = t.substr(0, dash);
    const std::string loss = t.substr(dash + 1);
    PointwiseLoss pl;
    if (loss == "mse") {
      pl = PointwiseLoss::mse();
    } else if (loss == "mae") {
      pl = PointwiseLoss::mae();
    } else if (loss == "huber") {
      pl = PointwiseLoss::huber(1.0);
    } else {
      throw DomainError("unknown pointwise loss '" + loss + "' in method '" + t + "'");
    }
    if (agg == "avgl") return {t, Aggregation::avg_loss(), pl};
    if (agg == "avgv") return {t, Aggregation::avg_value(), pl};
  }
  throw DomainError("unknown method '" + t +
                    "' (expected supervised, avgl-*, avgv-*, ident, or pident)");
}

std::filesystem::path default_output_root() {
  if (const char* env = std::getenv("PLR_BENCH_OUT"); env != nullptr && *env != '\0') {
    return env;
  }
  return "plr_out";
}

// ---------------------------------------------------------------------------
// corrupt

CorruptOutputs run_corrupt(const CorruptOptions& options, std::ostream& log) {
  CorruptOptions opt = options;
  const DatasetSchema schema = DatasetSchema::load(opt.schema);
  const RawTable table = load_csv(opt.data, schema);

  if (opt.out.empty()) {
    opt.out = default_output_root() /
              ("corrupt-" + opt.data.stem().string() + "-k" + std::to_string(opt.num_false) +
               "-seed" + std::to_string(opt.seed));
  }
  ensure_dir(opt.out);

  Rng root(opt.seed);
  Rng split_rng = root.derive(0);
  const SplitTables st = split(table, kSplitFractions, split_rng);
  PreprocessedSplits pre = preprocess(st.train, st.validation, st.test);
  for (const std::string& w : pre.transform.warnings) log << "warning: " << w << '\n';

  double lo = pre.train_y[0];
  double hi = pre.train_y[0];
  for (double y : pre.train_y) {
    lo = std::min(lo, y);
    hi = std::max(hi, y);
  }
  CorruptionConfig cc;
  cc.num_false = opt.num_false;
  cc.span_lo = lo;
  cc.span_hi = hi;
  cc.seed = opt.seed;

  PartialDataset train{std::move(pre.train_X), corrupt(pre.train_y, cc, root.derive(1)),
                       std::move(pre.train_y), SplitTag::Train};
  PartialDataset validation{std::move(pre.validation_X),
                            corrupt(pre.validation_y, cc, root.derive(2)),
                            std::move(pre.validation_y), SplitTag::Validation};
  PartialDataset test =
      make_supervised(std::move(pre.test_X), std::move(pre.test_y), SplitTag::Test);

  write_jsonl(train, opt.out / "train.jsonl");
  write_jsonl(validation, opt.out / "validation.jsonl");
  write_jsonl(test, opt.out / "test.jsonl");
  write_manifest(opt.out, "corrupt", to_json(opt), {opt.data, opt.schema},
                 {"train.jsonl", "validation.jsonl", "test.jsonl"}, opt.seed);

  CorruptOutputs out;
  out.out_dir = opt.out;
  out.train_size = train.size();
  out.validation_size = validation.size();
  out.test_size = test.size();
  out.span_lo = lo;
  out.span_hi = hi;
  log << "corrupt: train " << out.train_size << ", validation " << out.validation_size
      << ", test " << out.test_size << "; label span [" << lo << ", " << hi
      << "]; candidate set size " << (opt.num_false + 1) << '\n'
      << "wrote " << opt.out.string() << '\n';
  return out;
}

// ---------------------------------------------------------------------------
// train

namespace {

MethodSpec resolve_train_method(const TrainOptions& opt) {
  if (opt.method == "supervised" || opt.method == "avgl" || opt.method == "avgv" ||
      opt.method == "ident" || opt.method == "pident") {
    PointwiseLoss pl;
    if (opt.loss == "mse") {
      pl = PointwiseLoss::mse();
    } else if (opt.loss == "mae") {
      pl = PointwiseLoss::mae();
    } else if (opt.loss == "huber") {
      pl = PointwiseLoss::huber(opt.huber_delta);
    } else {
      throw DomainError("unknown loss '" + opt.loss + "'");
    }
    if (opt.method == "supervised") return {"supervised", Aggregation::supervised(), pl};
    if (opt.method == "avgl") return {"avgl-" + opt.loss, Aggregation::avg_loss(), pl};
    if (opt.method == "avgv") return {"avgv-" + opt.loss, Aggregation::avg_value(), pl};
    if (opt.method == "ident") return {"ident", Aggregation::min_loss(), pl};
    return {"pident", Aggregation::weighted(opt.beta1, opt.beta2), pl};
  }
  // Compound tokens like "avgl-mae" are accepted as-is.
  MethodSpec spec = parse_method(opt.method);
  if (spec.loss.kind == LossKind::Huber) spec.loss = PointwiseLoss::huber(opt.huber_delta);
  if (spec.aggregation.kind == AggregationKind::Weighted) {
    spec.aggregation = Aggregation::weighted(opt.beta1, opt.beta2);
  }
  return spec;
}

}  // namespace

TrainOutputs run_train(const TrainOptions& options, std::ostream& log) {
  TrainOptions opt = options;
  const MethodSpec spec = resolve_train_method(opt);

  const PartialDataset train = read_jsonl(opt.data / "train.jsonl", SplitTag::Train);
  const PartialDataset validation =
      read_jsonl(opt.data / "validation.jsonl", SplitTag::Validation);
  const PartialDataset test = read_jsonl(opt.data / "test.jsonl", SplitTag::Test);

  if (opt.out.empty()) {
    opt.out = default_output_root() /
              ("train-" + spec.token + "-seed" + std::to_string(opt.seed));
  }
  ensure_dir(opt.out);

  TrainConfig config;
  config.model_kind = parse_model_kind(opt.model);
  config.aggregation = spec.aggregation;
  config.loss = spec.loss;
  config.learning_rate = opt.learning_rate;
  config.batch_size = opt.batch_size;
  config.epochs = opt.epochs;
  config.seed = opt.seed;
  config.validation_metric = parse_validation_metric(opt.validation_metric);

  FitOutcome outcome = fit(config, train, validation);
  const double test_mse = evaluate(outcome.model, test, EvalTarget::TrueLabels);
  const double val_final = outcome.validation_trace.back();

  std::vector<std::string> outputs = {"fit.json"};
  std::string model_path;
  if (opt.save_model) {
    model_path = (opt.out / "model.json").string();
    save_checkpoint(outcome.model, opt.out / "model.json");
    outputs.push_back("model.json");
  }

  json fit_json;
  fit_json["config"] = to_json(opt);
  fit_json["method"] = spec.token;
  fit_json["final"] = {{"test_mse", test_mse}, {"validation_metric", val_final}};
  fit_json["train_loss_trace"] = outcome.train_loss_trace;
  fit_json["validation_trace"] = outcome.validation_trace;
  fit_json["wall_seconds"] = outcome.wall_seconds;
  if (!model_path.empty()) fit_json["model_path"] = model_path;
  write_text(opt.out / "fit.json", fit_json.dump(2) + "\n");

  write_manifest(opt.out, "train", to_json(opt),
                 {opt.data / "train.jsonl", opt.data / "validation.jsonl",
                  opt.data / "test.jsonl"},
                 outputs, opt.seed);

  log << "train: method " << spec.token << ", test mse " << test_mse << ", validation ("
      << opt.validation_metric << ") " << val_final << '\n'
      << "wrote " << opt.out.string() << '\n';

  return TrainOutputs{opt.out, test_mse, val_final, std::move(outcome)};
}

// ---------------------------------------------------------------------------
// bench

namespace {

struct TrialSpec {
  std::size_t dataset_index;
  std::string dataset;
  std::size_t num_false;
  std::string method;
  std::size_t rep;
};

std::string trial_key(const std::string& dataset, const std::string& method,
                      std::size_t num_false, std::uint64_t seed) {
  return dataset + "\x1f" + method + "\x1f" + std::to_string(num_false) + "\x1f" +
         std::to_string(seed);
}

std::vector<TrialResult> read_store(const std::filesystem::path& path) {
  std::vector<TrialResult> trials;
  std::ifstream in(path, std::ios::binary);
  if (!in) return trials;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) trials.push_back(TrialResult::from_store_json(line));
  }
  return trials;
}

TrialParams bench_trial_params(const BenchOptions& opt) {
  TrialParams p{};
  p.model_kind = parse_model_kind(opt.model);
  p.learning_rate = opt.learning_rate;
  p.beta1 = opt.beta1;
  p.beta2 = opt.beta2;
  p.huber_delta = opt.huber_delta;
  p.epochs = opt.epochs;
  p.batch_size = opt.batch_size;
  p.validation_metric = parse_validation_metric(opt.validation_metric);
  return p;
}

void write_bench_reports(const std::filesystem::path& run_dir, const std::string& config_hash,
                         const std::vector<TrialResult>& trials) {
  if (trials.empty()) return;
  BenchReport report = aggregate(trials);
  report.git_hash = git_short_hash();
  report.config_hash = config_hash;
  report.created_at = now_iso8601();

  write_text(run_dir / "report.md", render_table(report, TableFormat::Markdown));
  write_text(run_dir / "report.csv", render_table(report, TableFormat::Csv));

  json cells = json::array();
  for (const auto& [key, stats] : report.cells) {
    cells.push_back({{"dataset", key.dataset},
                     {"num_false", key.num_false},
                     {"method", key.method},
                     {"mean", stats.mean},
                     {"std", stats.stddev},
                     {"n_trials", stats.n_trials}});
  }
  json j{{"metadata",
          {{"git_hash", report.git_hash},
           {"config_hash", report.config_hash},
           {"created_at", report.created_at}}},
         {"cells", std::move(cells)}};
  write_text(run_dir / "report.json", j.dump(2) + "\n");

  // Per-dataset degradation chart: one series per method over |S|.
  std::set<std::string> datasets;
  for (const auto& [key, stats] : report.cells) datasets.insert(key.dataset);
  for (const std::string& ds : datasets) {
    std::map<std::string, SvgSeries> series;
    for (const auto& [key, stats] : report.cells) {
      if (key.dataset != ds) continue;
      SvgSeries& s = series[key.method];
      s.label = key.method;
      s.x.push_back(static_cast<double>(key.num_false));
      s.y.push_back(stats.mean);
    }
    std::vector<SvgSeries> list;
    for (auto& [name, s] : series) list.push_back(std::move(s));
    write_text(run_dir / (ds + "_degradation.svg"),
               line_chart_svg(list, "false labels per set", "test mse"));
  }
}

class ThreadJoiner {
 public:
  explicit ThreadJoiner(std::vector<std::thread>& threads) : threads_(threads) {}
  ~ThreadJoiner() {
    for (std::thread& t : threads_) {
      if (t.joinable()) t.join();
    }
  }

 private:
  std::vector<std::thread>& threads_;
};

}  // namespace

BenchOutputs run_bench(const BenchOptions& options, std::ostream& log) {
  BenchOptions opt = options;
  if (opt.data.empty()) throw DomainError("bench: no datasets given");
  if (opt.data.size() != opt.schemas.size()) {
    throw DomainError("bench: got " + std::to_string(opt.data.size()) + " data files but " +
                      std::to_string(opt.schemas.size()) + " schemas");
  }
  if (opt.methods.empty()) throw DomainError("bench: no methods given");
  if (opt.num_false.empty()) throw DomainError("bench: no --num-false values given");
  if (opt.repeats == 0) throw DomainError("bench: repeats must be >= 1");
  if (opt.workers == 0) opt.workers = 1;
  for (const std::string& m : opt.methods) parse_method(m);   // validate early
  if (opt.out.empty()) opt.out = default_output_root();

  // The run directory is named by the config hash; worker count and output
  // location stay out of it so resumed runs land in the same place.
  json hash_options = to_json(opt);
  hash_options.erase("workers");
  hash_options.erase("out");
  json hash_inputs = json::object();
  for (std::size_t d = 0; d < opt.data.size(); ++d) {
    hash_inputs[opt.data[d].string()] = hash_file(opt.data[d]);
    hash_inputs[opt.schemas[d].string()] = hash_file(opt.schemas[d]);
  }
  const std::string config_hash =
      hex64(fnv1a64(hash_options.dump() + hash_inputs.dump())).substr(0, 12);
  const std::filesystem::path run_dir = opt.out / ("bench-" + config_hash);
  ensure_dir(run_dir);

  // Load every dataset once; tables are shared read-only across trials.
  std::vector<RawTable> tables;
  std::vector<std::string> dataset_names;
  for (std::size_t d = 0; d < opt.data.size(); ++d) {
    const DatasetSchema schema = DatasetSchema::load(opt.schemas[d]);
    tables.push_back(load_csv(opt.data[d], schema));
    dataset_names.push_back(opt.data[d].stem().string());
  }

  // Trial enumeration order fixes the results-store order.
  std::vector<TrialSpec> all;
  for (std::size_t d = 0; d < dataset_names.size(); ++d) {
    for (std::size_t k : opt.num_false) {
      for (const std::string& m : opt.methods) {
        for (std::size_t r = 0; r < opt.repeats; ++r) {
          all.push_back(TrialSpec{d, dataset_names[d], k, m, r});
        }
      }
    }
  }

  const std::filesystem::path store_path = run_dir / "results.jsonl";
  const std::filesystem::path failures_path = run_dir / "failures.jsonl";

  std::set<std::string> completed;
  for (const TrialResult& t : read_store(store_path)) {
    completed.insert(trial_key(t.dataset, t.method, t.num_false, t.seed));
  }
  {
    std::ifstream in(failures_path, std::ios::binary);
    std::string line;
    while (in && std::getline(in, line)) {
      if (line.empty()) continue;
      const json j = json::parse(line);
      completed.insert(trial_key(j.at("dataset").get<std::string>(),
                                 j.at("method").get<std::string>(),
                                 j.at("num_false").get<std::size_t>(),
                                 j.at("seed").get<std::uint64_t>()));
    }
  }

  std::vector<std::size_t> to_run;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const TrialSpec& t = all[i];
    if (!completed.count(trial_key(t.dataset, t.method, t.num_false, t.rep))) {
      to_run.push_back(i);
    }
  }

  BenchOutputs outputs;
  outputs.run_dir = run_dir;
  outputs.trials_skipped = all.size() - to_run.size();

  std::mutex mu;
  std::condition_variable cv;
  std::vector<char> done(all.size(), 0);
  std::vector<std::optional<TrialResult>> results(all.size());
  std::vector<std::string> errors(all.size());
  std::atomic<std::size_t> cursor{0};

  const TrialParams params = bench_trial_params(opt);
  auto worker = [&] {
    for (;;) {
      const std::size_t slot = cursor.fetch_add(1);
      if (slot >= to_run.size()) return;
      const std::size_t idx = to_run[slot];
      const TrialSpec& ts = all[idx];
      try {
        const auto t0 = std::chrono::steady_clock::now();
        const TrialData data =
            prepare_trial_data(tables[ts.dataset_index], ts.dataset, ts.num_false, ts.rep,
                               opt.seed);
        const std::vector<TrainConfig> grid =
            build_grid(parse_method(ts.method), params,
                       trial_fit_seed(ts.dataset, ts.num_false, ts.rep, opt.seed));
        SelectionOutcome sel = select(grid, data.train, data.validation);
        TrialResult tr;
        tr.dataset = ts.dataset;
        tr.method = ts.method;
        tr.num_false = ts.num_false;
        tr.seed = ts.rep;
        tr.test_mse = evaluate(sel.outcome.model, data.test, EvalTarget::TrueLabels);
        tr.validation_metric = sel.outcome.validation_trace.back();
        tr.runtime_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::lock_guard<std::mutex> lk(mu);
        results[idx] = std::move(tr);
        done[idx] = 1;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lk(mu);
        errors[idx] = e.what();
        done[idx] = 1;
      }
      cv.notify_all();
    }
  };

  std::vector<std::thread> threads;
  ThreadJoiner joiner(threads);
  const std::size_t n_workers = std::min(opt.workers, std::max<std::size_t>(to_run.size(), 1));
  for (std::size_t w = 0; w < n_workers; ++w) threads.emplace_back(worker);

  // Flush results in trial order so the store bytes do not depend on the
  // worker count or completion order. Runtimes go to a separate timing log.
  std::ofstream store(store_path, std::ios::binary | std::ios::app);
  std::ofstream timings(run_dir / "timings.jsonl", std::ios::binary | std::ios::app);
  std::ofstream failures;
  for (const std::size_t idx : to_run) {
    {
      std::unique_lock<std::mutex> lk(mu);
      cv.wait(lk, [&] { return done[idx] != 0; });
    }
    const TrialSpec& ts = all[idx];
    if (results[idx]) {
      store << results[idx]->to_store_json() << '\n';
      store.flush();
      timings << json{{"dataset", ts.dataset},
                      {"method", ts.method},
                      {"num_false", ts.num_false},
                      {"seed", ts.rep},
                      {"runtime_seconds", results[idx]->runtime_seconds}}
                     .dump()
              << '\n';
      timings.flush();
      log << "trial " << ts.dataset << " k=" << ts.num_false << ' ' << ts.method << " rep "
          << ts.rep << ": test mse " << results[idx]->test_mse << '\n';
      ++outputs.trials_run;
    } else {
      if (!failures.is_open()) failures.open(failures_path, std::ios::binary | std::ios::app);
      failures << json{{"dataset", ts.dataset},
                       {"method", ts.method},
                       {"num_false", ts.num_false},
                       {"seed", ts.rep},
                       {"error", errors[idx]}}
                      .dump()
               << '\n';
      failures.flush();
      log << "trial " << ts.dataset << " k=" << ts.num_false << ' ' << ts.method << " rep "
          << ts.rep << " FAILED: " << errors[idx] << '\n';
      ++outputs.trials_failed;
      ++outputs.trials_run;
    }
  }
  for (std::thread& t : threads) t.join();
  store.close();

  const std::vector<TrialResult> final_trials = read_store(store_path);
  write_bench_reports(run_dir, config_hash, final_trials);

  std::vector<std::string> manifest_outputs = {"results.jsonl", "report.md", "report.csv",
                                               "report.json"};
  std::vector<std::filesystem::path> manifest_inputs;
  for (std::size_t d = 0; d < opt.data.size(); ++d) {
    manifest_inputs.push_back(opt.data[d]);
    manifest_inputs.push_back(opt.schemas[d]);
  }
  write_manifest(run_dir, "bench", to_json(opt), manifest_inputs, manifest_outputs, opt.seed);

  // Exit 4 unless every requested cell has at least one successful trial.
  std::set<std::string> succeeded_cells;
  for (const TrialResult& t : final_trials) {
    succeeded_cells.insert(t.dataset + "\x1f" + t.method + "\x1f" + std::to_string(t.num_false));
  }
  bool all_cells_ok = true;
  for (const std::string& ds : dataset_names) {
    for (std::size_t k : opt.num_false) {
      for (const std::string& m : opt.methods) {
        if (!succeeded_cells.count(ds + "\x1f" + m + "\x1f" + std::to_string(k))) {
          all_cells_ok = false;
          log << "cell (" << ds << ", " << m << ", " << k << ") has no successful trial\n";
        }
      }
    }
  }
  outputs.exit_code = all_cells_ok ? 0 : 4;
  log << "bench: ran " << outputs.trials_run << " trials (" << outputs.trials_skipped
      << " already complete, " << outputs.trials_failed << " failed)\n"
      << "wrote " << run_dir.string() << '\n';
  return outputs;
}

// ---------------------------------------------------------------------------
// scaling

ScalingOutputs run_scaling(const ScalingOptions& options, std::ostream& log) {
  ScalingOptions opt = options;
  if (opt.fractions.empty()) throw DomainError("scaling: no fractions given");
  std::sort(opt.fractions.begin(), opt.fractions.end());
  opt.fractions.erase(std::unique(opt.fractions.begin(), opt.fractions.end()),
                      opt.fractions.end());
  for (double f : opt.fractions) {
    if (!(f > 0.0 && f <= 1.0)) {
      throw DomainError("scaling: fraction " + std::to_string(f) + " outside (0, 1]");
    }
  }
  if (opt.repeats == 0) throw DomainError("scaling: repeats must be >= 1");
  const MethodSpec spec = parse_method(opt.method);
  if (opt.out.empty()) opt.out = default_output_root();

  json hash_options = to_json(opt);
  hash_options.erase("out");
  const std::string config_hash =
      hex64(fnv1a64(hash_options.dump() + hash_file(opt.data) + hash_file(opt.schema)))
          .substr(0, 12);
  const std::filesystem::path run_dir = opt.out / ("scaling-" + config_hash);
  ensure_dir(run_dir);

  const DatasetSchema schema = DatasetSchema::load(opt.schema);
  const RawTable table = load_csv(opt.data, schema);
  const std::string dataset = opt.data.stem().string();

  TrialParams params{};
  params.model_kind = parse_model_kind(opt.model);
  params.learning_rate = opt.learning_rate;
  params.beta1 = opt.beta1;
  params.beta2 = opt.beta2;
  params.huber_delta = opt.huber_delta;
  params.epochs = opt.epochs;
  params.batch_size = opt.batch_size;
  params.validation_metric = parse_validation_metric(opt.validation_metric);

  std::vector<std::vector<double>> per_fraction(opt.fractions.size());
  std::ofstream trials_out(run_dir / "scaling_trials.jsonl", std::ios::binary);

  for (std::size_t rep = 0; rep < opt.repeats; ++rep) {
    const TrialData data =
        prepare_trial_data(table, dataset, opt.num_false, rep, opt.seed);
    Rng rep_rng = Rng(opt.seed).derive(fnv1a64(dataset)).derive(rep);
    const std::uint64_t fit_seed = trial_fit_seed(dataset, opt.num_false, rep, opt.seed);

    std::vector<std::size_t> order(data.train.size());
    for (std::size_t fi = 0; fi < opt.fractions.size(); ++fi) {
      const double fraction = opt.fractions[fi];
      Rng sub_rng = rep_rng.derive(3).derive(fi);
      order.resize(data.train.size());
      std::iota(order.begin(), order.end(), 0);
      sub_rng.shuffle(order);
      const auto m = std::max<std::size_t>(
          1, static_cast<std::size_t>(fraction * static_cast<double>(data.train.size())));
      order.resize(m);

      const PartialDataset sub_train = take_examples(data.train, order);
      const std::vector<TrainConfig> grid = build_grid(spec, params, fit_seed);
      SelectionOutcome sel = select(grid, sub_train, data.validation);
      const double test_mse = evaluate(sel.outcome.model, data.test, EvalTarget::TrueLabels);
      per_fraction[fi].push_back(test_mse);
      trials_out << json{{"fraction", fraction},
                         {"seed", rep},
                         {"train_size", m},
                         {"test_mse", test_mse}}
                        .dump()
                 << '\n';
      log << "scaling: fraction " << fraction << " rep " << rep << ": test mse " << test_mse
          << '\n';
    }
  }

  std::vector<ScalingPoint> points;
  ScalingOutputs out;
  out.run_dir = run_dir;
  for (std::size_t fi = 0; fi < opt.fractions.size(); ++fi) {
    ScalingPoint p;
    p.fraction = opt.fractions[fi];
    if (per_fraction[fi].size() == 1) {
      p.mean_mse = per_fraction[fi][0];
      p.stddev = 0.0;
    } else {
      const MeanStd ms = mean_std(per_fraction[fi]);
      p.mean_mse = ms.mean;
      p.stddev = ms.stddev;
    }
    points.push_back(p);
    out.fractions.push_back(p.fraction);
    out.mean_mse.push_back(p.mean_mse);
    out.stddev.push_back(p.stddev);
  }

  write_text(run_dir / "curve.csv", scaling_curve_csv(points));
  write_text(run_dir / "curve.svg", scaling_curve_svg(points));
  write_manifest(run_dir, "scaling", to_json(opt), {opt.data, opt.schema},
                 {"curve.csv", "curve.svg", "scaling_trials.jsonl"}, opt.seed);
  log << "wrote " << run_dir.string() << '\n';
  return out;
}

// ---------------------------------------------------------------------------
// replay

int run_replay(const std::filesystem::path& manifest,
               const std::optional<std::filesystem::path>& out_override, std::ostream& log) {
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + manifest.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw LoadError("manifest: invalid JSON: " + std::string(e.what()));
  }
  const std::string command = j.at("command").get<std::string>();
  const json& options = j.at("options");
  if (command == "corrupt") {
    CorruptOptions o = corrupt_from_json(options);
    if (out_override) o.out = *out_override;
    run_corrupt(o, log);
    return 0;
  }
  if (command == "train") {
    TrainOptions o = train_from_json(options);
    if (out_override) o.out = *out_override;
    run_train(o, log);
    return 0;
  }
  if (command == "bench") {
    BenchOptions o = bench_from_json(options);
    if (out_override) o.out = *out_override;
    return run_bench(o, log).exit_code;
  }
  if (command == "scaling") {
    ScalingOptions o = scaling_from_json(options);
    if (out_override) o.out = *out_override;
    run_scaling(o, log);
    return 0;
  }
  throw LoadError("manifest: unknown command '" + command + "'");
}

}  // namespace plr
