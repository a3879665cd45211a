#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "cue/dataset.hpp"
#include "cue/experiment.hpp"
#include "cue/hash.hpp"
#include "cue/kernels.hpp"
#include "cue/metrics.hpp"
#include "cue/neighbors.hpp"
#include "cue/synthetic.hpp"
#include "cue/tensorio.hpp"

namespace cue::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------- config

void RunConfig::validate() const {
  if (manifest.empty()) throw Error(Errc::invalid_argument, "config: 'manifest' is required");
  if (!(ir >= 1.0)) throw Error(Errc::invalid_argument, "config: ir must be >= 1");
  if (n_max == 0) throw Error(Errc::invalid_argument, "config: n_max must be >= 1");
  if (provider != "fixture" && provider != "live") {
    throw Error(Errc::invalid_argument, "config: provider must be 'fixture' or 'live'");
  }
  if (batch_size == 0) throw Error(Errc::invalid_argument, "config: batch_size must be >= 1");
  if (concurrency == 0) throw Error(Errc::invalid_argument, "config: concurrency must be >= 1");
  if (!(sigma > 0.0)) throw Error(Errc::invalid_argument, "config: sigma must be > 0");
  if (ablation_seeds.empty()) {
    throw Error(Errc::invalid_argument, "config: ablation_seeds must not be empty");
  }
  for (double v : sweep_grid) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(Errc::invalid_argument, "config: sweep_grid values must be finite and >= 0");
    }
  }
  train_config().validate();
}

TrainConfig RunConfig::train_config() const {
  TrainConfig t = train;
  t.seed = seed;
  return t;
}

fs::path RunConfig::resolve(const std::string& p) const {
  const fs::path path(p);
  return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
}

json to_json(const RunConfig& c) {
  auto train = to_json(c.train);
  train.erase("seed");
  return {{"manifest", c.manifest},
          {"test_manifest", c.test_manifest},
          {"run_root", c.run_root},
          {"ir", c.ir},
          {"n_max", c.n_max},
          {"seed", c.seed},
          {"k", c.k},
          {"mode", cue_mode_name(c.mode)},
          {"provider", c.provider},
          {"fixture_dir", c.fixture_dir},
          {"batch_size", c.batch_size},
          {"max_neighbors", c.max_neighbors},
          {"concurrency", c.concurrency},
          {"llm_endpoint", c.llm_endpoint},
          {"llm_model", c.llm_model},
          {"llm_max_retries", c.llm_max_retries},
          {"train", train},
          {"sigma", c.sigma},
          {"ablation_seeds", c.ablation_seeds},
          {"sweep_grid", c.sweep_grid}};
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::invalid_argument, "config must be a JSON object");
  RunConfig c;
  const auto known = to_json(c);
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw Error(Errc::invalid_argument, "config: unknown key '" + key + "'");
  }
  try {
    c.manifest = j.value("manifest", c.manifest);
    c.test_manifest = j.value("test_manifest", c.test_manifest);
    c.run_root = j.value("run_root", c.run_root);
    c.ir = j.value("ir", c.ir);
    c.n_max = j.value("n_max", c.n_max);
    c.seed = j.value("seed", c.seed);
    c.k = j.value("k", c.k);
    c.mode = parse_cue_mode(j.value("mode", std::string(cue_mode_name(c.mode))));
    c.provider = j.value("provider", c.provider);
    c.fixture_dir = j.value("fixture_dir", c.fixture_dir);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_neighbors = j.value("max_neighbors", c.max_neighbors);
    c.concurrency = j.value("concurrency", c.concurrency);
    c.llm_endpoint = j.value("llm_endpoint", c.llm_endpoint);
    c.llm_model = j.value("llm_model", c.llm_model);
    c.llm_max_retries = j.value("llm_max_retries", c.llm_max_retries);
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    c.sigma = j.value("sigma", c.sigma);
    c.ablation_seeds = j.value("ablation_seeds", c.ablation_seeds);
    c.sweep_grid = j.value("sweep_grid", c.sweep_grid);
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_argument, std::string("config: ") + e.what());
  }
  return c;
}

std::string config_hash(const RunConfig& c) {
  return sha256_hex(to_json(c).dump()).substr(0, 12);
}

MissingArtifact::MissingArtifact(const fs::path& path, std::string producer)
    : Error(Errc::missing_artifact,
            "missing artifact " + path.string() + "; produce it with `cue " + producer + "`"),
      path_(path.string()),
      producer_(std::move(producer)) {}

// ---------------------------------------------------------------- grid csv

std::string grid_csv(const std::vector<double>& axis, const Grid& values) {
  std::ostringstream os;
  char buf[64];
  os << "lambda_zs\\lambda_llm";
  for (double v : axis) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    os << "," << buf;
  }
  os << "\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", axis[i]);
    os << buf;
    for (const auto& cell : values[i]) {
      os << ",";
      if (cell) {
        std::snprintf(buf, sizeof buf, "%.17g", *cell);
        os << buf;
      }
    }
    os << "\n";
  }
  return os.str();
}

Grid parse_grid_csv(const std::string& text) {
  Grid out;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::malformed_payload, "grid csv: empty");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::optional<double>> row;
    std::istringstream cells(line);
    std::string cell;
    bool first = true;
    while (std::getline(cells, cell, ',')) {
      if (first) {
        first = false;
        continue;
      }
      row.push_back(cell.empty() ? std::nullopt : std::optional<double>(std::stod(cell)));
    }
    if (!line.empty() && line.back() == ',') row.push_back(std::nullopt);
    out.push_back(std::move(row));
  }
  return out;
}

// ---------------------------------------------------------------- artifacts

namespace {

const fs::path kSplit = "split.json";
const fs::path kZsTrain = "zs_train.cuet";
const fs::path kZsTest = "zs_test.cuet";
const fs::path kZeroshot = "zeroshot.json";
const fs::path kCues = "cues.json";
const fs::path kGraph = "graph.json";
const fs::path kFilterReport = "filter_report.json";
const fs::path kResponses = "responses.json";
const fs::path kModelDir = "model";
const fs::path kTrainReport = "train_report.json";

std::string short_hash(const json& j) { return sha256_hex(j.dump()).substr(0, 16); }

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io_missing_file, "cannot write " + p.string());
  out << text;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

const fs::path& require(const fs::path& p, const std::string& producer) {
  if (!fs::exists(p)) throw MissingArtifact(p, producer);
  return p;
}

json read_json(const fs::path& p, const std::string& producer) {
  std::ifstream in(require(p, producer));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::malformed_payload, p.string() + ": " + e.what());
  }
}

void check_key(const json& artifact, const std::string& expected, const fs::path& p,
               const std::string& producer) {
  if (artifact.value("key", std::string()) != expected) {
    throw Error(Errc::stale_artifact, p.string() + " was produced from different inputs; rerun `cue " +
                                          producer + "`");
  }
}

/// Digest of a manifest and every file it references.
std::string dataset_digest(const fs::path& manifest_path) {
  const auto m = tensorio::read_manifest(require(manifest_path, "synth"));
  const auto dir = manifest_path.parent_path();
  json j = {{"manifest", sha256_file(manifest_path.string())},
            {"features", sha256_file((dir / m.features_path).string())},
            {"prototypes", sha256_file((dir / m.prototypes_path).string())},
            {"labels", sha256_file((dir / m.labels_path).string())}};
  return short_hash(j);
}

struct Context {
  RunConfig cfg;
  fs::path run_dir;
  std::vector<std::string> outputs;

  fs::path at(const fs::path& name) const { return run_dir / name; }
  void wrote(const fs::path& name) { outputs.push_back((run_dir / name).string()); }

  fs::path manifest() const { return cfg.resolve(cfg.manifest); }
  fs::path test_manifest() const {
    if (cfg.test_manifest.empty()) {
      throw Error(Errc::invalid_argument, "config: 'test_manifest' is required for this command");
    }
    return cfg.resolve(cfg.test_manifest);
  }

  std::string split_key() const {
    return short_hash({{"data", dataset_digest(manifest())},
                       {"ir", cfg.ir},
                       {"n_max", cfg.n_max},
                       {"seed", cfg.seed}});
  }
  std::string graph_key(const std::vector<std::string>& classes) const {
    return short_hash({{"classes", classes},
                       {"provider", cfg.provider},
                       {"model", cfg.provider == "live" ? cfg.llm_model : "fixture"},
                       {"batch_size", cfg.batch_size},
                       {"max_neighbors", cfg.max_neighbors}});
  }
};

struct Loaded {
  tensorio::LoadedDataset pool;
  SplitDescriptor split;
  std::string split_key;
  LabeledEmbeddings train;
};

Loaded load_split(const Context& ctx) {
  Loaded l;
  l.pool = tensorio::load_dataset(require(ctx.manifest(), "synth"));
  const auto sj = read_json(ctx.at(kSplit), "split");
  l.split_key = ctx.split_key();
  check_key(sj, l.split_key, ctx.at(kSplit), "split");
  l.split = split_from_json(sj);
  const auto idx = l.split.flat_indices();
  for (auto i : idx) {
    if (i >= l.pool.data.size()) {
      throw Error(Errc::stale_artifact, ctx.at(kSplit).string() + " indexes past the pool; rerun `cue split`");
    }
  }
  l.train = l.pool.data.subset(idx);
  return l;
}

NeighborGraph load_graph(const Context& ctx, const std::vector<std::string>& classes) {
  const auto gj = read_json(ctx.at(kGraph), "neighbors");
  check_key(gj, ctx.graph_key(classes), ctx.at(kGraph), "neighbors");
  auto g = graph_from_json(gj);
  if (g.size() != classes.size()) {
    throw Error(Errc::dimension_mismatch, ctx.at(kGraph).string() + " does not match the class vocabulary");
  }
  if (auto bad = g.check_invariants(); !bad.empty()) {
    throw Error(Errc::malformed_payload, ctx.at(kGraph).string() + ": " + bad);
  }
  return g;
}

Matrix load_zs_train(const Context& ctx, const Loaded& l) {
  const auto zj = read_json(ctx.at(kZeroshot), "zeroshot");
  check_key(zj, l.split_key, ctx.at(kZeroshot), "zeroshot");
  auto zs = tensorio::read_tensor(require(ctx.at(kZsTrain), "zeroshot"));
  if (zs.rows() != l.train.size() || zs.cols() != l.train.num_classes()) {
    throw Error(Errc::dimension_mismatch, ctx.at(kZsTrain).string() + " has the wrong shape");
  }
  return zs;
}

LabeledEmbeddings load_test(const Context& ctx, const std::vector<std::string>& classes) {
  auto test = tensorio::load_dataset(require(ctx.test_manifest(), "synth")).data;
  if (test.class_names != classes) {
    throw Error(Errc::dimension_mismatch, "test manifest classes differ from the training pool");
  }
  return test;
}

std::vector<std::size_t> row_argmax(const Matrix& m) {
  std::vector<double> buf(m.data().begin(), m.data().end());
  return kernels::argmax_rows(buf, m.cols());
}

double top1(const std::vector<std::size_t>& pred, std::span<const Label> labels) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == labels[i];
  return pred.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(pred.size());
}

// ---------------------------------------------------------------- commands

json cmd_split(Context& ctx) {
  const auto pool = tensorio::load_dataset(require(ctx.manifest(), "synth"));
  auto split = build_longtail_indices(pool.data.labels, pool.data.num_classes(), ctx.cfg.n_max,
                                      ctx.cfg.ir, ctx.cfg.seed);
  split.manifest_hash = dataset_digest(ctx.manifest());
  auto j = to_json(split);
  j["key"] = ctx.split_key();
  write_json(ctx.at(kSplit), j);
  ctx.wrote(kSplit);
  std::size_t n = 0;
  for (auto c : split.per_class_counts) n += c;
  return {{"train_size", n}};
}

json cmd_zeroshot(Context& ctx) {
  const auto l = load_split(ctx);
  const auto zs = zero_shot_logits(l.train.features, l.pool.prototypes);
  tensorio::write_tensor(ctx.at(kZsTrain), zs);
  ctx.wrote(kZsTrain);
  json summary = {{"key", l.split_key}, {"train_top1", top1(row_argmax(zs), l.train.labels)}};
  if (!ctx.cfg.test_manifest.empty()) {
    const auto test = load_test(ctx, l.pool.data.class_names);
    const auto zt = zero_shot_logits(test.features, l.pool.prototypes);
    tensorio::write_tensor(ctx.at(kZsTest), zt);
    ctx.wrote(kZsTest);
    summary["test_top1"] = top1(row_argmax(zt), test.labels);
  }
  write_json(ctx.at(kZeroshot), summary);
  ctx.wrote(kZeroshot);
  summary.erase("key");
  return summary;
}

json cmd_cues(Context& ctx) {
  const auto l = load_split(ctx);
  const auto zs = load_zs_train(ctx, l);
  const auto sel = variant_cues(zs, l.train.labels, ctx.cfg.k, ctx.cfg.mode, ctx.cfg.seed);
  CueCache cache;
  cache.kind = "zs";
  cache.k = ctx.cfg.k;
  cache.mode = ctx.cfg.mode;
  cache.seed = ctx.cfg.seed;
  cache.key = l.split_key;
  cache.per_sample_cue_lists = sel.cues;
  write_json(ctx.at(kCues), to_json(cache));
  ctx.wrote(kCues);
  json r = {{"samples", sel.cues.size()},
            {"cues_per_sample", sel.cues.empty() ? 0 : sel.cues.front().size()}};
  if (sel.clamped) r["warning"] = "k exceeds C-1; clamped";
  return r;
}

json cmd_neighbors(Context& ctx) {
  const auto manifest = tensorio::read_manifest(require(ctx.manifest(), "synth"));
  std::unique_ptr<LlmProvider> provider;
  if (ctx.cfg.provider == "fixture") {
    provider = std::make_unique<FixtureProvider>(ctx.cfg.resolve(ctx.cfg.fixture_dir));
  } else {
    LiveProviderConfig live;
    live.endpoint = ctx.cfg.llm_endpoint;
    live.model = ctx.cfg.llm_model;
    live.max_retries = ctx.cfg.llm_max_retries;
    live = live_config_from_env(live);
    if (live.endpoint.empty()) {
      throw Error(Errc::invalid_argument,
                  std::string("live provider needs an endpoint (config or ") + kLlmEndpointEnv + ")");
    }
    provider = std::make_unique<LiveProvider>(live);
  }
  NeighborPipelineConfig pc{ctx.cfg.batch_size, ctx.cfg.max_neighbors, ctx.cfg.concurrency};
  const auto res = build_neighbor_graph(manifest.classes, *provider, pc);

  auto gj = to_json(res.graph, manifest.classes);
  gj["key"] = ctx.graph_key(manifest.classes);
  write_json(ctx.at(kGraph), gj);
  ctx.wrote(kGraph);
  write_json(ctx.at(kFilterReport), to_json(res.report));
  ctx.wrote(kFilterReport);
  auto raw = json::array();
  for (const auto& r : res.responses) {
    raw.push_back({{"text", r.text}, {"parse_failed", r.parse_failed}});
  }
  write_json(ctx.at(kResponses), raw);
  ctx.wrote(kResponses);

  std::size_t edges = 0;
  for (const auto& n : res.graph.neighbors) edges += n.size();
  return {{"classes", manifest.classes.size()},
          {"edges", edges},
          {"dropped", res.report.drops.size()},
          {"uncovered", res.report.uncovered.size()}};
}

json cmd_train(Context& ctx) {
  const auto l = load_split(ctx);
  const auto cj = read_json(ctx.at(kCues), "cues");
  const auto cache = cue_cache_from_json(cj);
  if (cache.key != l.split_key || cache.k != ctx.cfg.k || cache.mode != ctx.cfg.mode) {
    throw Error(Errc::stale_artifact, ctx.at(kCues).string() + " does not match this config; rerun `cue cues`");
  }
  if (cache.per_sample_cue_lists.size() != l.train.size()) {
    throw Error(Errc::dimension_mismatch, ctx.at(kCues).string() + " has the wrong sample count");
  }
  const auto C = l.train.num_classes();
  const auto graph = load_graph(ctx, l.pool.data.class_names);
  const auto t_zs = expand_targets_zs(cache.per_sample_cue_lists, l.train.labels, C);
  const auto t_llm = expand_targets_llm(graph, l.train.labels, C);

  const auto tc = ctx.cfg.train_config();
  const auto report = train(l.train, compute_prior(l.split.per_class_counts), t_zs, t_llm, tc,
                            &l.pool.prototypes);
  json header = {{"config_hash", report.config_hash},
                 {"split_key", l.split_key},
                 {"graph_key", ctx.graph_key(l.pool.data.class_names)},
                 {"train", to_json(tc)}};
  save_model(ctx.at(kModelDir), report.model, header);
  for (const char* f : {"model.json", "W.cuet", "b.cuet"}) ctx.wrote(kModelDir / f);
  if (report.model.hidden()) {
    for (const char* f : {"W_hidden.cuet", "b_hidden.cuet"}) ctx.wrote(kModelDir / f);
  }
  auto rj = to_json(report);
  rj["model_digest"] = model_digest(report.model);
  write_json(ctx.at(kTrainReport), rj);
  ctx.wrote(kTrainReport);
  const auto& last = report.history.empty() ? EpochLoss{} : report.history.back();
  return {{"epochs", report.history.size()},
          {"final_loss", last.total},
          {"model_digest", rj["model_digest"]}};
}

json cmd_eval(Context& ctx, std::ostream& err) {
  const auto l = load_split(ctx);
  const auto model_json = read_json(ctx.at(kModelDir / "model.json"), "train");
  if (model_json.value("split_key", std::string()) != l.split_key) {
    throw Error(Errc::stale_artifact, "model was trained on a different split; rerun `cue train`");
  }
  const auto model = load_model(ctx.at(kModelDir));
  const auto& classes = l.pool.data.class_names;
  const auto test = load_test(ctx, classes);
  const auto pred = predict(model, test.features);
  const auto rep = evaluate(pred, test.labels, l.split.per_class_counts, ctx.cfg.sigma);

  auto ej = to_json(rep);
  ej["model"] = model_json.value("config_hash", std::string());
  write_json(ctx.at("eval.json"), ej);
  ctx.wrote("eval.json");
  auto table = format_table(rep, classes);

  std::optional<TransitionReport> tr;
  if (fs::exists(ctx.at(kZsTest)) && fs::exists(ctx.at(kGraph))) {
    const auto zt = tensorio::read_tensor(ctx.at(kZsTest));
    if (zt.rows() != test.size() || zt.cols() != classes.size()) {
      throw Error(Errc::stale_artifact, ctx.at(kZsTest).string() + " has the wrong shape; rerun `cue zeroshot`");
    }
    tr = transition_analysis(row_argmax(zt), pred, test.labels, load_graph(ctx, classes));
    write_json(ctx.at("transitions.json"), to_json(*tr));
    ctx.wrote("transitions.json");
    table += "\n" + format_table(*tr, classes);
  }
  write_text(ctx.at("eval.txt"), table);
  ctx.wrote("eval.txt");
  write_text(ctx.at("per_class.csv"), per_class_csv(rep, classes, tr ? &*tr : nullptr));
  ctx.wrote("per_class.csv");
  err << table;

  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {{"all", rep.overall_acc},
          {"many", opt(rep.split_acc[0])},
          {"medium", opt(rep.split_acc[1])},
          {"few", opt(rep.split_acc[2])},
          {"balancedness", rep.balancedness}};
}

ExperimentInputs experiment_inputs(const Context& ctx) {
  auto l = load_split(ctx);
  ExperimentInputs in;
  in.train_zs_scores = load_zs_train(ctx, l);
  in.test = load_test(ctx, l.pool.data.class_names);
  in.graph = load_graph(ctx, l.pool.data.class_names);
  in.prototypes = std::move(l.pool.prototypes);
  in.train_counts = l.split.per_class_counts;
  in.train = std::move(l.train);
  return in;
}

json cmd_ablate(Context& ctx, std::ostream& err) {
  const auto in = experiment_inputs(ctx);
  const auto& lc = ctx.cfg.train.loss;
  auto arms = component_arms(lc.lambda_zs, lc.lambda_llm);
  for (auto& a : cue_quality_arms(lc.lambda_zs, lc.lambda_llm)) arms.push_back(a);
  const auto base = ctx.cfg.train_config();

  std::vector<ArmResult> results;
  for (const auto& arm : arms) {
    for (auto seed : ctx.cfg.ablation_seeds) {
      results.push_back(run_arm(in, arm, ctx.cfg.k, base, seed, ctx.cfg.sigma));
    }
  }
  const auto summary = summarize(results);
  write_json(ctx.at("ablate.json"), to_json(results, summary));
  ctx.wrote("ablate.json");
  const auto table = format_table(summary);
  write_text(ctx.at("ablate.txt"), table);
  ctx.wrote("ablate.txt");
  err << table;
  return {{"rows", results.size()}, {"arms", arms.size()}};
}

json cmd_sweep(Context& ctx) {
  const auto in = experiment_inputs(ctx);
  const auto& axis = ctx.cfg.sweep_grid;
  const auto base = ctx.cfg.train_config();
  Grid all(axis.size(), std::vector<std::optional<double>>(axis.size()));
  Grid few = all;
  auto cells = json::array();
  for (std::size_t i = 0; i < axis.size(); ++i) {
    for (std::size_t j = 0; j < axis.size(); ++j) {
      const Arm arm{"sweep", axis[i], axis[j], ctx.cfg.mode};
      const auto r = run_arm(in, arm, ctx.cfg.k, base, ctx.cfg.seed, ctx.cfg.sigma);
      all[i][j] = r.eval.overall_acc;
      few[i][j] = r.eval.split_acc[static_cast<int>(Shot::Few)];
      cells.push_back({{"lambda_zs", axis[i]},
                       {"lambda_llm", axis[j]},
                       {"all", r.eval.overall_acc},
                       {"few", few[i][j] ? json(*few[i][j]) : json(nullptr)},
                       {"model_digest", model_digest(r.train.model)}});
    }
  }
  write_text(ctx.at("sweep_all.csv"), grid_csv(axis, all));
  ctx.wrote("sweep_all.csv");
  write_text(ctx.at("sweep_few.csv"), grid_csv(axis, few));
  ctx.wrote("sweep_few.csv");
  write_json(ctx.at("sweep.json"), {{"seed", ctx.cfg.seed}, {"grid", axis}, {"cells", cells}});
  ctx.wrote("sweep.json");
  return {{"cells", cells.size()}};
}

/// Writes a synthetic pool, test set, fixture replies, and a config that
/// points at them, so the whole pipeline runs offline.
json cmd_synth(const RunConfig& base, const fs::path& out_dir, std::uint64_t seed,
               std::vector<std::string>& outputs) {
  const auto m = synthetic::make_mixture(synthetic::benchmark_spec(seed));
  const auto source = "synthetic benchmark mixture, seed " + std::to_string(seed);
  tensorio::save_dataset(out_dir / "pool", m.pool, m.prototypes, source);
  tensorio::save_dataset(out_dir / "test", m.test, m.prototypes, source);

  RunConfig cfg = base;
  cfg.manifest = "pool/manifest.json";
  cfg.test_manifest = "test/manifest.json";
  cfg.fixture_dir = "fixtures";
  cfg.provider = "fixture";
  const auto& vocab = m.pool.class_names;
  std::size_t fixtures = 0;
  for (const auto& batch : batch_labels(vocab, cfg.batch_size)) {
    FixtureProvider::record(out_dir / "fixtures", render_prompt(batch, vocab, cfg.max_neighbors),
                            synthetic::fake_llm_reply(m, batch));
    ++fixtures;
  }
  write_json(out_dir / "config.json", to_json(cfg));
  for (const char* f : {"pool/manifest.json", "test/manifest.json", "config.json"}) {
    outputs.push_back((out_dir / f).string());
  }
  return {{"classes", vocab.size()}, {"pool", m.pool.size()}, {"test", m.test.size()},
          {"fixtures", fixtures}};
}

json error_json(const std::string& command, Errc code, const std::string& message) {
  return {{"ok", false},
          {"command", command},
          {"error", {{"code", std::string(errc_name(code))}, {"message", message}}}};
}

}  // namespace

// ---------------------------------------------------------------- entry

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"cue: long-tailed training with vision and language cues"};
  app.require_subcommand(1);

  std::string config_path, run_dir, out_dir, mode, provider;
  std::optional<double> ir, lambda_zs, lambda_llm;
  std::optional<std::size_t> k, epochs;
  std::optional<std::uint64_t> seed;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration JSON");
    sub->add_option("--ir", ir, "imbalance ratio");
    sub->add_option("--k", k, "cues per sample");
    sub->add_option("--lambda-zs", lambda_zs, "VLM cue weight");
    sub->add_option("--lambda-llm", lambda_llm, "LLM cue weight");
    sub->add_option("--seed", seed, "seed for split, cues and training");
    sub->add_option("--mode", mode, "cue selection: top | random | last");
    sub->add_option("--provider", provider, "neighbor provider: fixture | live");
    sub->add_option("--epochs", epochs, "training epochs");
    sub->add_option("--run-dir", run_dir, "override the hash-named run directory");
  };

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"synth", "write a synthetic dataset, fixtures and config"},
      {"split", "build the long-tailed training split"},
      {"zeroshot", "score train/test rows against the prototypes"},
      {"cues", "mine per-sample VLM cues"},
      {"neighbors", "build the LLM neighbor graph"},
      {"train", "train the head"},
      {"eval", "evaluate the trained head"},
      {"ablate", "component and cue-quality ablation"},
      {"sweep", "lambda sensitivity grid"},
  };
  std::map<std::string, CLI::App*> handles;
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    add_common(sub);
    if (std::string(s.name) == "synth") sub->add_option("--out", out_dir, "output directory")->required();
    handles[s.name] = sub;
  }

  std::string command = "cue";
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    out << error_json(command, Errc::invalid_argument, e.what()).dump() << "\n";
    return 2;
  }
  for (const auto& [name, sub] : handles) {
    if (sub->parsed()) command = name;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw Error(Errc::io_missing_file, "cannot open config " + config_path);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw Error(Errc::invalid_argument, config_path + ": " + e.what());
      }
      cfg = run_config_from_json(j);
      cfg.base_dir = fs::path(config_path).parent_path();
    }
    if (ir) cfg.ir = *ir;
    if (k) cfg.k = *k;
    if (lambda_zs) cfg.train.loss.lambda_zs = *lambda_zs;
    if (lambda_llm) cfg.train.loss.lambda_llm = *lambda_llm;
    if (seed) cfg.seed = *seed;
    if (!mode.empty()) cfg.mode = parse_cue_mode(mode);
    if (!provider.empty()) cfg.provider = provider;
    if (epochs) cfg.train.epochs = *epochs;

    json result = {{"ok", true}, {"command", command}};
    if (command == "synth") {
      if (config_path.empty()) {
        cfg.train = benchmark_train_config();
        if (!k) cfg.k = 3;
        if (epochs) cfg.train.epochs = *epochs;
        if (lambda_zs) cfg.train.loss.lambda_zs = *lambda_zs;
        if (lambda_llm) cfg.train.loss.lambda_llm = *lambda_llm;
      }
      std::vector<std::string> outputs;
      result["summary"] = cmd_synth(cfg, out_dir, seed.value_or(0), outputs);
      result["outputs"] = outputs;
      out << result.dump() << "\n";
      return 0;
    }

    cfg.validate();
    Context ctx;
    ctx.cfg = cfg;
    ctx.run_dir = run_dir.empty() ? cfg.resolve(cfg.run_root) / config_hash(cfg) : fs::path(run_dir);
    fs::create_directories(ctx.run_dir);
    write_json(ctx.run_dir / "config.json", to_json(cfg));

    json summary;
    if (command == "split") summary = cmd_split(ctx);
    else if (command == "zeroshot") summary = cmd_zeroshot(ctx);
    else if (command == "cues") summary = cmd_cues(ctx);
    else if (command == "neighbors") summary = cmd_neighbors(ctx);
    else if (command == "train") summary = cmd_train(ctx);
    else if (command == "eval") summary = cmd_eval(ctx, err);
    else if (command == "ablate") summary = cmd_ablate(ctx, err);
    else if (command == "sweep") summary = cmd_sweep(ctx);

    result["run_dir"] = ctx.run_dir.string();
    result["config_hash"] = config_hash(cfg);
    result["outputs"] = ctx.outputs;
    result["summary"] = summary;
    out << result.dump() << "\n";
    return 0;
  } catch (const MissingArtifact& e) {
    auto j = error_json(command, e.code(), e.what());
    j["error"]["path"] = e.path();
    j["error"]["produced_by"] = e.producer();
    out << j.dump() << "\n";
    return 3;
  } catch (const Error& e) {
    out << error_json(command, e.code(), e.what()).dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    out << error_json(command, Errc::invalid_argument, e.what()).dump() << "\n";
    return 2;
  }
}

}  // namespace cue::cli
