// Copyright 2026 The lmpnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "lmpnn/harness.hpp"

#include <algorithm>
#include <chrono>
#include <complex>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/core.h>
#include <openssl/evp.h>

#include "lmpnn/cqd_baseline.hpp"
#include "lmpnn/error.hpp"
#include "lmpnn/evaluation.hpp"
#include "lmpnn/kg_store.hpp"
#include "lmpnn/kge_backends.hpp"
#include "lmpnn/lmpnn_core.hpp"
#include "lmpnn/message_encoding.hpp"
#include "lmpnn/query_model.hpp"
#include "lmpnn/rng.hpp"
#include "lmpnn/training.hpp"

namespace lmpnn {

using Json = nlohmann::json;
using OrderedJson = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

KeySpec key(std::string name, ValueType type, Json def, std::string help) {
  return {std::move(name), type, std::move(def), std::move(help)};
}

constexpr auto kInt = ValueType::kInt;
constexpr auto kFloat = ValueType::kFloat;
constexpr auto kString = ValueType::kString;
constexpr auto kBool = ValueType::kBool;

KeySpec out_key() { return key("out", kString, nullptr, "output run directory"); }
KeySpec seed_key() { return key("seed", kInt, nullptr, "random seed (required)"); }

std::vector<KeySpec> eval_keys() {
  return {key("targets", kString, "hard", "hard|all answers to rank"),
          key("filter", kString, "standard", "standard|easy_only"),
          key("join", kString, "max", "max|min_rank DNF join")};
}

std::vector<CommandSpec> build_specs() {
  std::vector<CommandSpec> specs;
  specs.push_back({"kg-gen", "generate a synthetic observed/full split",
                   {key("entities", kInt, 50, "entity count"),
                    key("relations", kInt, 5, "relation count"),
                    key("triples", kInt, 500, "distinct triples in the full graph"),
                    key("dropout", kFloat, 0.1, "fraction of triples hidden from the observed graph"),
                    seed_key(), out_key()}});
  specs.push_back({"kge-train", "pretrain a KG embedding table",
                   {key("dataset", kString, nullptr, "split manifest.json"),
                    key("backend", kString, "complex", "complex|distmult|transe|rescal|rotate"),
                    key("dim", kInt, 64, "flat embedding width"),
                    key("margin", kFloat, 9.0, "margin for distance-based backends"),
                    key("reg_weight", kFloat, 1e-3, "regularization weight"),
                    key("reg_power", kInt, 0, "regularization power (0: backend default)"),
                    key("lr", kFloat, 0.1, "Adagrad learning rate"),
                    key("batch_size", kInt, 64, "triples per batch"),
                    key("negatives", kInt, 16, "negatives per positive"),
                    key("epochs", kInt, 200, "epochs"),
                    key("init_scale", kFloat, 0.1, "initial embedding scale"),
                    seed_key(), out_key()}});
  specs.push_back({"query-sample", "sample query instances with easy/hard answers",
                   {key("dataset", kString, nullptr, "split manifest.json"),
                    key("types", kString, "all", "comma-separated query types or 'all'"),
                    key("count", kInt, 200, "instances per type"),
                    key("graph", kString, "full", "full: hard answers from the full graph; "
                                                  "observed: training split"),
                    key("require_hard", kBool, false, "resample instances without hard answers"),
                    seed_key(), out_key()}});
  specs.push_back({"lmpnn-train", "train the LMPNN MLP with the NCE loss",
                   {key("kge", kString, nullptr, "embedding table header"),
                    key("queries", kString, nullptr, "training instances (JSON lines)"),
                    key("hidden", kInt, 256, "MLP hidden width"),
                    key("epsilon", kFloat, 0.1, "self-loop weight"),
                    key("temperature", kFloat, 0.05, "NCE temperature"),
                    key("negatives", kInt, 128, "noise entities per positive"),
                    key("lr", kFloat, 1e-4, "AdamW learning rate"),
                    key("weight_decay", kFloat, 1e-4, "AdamW decoupled weight decay"),
                    key("batch_size", kInt, 1024, "instances per step"),
                    key("epochs", kInt, 200, "epochs"),
                    key("depth_offset", kInt, 0, "added to the query depth, floored at 1"),
                    key("message", kString, "closed_form", "closed_form|kgecat"),
                    seed_key(), out_key()}});
  {
    CommandSpec s{"evaluate", "filtered MRR of a trained LMPNN",
                  {key("kge", kString, nullptr, "embedding table header"),
                   key("queries", kString, nullptr, "evaluation instances (JSON lines)"),
                   key("lmpnn", kString, nullptr, "LMPNN checkpoint header"),
                   key("depth_offset", kInt, 0, "added to the query depth, floored at 1")}};
    for (auto& k : eval_keys()) s.keys.push_back(k);
    s.keys.push_back(out_key());
    specs.push_back(std::move(s));
  }
  {
    CommandSpec s{"cqd-eval", "filtered MRR of the CQD(E) optimization baseline",
                  {key("kge", kString, nullptr, "embedding table header"),
                   key("queries", kString, nullptr, "evaluation instances (JSON lines)"),
                   key("tnorm", kString, "product", "product|godel"),
                   key("steps", kInt, 200, "ascent steps"),
                   key("lr", kFloat, 0.1, "Adam learning rate"),
                   key("restarts", kInt, 4, "random restarts per disjunct"),
                   key("init_scale", kFloat, 1e-3, "initial variable embedding scale")}};
    for (auto& k : eval_keys()) s.keys.push_back(k);
    s.keys.push_back(seed_key());
    s.keys.push_back(out_key());
    specs.push_back(std::move(s));
  }
  specs.push_back({"verify-rho", "compare closed-form messages with a numeric argmax",
                   {key("backend", kString, "complex", "complex|distmult|transe|rescal|rotate"),
                    key("dim", kInt, 16, "flat embedding width (<= 64)"),
                    key("trials", kInt, 20, "random message queries"),
                    key("lambda", kFloat, 0.01, "regularization weight of the one-hop problem"),
                    key("margin", kFloat, 1.0, "margin for distance-based backends"),
                    key("steps", kInt, 2000, "ascent steps per restart"),
                    key("restarts", kInt, 4, "restarts per query"),
                    key("init_scale", kFloat, 0.3, "random table scale"),
                    seed_key(), out_key()}});
  specs.push_back({"landscape", "sample J(x) = (1 - x^2)(x - 0.3)^2 on [0, 1]",
                   {key("grid", kInt, 1001, "grid points"), out_key()}});
  return specs;
}

// ---------------------------------------------------------------------------
// Run directory bookkeeping
// ---------------------------------------------------------------------------

class RunDir {
 public:
  RunDir(std::string_view command, const Json& config)
      : command_(command), config_(config), dir_(config.at("out").get<std::string>()) {
    fs::create_directories(dir_);
  }

  const fs::path& dir() const { return dir_; }

  // Records the content hash of an input file under `name`.
  void input(const std::string& name, const fs::path& path) {
    if (!fs::exists(path)) {
      throw Error(ErrorCode::kIo, fmt::format("input {} does not exist: {}", name, path.string()));
    }
    inputs_[name] = {{"path", path.string()}, {"sha256", sha256_file(path)}};
  }

  void write_config() const {
    OrderedJson root;
    root["command"] = command_;
    OrderedJson cfg;
    for (const auto& [k, v] : config_.items()) cfg[k] = v;
    root["config"] = cfg;
    OrderedJson inputs = OrderedJson::object();
    for (const auto& [k, v] : inputs_) inputs[k] = v;
    root["inputs"] = inputs;
    write_text("config.json", root.dump(2) + "\n");
  }

  void write_text(const std::string& name, const std::string& text) const {
    std::ofstream out(dir_ / name, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", (dir_ / name).string()));
    out << text;
  }

 private:
  std::string command_;
  Json config_;
  fs::path dir_;
  std::map<std::string, OrderedJson> inputs_;
};

void hash_dataset(RunDir& run, const fs::path& manifest) {
  run.input("dataset", manifest);
  std::ifstream in(manifest);
  Json m;
  try {
    in >> m;
    run.input("dataset.full", manifest.parent_path() / m.at("full").get<std::string>());
    run.input("dataset.observed", manifest.parent_path() / m.at("observed").get<std::string>());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, fmt::format("{}: {}", manifest.string(), e.what()));
  }
}

// Header plus the blob it names.
void hash_checkpoint(RunDir& run, const std::string& name, const fs::path& header) {
  run.input(name, header);
  std::ifstream in(header);
  Json h;
  try {
    in >> h;
    run.input(name + ".blob", header.parent_path() / h.at("blob").get<std::string>());
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, fmt::format("{}: {}", header.string(), e.what()));
  }
}

std::string str(const Json& c, const char* k) { return c.at(k).get<std::string>(); }
int integer(const Json& c, const char* k) { return c.at(k).get<int>(); }
double real(const Json& c, const char* k) { return c.at(k).get<double>(); }
std::uint64_t seed_of(const Json& c) { return c.at("seed").get<std::uint64_t>(); }

class Telemetry {
 public:
  explicit Telemetry(const fs::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw Error(ErrorCode::kIo, fmt::format("cannot write {}", path.string()));
  }
  void record(int epoch, double mean_loss, double wall_ms) {
    OrderedJson line = {{"epoch", epoch}, {"mean_loss", mean_loss}, {"wall_ms", wall_ms}};
    out_ << line.dump() << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

void cmd_kg_gen(const Json& c, RunDir& run, std::ostream& log) {
  SyntheticConfig cfg;
  cfg.entity_count = integer(c, "entities");
  cfg.relation_count = integer(c, "relations");
  cfg.triple_count = c.at("triples").get<std::int64_t>();
  cfg.dropout_fraction = real(c, "dropout");
  const DatasetSplit split = generate_synthetic(cfg, seed_of(c));
  save_dataset(split, run.dir());
  log << fmt::format("full {} triples, observed {} triples\n", split.full.size(),
                     split.observed.size());
}

void cmd_kge_train(const Json& c, RunDir& run, std::ostream& log) {
  const fs::path manifest = str(c, "dataset");
  hash_dataset(run, manifest);
  const DatasetSplit split = load_dataset(manifest);
  Backend backend = make_backend(parse_backend_kind(str(c, "backend")), integer(c, "dim"));
  backend.margin = real(c, "margin");
  backend.reg_weight = real(c, "reg_weight");
  if (integer(c, "reg_power") != 0) backend.reg_power = integer(c, "reg_power");
  backend.validate();
  KgeTrainHyper hyper;
  hyper.lr = real(c, "lr");
  hyper.batch_size = integer(c, "batch_size");
  hyper.negatives_per_positive = integer(c, "negatives");
  hyper.epochs = integer(c, "epochs");
  hyper.init_scale = real(c, "init_scale");
  hyper.seed = seed_of(c);
  Telemetry telemetry(run.dir() / "telemetry.jsonl");
  auto last = std::chrono::steady_clock::now();
  const EmbeddingTable table =
      train_embeddings(split, backend, hyper, [&](int epoch, double loss) {
        const auto now = std::chrono::steady_clock::now();
        telemetry.record(epoch, loss, std::chrono::duration<double, std::milli>(now - last).count());
        last = now;
      });
  save_table(table, run.dir() / "kge.json");
  const double mrr = link_prediction_mrr(table, split.observed, split.full);
  OrderedJson metrics = {{"observed_mrr", mrr}};
  run.write_text("metrics.json", metrics.dump(2) + "\n");
  log << fmt::format("observed-triple filtered MRR {:.4f}\n", mrr);
}

std::vector<std::string> requested_types(const std::string& spec) {
  if (spec == "all") return query_type_names();
  std::vector<std::string> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    is_negation_type(item);  // validates the name
    out.push_back(item);
  }
  if (out.empty()) throw Error(ErrorCode::kConfig, "no query types requested");
  return out;
}

void cmd_query_sample(const Json& c, RunDir& run, std::ostream& log) {
  const fs::path manifest = str(c, "dataset");
  hash_dataset(run, manifest);
  DatasetSplit split = load_dataset(manifest);
  const std::string graph = str(c, "graph");
  if (graph == "observed") {
    split.full = split.observed;
  } else if (graph != "full") {
    throw Error(ErrorCode::kConfig, fmt::format("graph must be full or observed, got '{}'", graph));
  }
  std::vector<QueryInstance> all;
  for (const std::string& type : requested_types(str(c, "types"))) {
    auto part = sample_instances(split, type, integer(c, "count"), seed_of(c),
                                 c.at("require_hard").get<bool>());
    log << fmt::format("{:>4}: {} instances\n", type, part.size());
    for (auto& inst : part) all.push_back(std::move(inst));
  }
  write_instances(run.dir() / "queries.jsonl", all);
}

void cmd_lmpnn_train(const Json& c, RunDir& run, std::ostream& log) {
  hash_checkpoint(run, "kge", str(c, "kge"));
  run.input("queries", str(c, "queries"));
  const EmbeddingTable table = load_table(str(c, "kge"));
  const auto instances = read_instances(str(c, "queries"));
  const MessageMode mode = parse_message_mode(str(c, "message"));
  TrainConfig cfg;
  cfg.temperature = real(c, "temperature");
  cfg.negatives = integer(c, "negatives");
  cfg.lr = real(c, "lr");
  cfg.weight_decay = real(c, "weight_decay");
  cfg.batch_size = integer(c, "batch_size");
  cfg.epochs = integer(c, "epochs");
  cfg.depth_offset = integer(c, "depth_offset");
  cfg.seed = seed_of(c);
  const LmpnnParams initial =
      init_params(table.backend.dim, integer(c, "hidden"), real(c, "epsilon"), cfg.seed, mode,
                  table.backend.relation_width());
  Telemetry telemetry(run.dir() / "telemetry.jsonl");
  const LmpnnParams trained = train_lmpnn(table, instances, initial, cfg, [&](const EpochStats& s) {
    telemetry.record(s.epoch, s.mean_loss, s.wall_ms);
    if (s.epoch == 1 || s.epoch == cfg.epochs || s.epoch % 10 == 0) {
      log << fmt::format("epoch {:>4}  loss {:.6f}\n", s.epoch, s.mean_loss);
    }
  });
  save_checkpoint(trained, backend_name(table.backend.kind), run.dir() / "lmpnn.json");
}

EvalOptions eval_options(const Json& c) {
  return {parse_target_mode(str(c, "targets")), parse_filter_mode(str(c, "filter"))};
}

void write_report(RunDir& run, const EvalReport& report, std::ostream& log) {
  run.write_text("report.json", report_to_json(report));
  const std::string table = report_to_table(report);
  run.write_text("report.txt", table);
  log << table;
}

void cmd_evaluate(const Json& c, RunDir& run, std::ostream& log) {
  hash_checkpoint(run, "kge", str(c, "kge"));
  hash_checkpoint(run, "lmpnn", str(c, "lmpnn"));
  run.input("queries", str(c, "queries"));
  const EmbeddingTable table = load_table(str(c, "kge"));
  const LmpnnParams params = load_checkpoint(str(c, "lmpnn"));
  const auto instances = read_instances(str(c, "queries"));
  AnswerOptions options;
  options.join = parse_join_mode(str(c, "join"));
  options.depth_offset = integer(c, "depth_offset");
  const EvalReport report = evaluate(
      instances, [&](const Efo1Query& q) { return answer_dnf(q, table, params, options); },
      eval_options(c));
  write_report(run, report, log);
}

void cmd_cqd_eval(const Json& c, RunDir& run, std::ostream& log) {
  hash_checkpoint(run, "kge", str(c, "kge"));
  run.input("queries", str(c, "queries"));
  const EmbeddingTable table = load_table(str(c, "kge"));
  const auto instances = read_instances(str(c, "queries"));
  CqdOptions options;
  options.tnorm = parse_tnorm(str(c, "tnorm"));
  options.steps = integer(c, "steps");
  options.lr = real(c, "lr");
  options.restarts = integer(c, "restarts");
  options.init_scale = real(c, "init_scale");
  options.join = parse_join_mode(str(c, "join"));
  // Per-instance seeds keep each answer independent of evaluation order.
  Rng master(seed_of(c));
  std::size_t next = 0;
  std::vector<std::uint64_t> seeds(instances.size());
  for (auto& s : seeds) s = master.next();
  const EvalReport report = evaluate(
      instances,
      [&](const Efo1Query& q) {
        CqdOptions o = options;
        o.seed = seeds[next++];
        return cqd_optimize(q, table, o);
      },
      eval_options(c));
  write_report(run, report, log);
}

void cmd_verify_rho(const Json& c, RunDir& run, std::ostream& log) {
  Backend backend = make_backend(parse_backend_kind(str(c, "backend")), integer(c, "dim"));
  backend.margin = real(c, "margin");
  backend.validate();
  const int trials = integer(c, "trials");
  if (trials < 1) throw Error(ErrorCode::kConfig, "trials must be positive");
  constexpr int kEntities = 32;
  constexpr int kRelations = 8;
  const std::uint64_t seed = seed_of(c);
  const EmbeddingTable table =
      random_table(backend, kEntities, kRelations, seed, real(c, "init_scale"));
  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  double sum = 0.0;
  double worst = 0.0;
  double complex_error = 0.0;
  OrderedJson rows = OrderedJson::array();
  for (int i = 0; i < trials; ++i) {
    MessageQuery mq;
    const auto e = static_cast<EntityId>(rng.uniform_index(kEntities));
    mq.source = table.entity_row(e);
    mq.relation = static_cast<RelationId>(rng.uniform_index(kRelations));
    mq.direction = rng.uniform_index(2) ? Direction::kTailToHead : Direction::kHeadToTail;
    mq.negated = rng.uniform_index(2) == 1;
    const ClosedFormCheck check = verify_closed_form(table, mq, real(c, "lambda"),
                                                     integer(c, "steps"), rng.next(),
                                                     integer(c, "restarts"));
    sum += check.cosine_gap;
    worst = std::max(worst, check.cosine_gap);
    rows.push_back({{"entity", e},
                    {"relation", mq.relation},
                    {"direction", mq.direction == Direction::kHeadToTail ? "h2t" : "t2h"},
                    {"negated", mq.negated},
                    {"cosine_gap", check.cosine_gap}});
    if (backend.kind == BackendKind::kComplEx) {
      // conj(r) * t by std::complex, against the t2h message.
      const Vec msg = encode_message(table, mq.source, mq.relation, Direction::kTailToHead, false);
      const VecRef r = table.relation_row(mq.relation);
      for (int k = 0; k < backend.dim / 2; ++k) {
        const std::complex<double> rc(r[2 * k], r[2 * k + 1]);
        const std::complex<double> tc(mq.source[2 * k], mq.source[2 * k + 1]);
        const std::complex<double> want = std::conj(rc) * tc;
        complex_error = std::max({complex_error, std::abs(msg[2 * k] - want.real()),
                                  std::abs(msg[2 * k + 1] - want.imag())});
      }
    }
  }
  OrderedJson report = {{"backend", std::string(backend_name(backend.kind))},
                        {"dim", backend.dim},
                        {"trials", trials},
                        {"mean_cosine_gap", sum / trials},
                        {"max_cosine_gap", worst}};
  if (backend.kind == BackendKind::kComplEx) report["complex_exact_max_error"] = complex_error;
  report["queries"] = rows;
  run.write_text("report.json", report.dump(2) + "\n");
  log << fmt::format("{}: mean cosine gap {:.3e}, max {:.3e}\n", backend_name(backend.kind),
                     sum / trials, worst);
}

void cmd_landscape(const Json& c, RunDir& run, std::ostream& log) {
  const auto profile = landscape_profile(integer(c, "grid"));
  write_landscape_csv(profile, run.dir() / "landscape.csv");
  log << fmt::format("J(0) = {:.17g}, {} grid points\n", profile.front().second, profile.size());
}

using Runner = void (*)(const Json&, RunDir&, std::ostream&);

Runner runner_for(std::string_view command) {
  static const std::map<std::string, Runner, std::less<>> runners = {
      {"kg-gen", cmd_kg_gen},           {"kge-train", cmd_kge_train},
      {"query-sample", cmd_query_sample}, {"lmpnn-train", cmd_lmpnn_train},
      {"evaluate", cmd_evaluate},       {"cqd-eval", cmd_cqd_eval},
      {"verify-rho", cmd_verify_rho},   {"landscape", cmd_landscape}};
  const auto it = runners.find(command);
  if (it == runners.end()) throw Error(ErrorCode::kArgument, fmt::format("unknown command '{}'", command));
  return it->second;
}

}  // namespace

const std::vector<CommandSpec>& command_specs() {
  static const std::vector<CommandSpec> specs = build_specs();
  return specs;
}

const CommandSpec& command_spec(std::string_view command) {
  for (const CommandSpec& s : command_specs()) {
    if (s.name == command) return s;
  }
  throw Error(ErrorCode::kArgument, fmt::format("unknown command '{}'", command));
}

Json parse_flag_value(const KeySpec& spec, const std::string& text) {
  try {
    std::size_t used = 0;
    switch (spec.type) {
      case ValueType::kInt: {
        const long long v = std::stoll(text, &used);
        if (used == text.size()) return v;
        break;
      }
      case ValueType::kFloat: {
        const double v = std::stod(text, &used);
        if (used == text.size()) return v;
        break;
      }
      case ValueType::kBool:
        if (text == "true" || text == "1") return true;
        if (text == "false" || text == "0") return false;
        break;
      case ValueType::kString:
        return text;
    }
  } catch (const std::logic_error&) {
  }
  throw Error(ErrorCode::kArgument, fmt::format("bad value '{}' for --{}", text, spec.key));
}

namespace {

bool type_matches(const KeySpec& spec, const Json& v) {
  switch (spec.type) {
    case ValueType::kInt: return v.is_number_integer();
    case ValueType::kFloat: return v.is_number();
    case ValueType::kBool: return v.is_boolean();
    case ValueType::kString: return v.is_string();
  }
  return false;
}

}  // namespace

Json resolve_config(std::string_view command, const Json& file_config, const Json& flags) {
  const CommandSpec& spec = command_spec(command);
  Json out = Json::object();
  for (const KeySpec& k : spec.keys) {
    if (!k.default_value.is_null()) out[k.key] = k.default_value;
  }
  for (const Json* layer : {&file_config, &flags}) {
    if (layer->is_null()) continue;
    if (!layer->is_object()) throw Error(ErrorCode::kConfig, "config must be a JSON object");
    for (const auto& [name, value] : layer->items()) {
      const auto it = std::find_if(spec.keys.begin(), spec.keys.end(),
                                   [&](const KeySpec& k) { return k.key == name; });
      if (it == spec.keys.end()) {
        throw Error(ErrorCode::kConfig, fmt::format("unknown key '{}' for {}", name, command));
      }
      if (!type_matches(*it, value)) {
        throw Error(ErrorCode::kConfig, fmt::format("key '{}' has the wrong type", name));
      }
      out[name] = it->type == ValueType::kFloat ? Json(value.get<double>()) : value;
    }
  }
  for (const KeySpec& k : spec.keys) {
    if (!out.contains(k.key)) {
      throw Error(ErrorCode::kConfig, fmt::format("missing required key '{}' for {}", k.key, command));
    }
  }
  return out;
}

Json load_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot open {}", path.string()));
  try {
    Json j;
    in >> j;
    return j;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParse, fmt::format("{}: {}", path.string(), e.what()));
  }
}

void run_command(std::string_view command, const Json& config, std::ostream& log) {
  const Runner runner = runner_for(command);
  const Json resolved = resolve_config(command, config, Json());
  RunDir run(command, resolved);
  runner(resolved, run, log);
  run.write_config();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, fmt::format("cannot open {}", path.string()));
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

}  // namespace lmpnn
