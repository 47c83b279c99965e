// memlab: experiment runner. Commands dispatch to the capacity probes, the
// online learnability harness, the associative-recall probe, and the
// equivalence suites, writing <out>/raw.csv plus <out>/summary.json.
//
// Exit codes: 0 on success, 1 on config or I/O failure, 2 when a hard
// equivalence assertion fails.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "memlab/capacity.hpp"
#include "memlab/equivalence.hpp"
#include "memlab/harness.hpp"
#include "memlab/run_record.hpp"

using json = nlohmann::json;
using namespace memlab;

namespace {

// ---------------------------------------------------------------------------
// Flat key-value config with per-command schemas
// ---------------------------------------------------------------------------

struct FieldSpec {
  std::string default_value;  // empty + required -> must be provided
  bool required = false;
  std::vector<std::string> choices;  // empty -> free-form
};

using Schema = std::map<std::string, FieldSpec>;
using Config = std::map<std::string, std::string>;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string scalar_to_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

/// File values first, then flag overrides, then defaults. Unknown keys and
/// missing required fields are named in the error.
Config resolve_config(const Schema& schema, const std::optional<std::string>& config_path,
                      const std::vector<std::pair<std::string, std::string>>& flags) {
  Config cfg;
  auto set_checked = [&](const std::string& key, const std::string& value,
                         const std::string& source) {
    auto it = schema.find(key);
    if (it == schema.end()) {
      std::string known;
      for (const auto& [k, _] : schema) known += (known.empty() ? "" : ", ") + k;
      throw ConfigError("unknown field '" + key + "' (" + source + "); known fields: " + known);
    }
    if (!it->second.choices.empty()) {
      bool ok = false;
      for (const std::string& c : it->second.choices) ok = ok || c == value;
      if (!ok) {
        std::string opts;
        for (const std::string& c : it->second.choices) opts += (opts.empty() ? "" : ", ") + c;
        throw ConfigError("field '" + key + "': invalid value '" + value + "'; choices: " + opts);
      }
    }
    cfg[key] = value;
  };

  if (config_path) {
    json parsed;
    try {
      parsed = json::parse(read_text_file(*config_path));
    } catch (const std::exception& e) {
      throw ConfigError("config file '" + *config_path + "': " + std::string(e.what()));
    }
    if (!parsed.is_object()) throw ConfigError("config file must hold a flat JSON object");
    for (const auto& [key, value] : parsed.items())
      set_checked(key, scalar_to_string(value), "config file");
  }
  for (const auto& [key, value] : flags) set_checked(key, value, "flag");

  for (const auto& [key, spec] : schema) {
    if (cfg.count(key)) continue;
    if (spec.required) throw ConfigError("missing required field '" + key + "'");
    cfg[key] = spec.default_value;
  }
  return cfg;
}

double get_num(const Config& cfg, const std::string& key) {
  const std::string& s = cfg.at(key);
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (...) {
    throw ConfigError("field '" + key + "': expected a number, got '" + s + "'");
  }
  if (pos != s.size()) throw ConfigError("field '" + key + "': expected a number, got '" + s + "'");
  return v;
}

int get_int(const Config& cfg, const std::string& key) {
  return static_cast<int>(get_num(cfg, key));
}

bool get_bool(const Config& cfg, const std::string& key) {
  const std::string& s = cfg.at(key);
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ConfigError("field '" + key + "': expected true/false, got '" + s + "'");
}

std::vector<long long> get_list(const Config& cfg, const std::string& key) {
  std::vector<long long> out;
  std::stringstream ss(cfg.at(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoll(item));
    } catch (...) {
      throw ConfigError("field '" + key + "': expected a comma-separated integer list");
    }
  }
  if (out.empty()) throw ConfigError("field '" + key + "': list must not be empty");
  return out;
}

std::string config_hash(const Config& cfg) {
  std::string flat;
  for (const auto& [k, v] : cfg) flat += k + "=" + v + "\n";
  return fnv1a_hex(flat);
}

// ---------------------------------------------------------------------------
// Seed fanout capped by MEMLAB_THREADS; outputs land by index, so results do
// not depend on the worker count.
// ---------------------------------------------------------------------------

int thread_cap() {
  int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("MEMLAB_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return std::min(n, hw);
  }
  return hw;
}

template <typename Fn>
void parallel_over(int n, Fn fn) {
  int workers = std::min(thread_cap(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&fn, w, n, workers]() {
      for (int i = w; i < n; i += workers) fn(i);
    });
  for (std::thread& t : pool) t.join();
}

// ---------------------------------------------------------------------------
// Artifact writing
// ---------------------------------------------------------------------------

void write_artifacts(const Config& cfg, const std::string& command, RunRecord record,
                     json metrics) {
  std::filesystem::path out(cfg.at("out"));
  std::filesystem::create_directories(out);
  record.config = cfg;
  record.config.emplace("command", command);
  std::string csv = to_csv(record);
  write_text_file((out / "raw.csv").string(), csv);

  json summary;
  summary["command"] = command;
  summary["config"] = record.config;
  summary["config_hash"] = config_hash(record.config);
  summary["raw_csv_hash"] = fnv1a_hex(csv);
  summary["metrics"] = std::move(metrics);
  write_text_file((out / "summary.json").string(), summary.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// capacity
// ---------------------------------------------------------------------------

Schema capacity_schema() {
  return {
      {"out", {"", true, {}}},
      {"probe", {"linear", false, {"linear", "poly", "deep"}}},
      {"d_k", {"8", false, {}}},
      {"d_v", {"8", false, {}}},
      {"m_min", {"1", false, {}}},
      {"m_max", {"12", false, {}}},
      {"map", {"identity", false, {"identity", "polynomial", "exp_truncated"}}},
      {"degree", {"2", false, {}}},
      {"block", {"false", false, {"true", "false", "0", "1"}}},
      {"arch", {"mlp2", false, {"mlp2", "gated_mlp", "stackL"}}},
      {"hidden", {"0", false, {}}},
      {"fit", {"pseudoinverse", false, {"pseudoinverse", "gd"}}},
      {"max_iters", {"60000", false, {}}},
      {"tol_fit", {"1e-6", false, {}}},
      {"seeds", {"0", false, {}}},
  };
}

int run_capacity(const Config& cfg) {
  std::vector<long long> seeds = get_list(cfg, "seeds");
  int m_min = get_int(cfg, "m_min"), m_max = get_int(cfg, "m_max");
  if (m_min < 1 || m_max < m_min)
    throw ConfigError("field 'm_min'/'m_max': need 1 <= m_min <= m_max");
  const std::string probe_kind = cfg.at("probe");

  std::vector<std::vector<CapacityReport>> results(seeds.size());
  parallel_over(static_cast<int>(seeds.size()), [&](int si) {
    for (int m = m_min; m <= m_max; ++m) {
      CapacityProbe p;
      p.d_k = get_int(cfg, "d_k");
      p.d_v = get_int(cfg, "d_v");
      p.m = m;
      p.seed = static_cast<uint64_t>(seeds[si]);
      p.tol_fit = get_num(cfg, "tol_fit");
      p.gd.max_iters = get_int(cfg, "max_iters");
      p.fit = cfg.at("fit") == "gd" ? FitMethod::gd : FitMethod::pseudoinverse;
      if (probe_kind == "linear") {
        results[si].push_back(probe_linear_capacity(p));
      } else if (probe_kind == "poly") {
        int degree = get_int(cfg, "degree");
        if (get_bool(cfg, "block")) {
          p.block_map = true;
          p.block_degree = degree;
        } else {
          p.map = cfg.at("map") == "exp_truncated" ? FeatureMapSpec::exp_truncated(degree)
                                                   : FeatureMapSpec::polynomial(degree);
        }
        results[si].push_back(probe_poly_capacity(p));
      } else {
        p.arch = cfg.at("arch") == "gated_mlp" ? MemoryArch::gated_mlp
                 : cfg.at("arch") == "stackL"  ? MemoryArch::stackL
                                               : MemoryArch::mlp2;
        p.hidden = get_int(cfg, "hidden");
        p.fit = FitMethod::gd;
        results[si].push_back(probe_deep_capacity(p));
      }
    }
  });

  RunRecord rec;
  rec.columns = {"seed", "m", "lifted_dim", "monomial_dim", "rank", "residual", "fits",
                 "retries", "iters"};
  json boundaries = json::object();
  for (size_t si = 0; si < seeds.size(); ++si) {
    int boundary = 0;
    for (const CapacityReport& r : results[si]) {
      rec.add_row({static_cast<double>(seeds[si]), static_cast<double>(r.m),
                   static_cast<double>(r.lifted_dim), static_cast<double>(r.monomial_dim),
                   static_cast<double>(r.key_rank), r.fit_residual, r.fits ? 1.0 : 0.0,
                   static_cast<double>(r.retries), static_cast<double>(r.iters)});
      if (r.fits) boundary = r.m;
    }
    boundaries[std::to_string(seeds[si])] = boundary;
  }
  json metrics;
  metrics["fit_boundary_by_seed"] = boundaries;
  write_artifacts(cfg, "capacity", std::move(rec), std::move(metrics));
  return 0;
}

// ---------------------------------------------------------------------------
// learnability
// ---------------------------------------------------------------------------

Schema learnability_schema() {
  return {
      {"out", {"", true, {}}},
      {"setting",
       {"low_rank",
        false,
        {"low_rank", "mlp_map", "attn_mlp", "attn_outputs_as_inputs", "swa_mlp"}}},
      {"d", {"32", false, {}}},
      {"steps", {"3000", false, {}}},
      {"rank", {"0", false, {}}},
      {"swa_window", {"512", false, {}}},
      {"optimizer", {"adam", false, {"sgd", "rmsprop", "adam"}}},
      {"lr", {"1e-3", false, {}}},
      {"n_hidden", {"2", false, {}}},
      {"expansion", {"1", false, {}}},
      {"seeds", {"0", false, {}}},
  };
}

SettingKind setting_from_name(const std::string& name) {
  if (name == "low_rank") return SettingKind::low_rank;
  if (name == "mlp_map") return SettingKind::mlp_map;
  if (name == "attn_mlp") return SettingKind::attn_mlp;
  if (name == "attn_outputs_as_inputs") return SettingKind::attn_outputs_as_inputs;
  return SettingKind::swa_mlp;
}

int run_learnability_cmd(const Config& cfg) {
  std::vector<long long> seeds = get_list(cfg, "seeds");
  std::vector<LearnabilityResult> results(seeds.size());
  parallel_over(static_cast<int>(seeds.size()), [&](int si) {
    LearnabilitySetting s;
    s.kind = setting_from_name(cfg.at("setting"));
    s.d = get_int(cfg, "d");
    s.t = get_int(cfg, "steps");
    s.rank = get_int(cfg, "rank");
    s.swa_window = get_int(cfg, "swa_window");
    s.seed = static_cast<uint64_t>(seeds[si]);
    OnlineTrainer trainer;
    trainer.opt.kind = cfg.at("optimizer") == "sgd"       ? Optimizer::sgd
                       : cfg.at("optimizer") == "rmsprop" ? Optimizer::rmsprop
                                                          : Optimizer::adam;
    trainer.opt.lr = get_num(cfg, "lr");
    trainer.n_hidden = get_int(cfg, "n_hidden");
    trainer.expansion = get_int(cfg, "expansion");
    trainer.learner_seed = static_cast<uint64_t>(seeds[si]) + 0x517cc1b727220a95ULL;
    results[si] = run_learnability(s, trainer);
  });

  RunRecord rec;
  rec.columns = {"seed", "step", "loss"};
  json final_means = json::object();
  for (size_t si = 0; si < seeds.size(); ++si) {
    for (size_t j = 0; j < results[si].losses.size(); ++j)
      rec.add_row(
          {static_cast<double>(seeds[si]), static_cast<double>(j), results[si].losses[j]});
    final_means[std::to_string(seeds[si])] = results[si].final_window_mean;
  }
  json metrics;
  metrics["final_window_mean_by_seed"] = final_means;
  int skipped = 0;
  for (const auto& r : results) skipped += r.skipped_normalization;
  metrics["skipped_normalization"] = skipped;
  write_artifacts(cfg, "learnability", std::move(rec), std::move(metrics));
  return 0;
}

// ---------------------------------------------------------------------------
// recall
// ---------------------------------------------------------------------------

Schema recall_schema() {
  return {
      {"out", {"", true, {}}},
      {"rule",
       {"delta",
        false,
        {"hebbian", "delta", "titans", "omega", "atlas", "dla", "swla", "deeptransformer",
         "dot"}}},
      {"map", {"identity", false, {"identity", "polynomial", "exp_truncated"}}},
      {"degree", {"2", false, {}}},
      {"d", {"8", false, {}}},
      {"n_pairs", {"1,2,4,8,16,32", false, {}}},
      {"distractors", {"0", false, {}}},
      {"passes", {"25", false, {}}},
      {"window_c", {"1", false, {}}},
      {"alpha", {"1.0", false, {}}},
      {"eta", {"1.0", false, {}}},
      {"theta", {"0.0", false, {}}},
      {"normalized_step", {"true", false, {"true", "false", "0", "1"}}},
      {"seeds", {"0", false, {}}},
  };
}

int run_recall_cmd(const Config& cfg) {
  std::vector<long long> seeds = get_list(cfg, "seeds");
  std::vector<long long> pair_counts = get_list(cfg, "n_pairs");

  RecallConfig base;
  auto kind = rule_from_name(cfg.at("rule"));
  if (!kind) throw ConfigError("field 'rule': unknown rule");
  base.rule.kind = *kind;
  if (cfg.at("map") == "polynomial")
    base.rule.map = FeatureMapSpec::polynomial(get_int(cfg, "degree"));
  else if (cfg.at("map") == "exp_truncated")
    base.rule.map = FeatureMapSpec::exp_truncated(get_int(cfg, "degree"));
  base.rule.window_c = get_int(cfg, "window_c");
  base.write_passes = get_int(cfg, "passes");
  base.normalized_step = get_bool(cfg, "normalized_step");
  base.gates.alpha = get_num(cfg, "alpha");
  base.gates.eta = get_num(cfg, "eta");
  base.gates.theta = get_num(cfg, "theta");
  if (rule_has_window(base.rule.kind)) base.gates.gammas.assign(base.rule.window_c, 1.0);
  validate_gates(base.gates);

  std::vector<std::vector<RecallResult>> results(seeds.size());
  parallel_over(static_cast<int>(seeds.size()), [&](int si) {
    for (long long n : pair_counts) {
      RecallTask task;
      task.n_pairs = static_cast<int>(n);
      task.d = get_int(cfg, "d");
      task.distractors = get_int(cfg, "distractors");
      task.seed = static_cast<uint64_t>(seeds[si]);
      results[si].push_back(run_recall(task, base));
    }
  });

  RunRecord rec;
  rec.columns = {"seed", "n_pairs", "accuracy", "mean_l2_error"};
  double acc_sum = 0.0;
  for (size_t si = 0; si < seeds.size(); ++si)
    for (size_t pi = 0; pi < pair_counts.size(); ++pi) {
      rec.add_row({static_cast<double>(seeds[si]), static_cast<double>(pair_counts[pi]),
                   results[si][pi].accuracy, results[si][pi].mean_l2_error});
      acc_sum += results[si][pi].accuracy;
    }
  json metrics;
  metrics["mean_accuracy"] = acc_sum / (seeds.size() * pair_counts.size());
  write_artifacts(cfg, "recall", std::move(rec), std::move(metrics));
  return 0;
}

// ---------------------------------------------------------------------------
// equivalence
// ---------------------------------------------------------------------------

Schema equivalence_schema() {
  return {
      {"out", {"", true, {}}},
      {"which", {"all", false, {"rules", "chunk", "all"}}},
      {"steps", {"50", false, {}}},
      {"tokens", {"64", false, {}}},
      {"seeds", {"0,1,2,3,4,5,6,7,8,9", false, {}}},
  };
}

int run_equivalence(const Config& cfg) {
  int n_seeds = static_cast<int>(get_list(cfg, "seeds").size());
  std::vector<EquivCheck> checks;
  if (cfg.at("which") != "chunk")
    for (EquivCheck& c : rule_equivalence_suite(get_int(cfg, "steps"), n_seeds))
      checks.push_back(std::move(c));
  if (cfg.at("which") != "rules")
    for (EquivCheck& c : chunk_equivalence_suite(get_int(cfg, "tokens"), n_seeds))
      checks.push_back(std::move(c));

  RunRecord rec;
  rec.columns = {"check", "max_abs_diff", "tol", "pass"};
  bool all_pass = true;
  json detail = json::object();
  for (size_t i = 0; i < checks.size(); ++i) {
    rec.add_row({static_cast<double>(i), checks[i].max_abs_diff, checks[i].tol,
                 checks[i].pass ? 1.0 : 0.0});
    detail[checks[i].name] = {{"max_abs_diff", checks[i].max_abs_diff},
                              {"tol", checks[i].tol},
                              {"pass", checks[i].pass}};
    all_pass = all_pass && checks[i].pass;
  }
  json metrics;
  metrics["checks"] = detail;
  metrics["pass"] = all_pass;
  write_artifacts(cfg, "equivalence", std::move(rec), std::move(metrics));
  if (!all_pass) {
    std::cerr << "equivalence: hard assertion failed (see summary.json)\n";
    return 2;
  }
  return 0;
}

// ---------------------------------------------------------------------------

void usage(std::ostream& os) {
  os << "usage: memlab <capacity|learnability|recall|equivalence> [--config PATH] "
        "[--key value]...\n"
        "Artifacts: <out>/raw.csv and <out>/summary.json. MEMLAB_THREADS caps workers.\n";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    usage(std::cerr);
    return 1;
  }
  std::string command = argv[1];
  if (command == "-h" || command == "--help") {
    usage(std::cout);
    return 0;
  }

  std::optional<std::string> config_path;
  std::vector<std::pair<std::string, std::string>> flags;
  for (int i = 2; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg.rfind("--", 0) != 0 || i + 1 >= argc) {
      std::cerr << "memlab: expected --key value pairs, got '" << arg << "'\n";
      return 1;
    }
    std::string key = arg.substr(2);
    std::string value = argv[++i];
    if (key == "config")
      config_path = value;
    else
      flags.emplace_back(key, value);
  }

  try {
    Schema schema;
    int (*runner)(const Config&) = nullptr;
    if (command == "capacity") {
      schema = capacity_schema();
      runner = run_capacity;
    } else if (command == "learnability") {
      schema = learnability_schema();
      runner = run_learnability_cmd;
    } else if (command == "recall") {
      schema = recall_schema();
      runner = run_recall_cmd;
    } else if (command == "equivalence") {
      schema = equivalence_schema();
      runner = run_equivalence;
    } else {
      std::cerr << "memlab: unknown command '" << command
                << "'; choices: capacity, learnability, recall, equivalence\n";
      return 1;
    }
    return runner(resolve_config(schema, config_path, flags));
  } catch (const std::exception& e) {
    std::cerr << "memlab: " << e.what() << "\n";
    return 1;
  }
}
