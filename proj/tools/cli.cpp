#include "cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <ostream>

#include "maskgen/checkpoint.hpp"
#include "maskgen/config.hpp"
#include "maskgen/corpus.hpp"
#include "maskgen/errors.hpp"
#include "maskgen/generation.hpp"
#include "maskgen/metrics.hpp"
#include "maskgen/probe.hpp"
#include "maskgen/synth.hpp"
#include "maskgen/training.hpp"

namespace maskgen::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// The random-weight baseline of `probe` uses this sub-stream of --seed.
constexpr std::uint64_t kRandomBaselineStream = 99;

struct Invocation {
  std::string command_line;
  std::uint64_t seed = 1;
  std::string config_path;
  std::string out;
};

std::string join_command(const std::vector<std::string>& args) {
  std::string out = "maskgen";
  for (const auto& a : args) {
    out += ' ';
    if (a.find_first_of(" \t\"'") == std::string::npos && !a.empty()) {
      out += a;
    } else {
      out += '"';
      for (char c : a) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
      }
      out += '"';
    }
  }
  return out;
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  std::string quoted;
  for (char c : s) {
    if (c == '"' || c == '\\') quoted += '\\';
    quoted += c;
  }
  return quoted;
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::ofstream open_output(const std::string& path) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  return out;
}

// Refuses to overwrite any input of the invocation.
void check_output(const std::string& out, const std::vector<std::string>& inputs) {
  std::error_code ec;
  for (const auto& in : inputs) {
    if (in.empty()) continue;
    if (fs::weakly_canonical(out, ec) == fs::weakly_canonical(in, ec)) {
      throw ConfigError("output " + out + " would overwrite input " + in);
    }
  }
}

KeyValues config_file(const Invocation& inv) {
  return inv.config_path.empty() ? KeyValues{} : read_key_value_file(inv.config_path);
}

void print_resolved(std::ostream& out, const Invocation& inv, const KeyValues& kv) {
  out << "# command=" << inv.command_line << "\n# seed=" << inv.seed << "\n";
  out << format_key_values(kv);
}

std::string metadata(const Invocation& inv, const std::string& extra = "") {
  std::string m = "command=" + inv.command_line + "\nseed=" + std::to_string(inv.seed) + "\n";
  return m + extra;
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  std::optional<std::size_t> n_train, n_val, n_test, refs, min_objects, max_objects;
  std::optional<double> noise;
};

int run_synth(const Invocation& inv, const SynthArgs& a, std::ostream& out) {
  StagePlan plan;
  for (const auto& [k, v] : config_file(inv)) {
    if (!apply_key_value(plan, k, v)) throw ConfigError("unknown config key " + k);
  }
  const ModelConfig& mc = plan.model_config;
  SynthConfig sc;
  sc.seed = inv.seed;
  sc.num_regions = mc.num_regions;
  sc.feature_dim = mc.feature_dim;
  if (a.n_train) sc.n_train = *a.n_train;
  if (a.n_val) sc.n_val = *a.n_val;
  if (a.n_test) sc.n_test = *a.n_test;
  if (a.refs) sc.refs_per_item = *a.refs;
  if (a.min_objects) sc.min_objects = *a.min_objects;
  if (a.max_objects) sc.max_objects = *a.max_objects;
  if (a.noise) sc.noise = *a.noise;
  sc.validate();
  print_resolved(out, inv, {{"n_train", std::to_string(sc.n_train)},
                            {"n_val", std::to_string(sc.n_val)},
                            {"n_test", std::to_string(sc.n_test)},
                            {"refs_per_item", std::to_string(sc.refs_per_item)},
                            {"num_regions", std::to_string(sc.num_regions)},
                            {"feature_dim", std::to_string(sc.feature_dim)},
                            {"noise", format_real_value(sc.noise)},
                            {"min_objects", std::to_string(sc.min_objects)},
                            {"max_objects", std::to_string(sc.max_objects)}});
  fs::create_directories(inv.out);
  const SynthPaths p = synth_dataset(sc, inv.out, inv.command_line);
  out << "wrote " << p.train_corpus << " " << p.val_corpus << " " << p.test_corpus << "\n";
  return kOk;
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string stage, data, init_stage1, init_stage2, log;
};

int run_train(const Invocation& inv, const TrainArgs& a, std::ostream& out) {
  check_output(inv.out, {a.data, a.init_stage1, a.init_stage2, inv.config_path});
  StagePlan plan;
  plan.stage = parse_stage(a.stage);
  plan.seed = inv.seed;
  const KeyValues kv = config_file(inv);
  for (const auto& [k, v] : kv) {
    if (!apply_key_value(plan, k, v)) throw ConfigError("unknown config key " + k);
  }

  std::optional<Checkpoint> stage1, stage2;
  if (!a.init_stage1.empty()) stage1 = read_checkpoint(a.init_stage1);
  if (!a.init_stage2.empty()) stage2 = read_checkpoint(a.init_stage2);
  plan.stage1 = stage1 ? &stage1->model : nullptr;
  plan.stage2 = stage2 ? &stage2->model : nullptr;

  const bool needs_images = stage_input_mode(plan.stage) != InputMode::kCaptionOnly;
  const Dataset data = load_dataset(a.data, needs_images, plan.model_config.num_regions,
                                    plan.model_config.feature_dim);
  Vocabulary vocab = stage1 ? Vocabulary::from_tokens(stage1->vocabulary) : build_vocab(data.items);
  if (stage1 && stage2 && stage1->vocabulary != stage2->vocabulary) {
    throw DataError("stage 1 and stage 2 checkpoints use different vocabularies");
  }
  if (kv.count("vocab_size") && plan.model_config.vocab_size != vocab.size()) {
    throw DataError("config vocab_size " + std::to_string(plan.model_config.vocab_size) +
                    " does not match the vocabulary of " + std::to_string(vocab.size()));
  }
  plan.model_config.vocab_size = vocab.size();
  print_resolved(out, inv, to_key_values(plan));
  out << "stage=" << stage_name(plan.stage) << "\n";

  const std::string log_path = a.log.empty() ? inv.out + ".log" : a.log;
  check_output(log_path, {a.data, a.init_stage1, a.init_stage2, inv.out});
  std::ofstream log = open_output(log_path);
  log << "# command=" << inv.command_line << "\n# seed=" << inv.seed << "\n";
  const StageResult result = run_stage(plan, data, vocab, [&](const LogRecord& r) {
    log << format_log_record(r) << "\n";
  });
  write_checkpoint(inv.out, result.model, vocab.tokens(),
                   metadata(inv, std::string("stage=") + stage_name(plan.stage) + "\n"));
  out << "steps=" << result.log.size() << " final_loss=" << format_real_value(result.log.back().loss) << "\n";
  out << "wrote " << inv.out << " " << log_path << "\n";
  return kOk;
}

// --- generate --------------------------------------------------------------

InputMode parse_mode(const std::string& m) {
  if (m == "caption") return InputMode::kCaptionOnly;
  if (m == "image") return InputMode::kImageOnly;
  if (m == "both") return InputMode::kImagePlusCaption;
  throw ConfigError("unknown mode '" + m + "' (expected caption, image or both)");
}

TokenSeq caption_tokens(const CorpusItem& item, const Vocabulary& vocab, const ModelConfig& cfg) {
  TokenSeq t = encode_text(item.caption, vocab);
  if (t.size() > cfg.max_caption_length) t.resize(cfg.max_caption_length);
  return t;
}

struct GenerateArgs {
  std::string checkpoint, data, mode;
  std::size_t max_length = 0;
};

int run_generate(const Invocation& inv, const GenerateArgs& a, std::ostream& out) {
  check_output(inv.out, {a.data, a.checkpoint, inv.config_path});
  const InputMode mode = parse_mode(a.mode);
  const Checkpoint ck = read_checkpoint(a.checkpoint);
  const ModelConfig& cfg = ck.model.config();
  const Vocabulary vocab = Vocabulary::from_tokens(ck.vocabulary);
  const Dataset data = load_dataset(a.data, mode != InputMode::kCaptionOnly, cfg.num_regions, cfg.feature_dim);

  GenerationConfig gc;
  gc.max_length = a.max_length ? a.max_length : cfg.max_question_length;
  KeyValues shown = to_key_values(cfg);
  shown["mode"] = a.mode;
  shown["max_length"] = std::to_string(gc.max_length);
  print_resolved(out, inv, shown);

  std::ofstream file = open_output(inv.out);
  file << json{{"meta", {{"command", inv.command_line}, {"seed", inv.seed}, {"checkpoint", a.checkpoint}, {"mode", a.mode}}}}.dump()
       << "\n";
  std::size_t truncated = 0;
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    const TokenSeq caption = caption_tokens(data.items[i], vocab, cfg);
    const AssembledInput input = assemble_input(mode, data.has_images() ? &data.images[i] : nullptr, caption,
                                                cfg.max_caption_length, vocab.specials());
    const GenerationOutput g = generate(ck.model, input, gc);
    truncated += g.truncated ? 1 : 0;
    file << json{{"id", data.items[i].id}, {"question", decode_text(g.tokens, vocab)}}.dump() << "\n";
  }
  out << "items=" << data.items.size() << " truncated=" << truncated << "\nwrote " << inv.out << "\n";
  return kOk;
}

// --- eval ------------------------------------------------------------------

std::map<std::string, std::string> load_generated(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open generated questions " + path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(std::string("malformed record: ") + e.what(), number);
    }
    if (!record.is_object()) throw ParseError("record is not an object", number);
    if (record.contains("meta")) continue;
    if (!record.contains("id") || !record["id"].is_string()) throw ParseError("missing field 'id'", number);
    if (!record.contains("question") || !record["question"].is_string()) {
      throw ParseError("missing field 'question'", number);
    }
    if (!out.emplace(record["id"].get<std::string>(), record["question"].get<std::string>()).second) {
      throw ValidationError("line " + std::to_string(number) + ": duplicate id");
    }
  }
  return out;
}

struct EvalArgs {
  std::string generated, data;
};

int run_eval(const Invocation& inv, const EvalArgs& a, std::ostream& out) {
  check_output(inv.out, {a.data, a.generated, inv.config_path});
  const auto generated = load_generated(a.generated);
  const auto items = load_corpus(a.data);
  EvalCorpus corpus;
  for (const auto& item : items) {
    auto it = generated.find(item.id);
    if (it == generated.end()) throw DataError("no generated question for item " + item.id);
    EvalItem e;
    e.candidate = tokenize(it->second);
    for (const auto& q : item.questions) e.references.push_back(tokenize(q));
    corpus.push_back(std::move(e));
  }
  if (generated.size() != items.size()) throw DataError("generated file has ids absent from the corpus");
  print_resolved(out, inv, {{"generated", a.generated}, {"references", a.data}});
  const MetricReport report = evaluate_corpus(corpus);
  const std::string text = format_report(
      report, {"command=" + inv.command_line, "seed=" + std::to_string(inv.seed)});
  open_output(inv.out) << text;
  out << text;
  return kOk;
}

// --- probe -----------------------------------------------------------------

struct ProbeArgs {
  std::vector<std::string> checkpoints;
  std::string data;
  bool random = false;
  std::size_t max_items = 0;
};

int run_probe(const Invocation& inv, const ProbeArgs& a, std::ostream& out) {
  if (a.checkpoints.empty()) throw ConfigError("probe needs at least one --checkpoint label=path");
  std::vector<std::pair<std::string, Checkpoint>> models;
  std::vector<std::string> inputs = {a.data, inv.config_path};
  for (const auto& spec : a.checkpoints) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--checkpoint expects label=path, got " + spec);
    inputs.push_back(spec.substr(eq + 1));
    models.emplace_back(spec.substr(0, eq), read_checkpoint(spec.substr(eq + 1)));
  }
  check_output(inv.out, inputs);
  const ModelConfig& cfg = models.front().second.model.config();
  const std::vector<std::string>& vocab_tokens = models.front().second.vocabulary;
  for (const auto& [label, ck] : models) {
    ModelConfig a_cfg = ck.model.config(), b_cfg = cfg;
    a_cfg.dropout = b_cfg.dropout = 0;
    if (!(a_cfg == b_cfg) || ck.vocabulary != vocab_tokens) {
      throw DataError("checkpoint " + label + " differs in architecture or vocabulary");
    }
  }
  const Vocabulary vocab = Vocabulary::from_tokens(vocab_tokens);
  const Dataset data = load_dataset(a.data, true, cfg.num_regions, cfg.feature_dim);
  std::vector<ProbePair> pairs;
  for (std::size_t i = 0; i < data.items.size(); ++i) {
    if (a.max_items && pairs.size() >= a.max_items) break;
    pairs.push_back({data.images[i], caption_tokens(data.items[i], vocab, cfg)});
  }
  KeyValues shown = to_key_values(cfg);
  shown["items"] = std::to_string(pairs.size());
  print_resolved(out, inv, shown);

  std::vector<ProbeReport> reports;
  for (const auto& [label, ck] : models) reports.push_back(xsim_per_layer(ck.model, pairs, label, vocab.specials()));
  if (a.random) {
    const Model baseline = Model::init(cfg, derive_seed(inv.seed, kRandomBaselineStream));
    reports.push_back(xsim_per_layer(baseline, pairs, "random", vocab.specials()));
  }
  const std::string table = format_probe_table(reports);
  std::ofstream file = open_output(inv.out);
  file << "# command=" << inv.command_line << "\n# seed=" << inv.seed << "\n" << table;
  out << table;
  return kOk;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return kUsage;
    case ErrorKind::kPrerequisite: return kPrerequisite;
    case ErrorKind::kNumeric: return kNumeric;
    case ErrorKind::kShape:
    case ErrorKind::kState:
    case ErrorKind::kData: return kDataError;
  }
  return kInternal;
}

const char* kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kUsage: return "usage";
    case ErrorKind::kPrerequisite: return "prerequisite";
    case ErrorKind::kNumeric: return "numeric";
    case ErrorKind::kShape: return "shape";
    case ErrorKind::kState: return "state";
    case ErrorKind::kData: return "data";
  }
  return "internal";
}

void report_error(std::ostream& err, const char* kind, const std::string& message) {
  err << "error: kind=" << kind << " message=\"" << one_line(message) << "\"\n";
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Masked-token visual question generation toolkit", "maskgen"};
  app.require_subcommand(1);
  Invocation inv;
  inv.command_line = join_command(args);

  auto common = [&inv](CLI::App* sub, const char* out_help) {
    sub->add_option("--seed", inv.seed, "Random seed")->capture_default_str();
    sub->add_option("--config", inv.config_path, "key=value configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", inv.out, out_help)->required();
  };

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Write a synthetic corpus and feature files");
  common(synth_cmd, "Output directory");
  synth_cmd->add_option("--n-train", synth.n_train, "Training items");
  synth_cmd->add_option("--n-val", synth.n_val, "Validation items");
  synth_cmd->add_option("--n-test", synth.n_test, "Test items");
  synth_cmd->add_option("--refs", synth.refs, "Questions per item");
  synth_cmd->add_option("--min-objects", synth.min_objects, "Fewest objects per image");
  synth_cmd->add_option("--max-objects", synth.max_objects, "Most objects per image");
  synth_cmd->add_option("--noise", synth.noise, "Feature noise standard deviation");

  TrainArgs train;
  CLI::App* train_cmd = app.add_subcommand("train", "Train one stage and write a checkpoint");
  common(train_cmd, "Checkpoint path");
  train_cmd->add_option("--stage", train.stage, "1, 2, 2u, 3 or 3scratch")->required();
  train_cmd->add_option("--data", train.data, "Training corpus (.jsonl)")->required();
  train_cmd->add_option("--init-stage1", train.init_stage1, "Stage 1 checkpoint");
  train_cmd->add_option("--init-stage2", train.init_stage2, "Stage 2 checkpoint");
  train_cmd->add_option("--log", train.log, "Training log (default <out>.log)");

  GenerateArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("generate", "Generate one question per corpus item");
  common(gen_cmd, "Question file (.jsonl)");
  gen_cmd->add_option("--checkpoint", gen.checkpoint, "Model checkpoint")->required();
  gen_cmd->add_option("--data", gen.data, "Corpus (.jsonl)")->required();
  gen_cmd->add_option("--mode", gen.mode, "caption, image or both")->required();
  gen_cmd->add_option("--max-length", gen.max_length, "Longest question (default max_question_length)");

  EvalArgs ev;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score generated questions against corpus references");
  common(eval_cmd, "Report file");
  eval_cmd->add_option("--generated", ev.generated, "Question file from generate")->required();
  eval_cmd->add_option("--data", ev.data, "Reference corpus (.jsonl)")->required();

  ProbeArgs probe;
  CLI::App* probe_cmd = app.add_subcommand("probe", "Per-layer cross-modal similarity of [CLS]");
  common(probe_cmd, "Table file (.csv)");
  probe_cmd->add_option("--checkpoint", probe.checkpoints, "label=path, repeatable")->required();
  probe_cmd->add_option("--data", probe.data, "Corpus with features (.jsonl)")->required();
  probe_cmd->add_flag("--random", probe.random, "Add a random-weight baseline");
  probe_cmd->add_option("--max-items", probe.max_items, "Use at most this many pairs");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what());
    return kUsage;
  }

  try {
    if (synth_cmd->parsed()) return run_synth(inv, synth, out);
    if (train_cmd->parsed()) return run_train(inv, train, out);
    if (gen_cmd->parsed()) return run_generate(inv, gen, out);
    if (eval_cmd->parsed()) return run_eval(inv, ev, out);
    if (probe_cmd->parsed()) return run_probe(inv, probe, out);
  } catch (const Error& e) {
    report_error(err, kind_name(e.kind()), e.what());
    return exit_code(e.kind());
  } catch (const json::exception& e) {
    report_error(err, "data", e.what());
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    report_error(err, "data", e.what());
    return kDataError;
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what());
    return kInternal;
  }
  return kUsage;
}

}  // namespace maskgen::cli
