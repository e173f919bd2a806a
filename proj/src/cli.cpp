#include "sebert/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "sebert/config.hpp"
#include "sebert/errors.hpp"
#include "sebert/training.hpp"

namespace sebert {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

void require_file(const fs::path& path, const std::string& what) {
  if (path.empty()) throw ConfigError(what + " path is not set");
  if (!fs::is_regular_file(path)) throw NotFoundError(what + " file '" + path.string() + "' does not exist");
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open '" + path.string() + "' for writing");
  return f;
}

// One --key flag per configuration key; underscores also accepted as dashes.
struct Overrides {
  std::map<std::string, std::string> values;

  void attach(CLI::App& cmd, const std::vector<std::string>& sections) {
    for (const auto& section : sections)
      for (const auto& key : RunConfig::sections().at(section)) {
        std::string names = "--" + key;
        if (key.find('_') != std::string::npos) {
          std::string dashed = key;
          std::replace(dashed.begin(), dashed.end(), '_', '-');
          names += ",--" + dashed;
        }
        cmd.add_option(names, values[key], "override [" + section + "] " + key);
      }
  }

  void apply(RunConfig& cfg, const CLI::App& cmd) const {
    for (const auto& [key, value] : values)
      if (cmd.count("--" + key) > 0) cfg.set(key, value);
  }
};

std::string dev_summary(const EvalReport& r) {
  std::string s;
  for (const auto& row : r.top_k) s += " f1@" + std::to_string(row.k) + "=" + std::to_string(row.f1);
  return s;
}

int cmd_train(const fs::path& config_path, const fs::path& resume, const Overrides& ov, const CLI::App& cmd,
              std::ostream& out, std::ostream& err) {
  RunConfig cfg = config_path.empty() ? RunConfig() : load_config(config_path);
  ov.apply(cfg, cmd);
  cfg.validate();
  require_file(cfg.train_path, "training data");
  if (!cfg.dev_path.empty()) require_file(cfg.dev_path, "dev data");
  if (cfg.checkpoint_path.empty()) throw ConfigError("output checkpoint path is not set");
  fs::path log_path = cfg.log_path;
  if (log_path.empty()) log_path = fs::path(cfg.checkpoint_path).concat(".log.jsonl");

  const auto train_raw = load_jsonl(cfg.train_path);
  std::optional<Checkpoint> resumed;
  if (!resume.empty()) resumed = load_checkpoint(resume);

  ModelConfig mc = cfg.model;
  mc.recall.k = cfg.top_k;
  SpanModel model = resumed ? std::move(resumed->model) : SpanModel(mc, build_vocab(train_raw), cfg.train.seed);
  Optimizer<float> optimizer =
      resumed && resumed->optimizer ? std::move(*resumed->optimizer) : Optimizer<float>(cfg.optimizer);
  TrainingState state = resumed ? resumed->training : TrainingState{};
  const std::size_t max_len = model.config().encoder.max_len;

  const auto train = make_train_set(train_raw, model.vocabulary(), max_len);
  if (!train.skipped.empty()) {
    err << "skipped " << train.skipped.size() << " training record(s) whose entity was not found in the text:";
    for (const auto& id : train.skipped) err << ' ' << id;
    err << '\n';
  }
  std::optional<EvalSet> dev;
  if (!cfg.dev_path.empty()) dev = make_eval_set(load_jsonl(cfg.dev_path), model.vocabulary(), max_len);

  err << "training " << variant_name(model.variant()) << " on " << train.items.size() << " record(s), "
      << model.parameters().size() << " parameter tensors, optimizer " << optimizer.phase_name() << '\n';

  auto log = open_out(log_path);
  TrainConfig tc = cfg.train;
  tc.eval_k = cfg.top_k;
  tc.seed = cfg.train.seed + state.epoch;
  try {
    fit(model, optimizer, train.items, dev ? &*dev : nullptr, tc, [&](const EpochRecord& rec) {
      ojson line{{"epoch", state.epoch + rec.epoch}, {"loss", rec.mean_loss}, {"steps", rec.steps},
                 {"phase", rec.phase}};
      if (rec.dev) line["dev"] = ojson::parse(rec.dev->to_json());
      log << line.dump() << '\n';
      log.flush();
      err << "epoch " << state.epoch + rec.epoch << " loss=" << rec.mean_loss << " phase=" << rec.phase
          << (rec.dev ? dev_summary(*rec.dev) : std::string()) << '\n';
    });
  } catch (const DivergenceError& e) {
    err << "training diverged: " << e.what() << " (optimizer " << optimizer.phase_name() << ", "
        << optimizer.steps() << " steps taken); no checkpoint written\n";
    return kExitDivergence;
  }
  state.epoch += tc.epochs;
  state.step = optimizer.steps();
  save_checkpoint(cfg.checkpoint_path, model, &optimizer, state);
  out << "checkpoint " << cfg.checkpoint_path.string() << "\nlog " << log_path.string() << '\n';
  return kExitOk;
}

Predictions read_predictions(const fs::path& path) {
  require_file(path, "predictions");
  std::ifstream f(path);
  Predictions out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      auto& texts = out[j.at("id").get<std::string>()];
      for (const auto& e : j.at("entities")) texts.push_back(e.at("text").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

GoldSets read_gold(const fs::path& data) {
  GoldSets gold;
  for (const auto& ex : load_jsonl(data)) {
    if (gold.count(ex.id)) throw DataError("duplicate example id '" + ex.id + "'");
    gold[ex.id] = ex.entities;
  }
  return gold;
}

Checkpoint open_model(const fs::path& checkpoint, const std::string& variant) {
  require_file(checkpoint, "checkpoint");
  Checkpoint ck = load_checkpoint(checkpoint);
  if (!variant.empty()) ck.model.set_variant(parse_variant(variant));
  return ck;
}

int cmd_eval(const fs::path& checkpoint, const fs::path& predictions, const fs::path& data, std::size_t top_k,
             const std::string& variant, const std::string& match, bool as_json, std::ostream& out) {
  if (top_k == 0) throw ConfigError("--top-k must be at least 1");
  require_file(data, "data");
  const MatchMode mode = parse_match_mode(match);
  EvalReport report;
  if (!predictions.empty()) {
    report = evaluate(read_predictions(predictions), read_gold(data), top_k, mode);
  } else {
    if (checkpoint.empty()) throw ConfigError("eval needs --checkpoint or --predictions");
    const Checkpoint ck = open_model(checkpoint, variant);
    const auto set = make_eval_set(load_jsonl(data), ck.model.vocabulary(), ck.model.config().encoder.max_len);
    report = evaluate_model(ck.model, set, top_k, mode);
  }
  out << (as_json ? report.to_json() + "\n" : report.to_table());
  return kExitOk;
}

int cmd_predict(const fs::path& checkpoint, const fs::path& data, std::size_t top_k, const std::string& variant,
                const fs::path& out_path, std::ostream& out) {
  if (top_k == 0) throw ConfigError("--top-k must be at least 1");
  require_file(data, "data");
  const Checkpoint ck = open_model(checkpoint, variant);
  const auto raw = load_jsonl(data);
  std::vector<TokenizedInput> inputs;
  for (auto ex : raw) {
    ex.entities.clear();
    inputs.push_back(encode_example(ex, ck.model.vocabulary(), ck.model.config().encoder.max_len));
  }
  const auto cands = predict_candidates(ck.model, inputs, top_k);
  std::ofstream file;
  if (!out_path.empty()) file = open_out(out_path);
  std::ostream& sink = out_path.empty() ? out : file;
  for (const auto& item : inputs) {
    ojson ents = ojson::array();
    for (const auto& c : cands.at(item.id))
      ents.push_back({{"text", c.entity_text}, {"score", c.score}, {"start", c.start}, {"end", c.end}});
    sink << ojson{{"id", item.id}, {"entities", ents}}.dump() << '\n';
  }
  return kExitOk;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

int cmd_inspect(const fs::path& checkpoint, const fs::path& data, const std::string& example_id,
                const fs::path& out_dir, std::ostream& out) {
  require_file(data, "data");
  const Checkpoint ck = open_model(checkpoint, "");
  std::optional<RawExample> found;
  for (auto& ex : load_jsonl(data))
    if (ex.id == example_id) found = std::move(ex);
  if (!found) throw NotFoundError("example id '" + example_id + "' is not in " + data.string());
  found->entities.clear();
  const auto item = encode_example(*found, ck.model.vocabulary(), ck.model.config().encoder.max_len);

  Tape<float> tape(false);
  std::vector<std::vector<Tensor>> attn;
  ck.model.forward_one(tape, item, nullptr, &attn);

  std::vector<std::string> labels;
  for (int id : item.token_ids) labels.push_back(ck.model.vocabulary().label(id));
  auto write_matrix = [&](std::ostream& os, const Tensor& w) {
    os.precision(9);
    os << "query\\key";
    for (const auto& l : labels) os << ',' << csv_field(l);
    os << '\n';
    for (std::size_t r = 0; r < w.rows(); ++r) {
      os << csv_field(labels[r]);
      for (std::size_t c = 0; c < w.cols(); ++c) os << ',' << w.at(r, c);
      os << '\n';
    }
  };
  for (std::size_t l = 0; l < attn.size(); ++l)
    for (std::size_t h = 0; h < attn[l].size(); ++h) {
      if (out_dir.empty()) {
        out << "# layer " << l << " head " << h << '\n';
        write_matrix(out, attn[l][h]);
        out << '\n';
      } else {
        fs::create_directories(out_dir);
        auto f = open_out(out_dir / ("layer" + std::to_string(l) + "_head" + std::to_string(h) + ".csv"));
        write_matrix(f, attn[l][h]);
      }
    }
  if (!out_dir.empty()) out << "wrote " << attn.size() << " layer(s) to " << out_dir.string() << '\n';
  return kExitOk;
}

int cmd_synth(const fs::path& config_path, const fs::path& out_path, const Overrides& ov, const CLI::App& cmd,
              std::ostream& out) {
  RunConfig cfg = config_path.empty() ? RunConfig() : load_config(config_path);
  ov.apply(cfg, cmd);
  const auto corpus = generate_synthetic(cfg.synth, cfg.synth_seed);
  if (out_path.empty()) {
    write_jsonl(out, corpus);
  } else {
    auto f = open_out(out_path);
    write_jsonl(f, corpus);
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Event-entity span extraction: train, evaluate and inspect models."};
  app.require_subcommand(1);

  fs::path config_path, resume, checkpoint, data, predictions, out_path, out_dir;
  std::size_t top_k = 5;
  std::string variant, match = "any", example_id;
  bool as_json = false;

  auto* train = app.add_subcommand("train", "train a model from a config file");
  train->add_option("--config", config_path, "config file");
  train->add_option("--resume", resume, "continue from a checkpoint (model, optimizer and epoch count)");
  Overrides train_ov;
  train_ov.attach(*train, {"model", "optimizer", "train", "data", "output"});

  auto* eval = app.add_subcommand("eval", "score a checkpoint or a predictions file");
  eval->add_option("--checkpoint", checkpoint, "model checkpoint");
  eval->add_option("--predictions", predictions, "JSONL written by predict, scored instead of a checkpoint");
  eval->add_option("--data", data, "JSONL data with gold entities")->required();
  eval->add_option("--top-k,--top_k", top_k, "largest cut-off k");
  eval->add_option("--variant", variant, "decode as sebertnets or hsebertnets");
  eval->add_option("--match", match, "multi-entity rule: any or all");
  eval->add_flag("--json", as_json, "print the JSON report instead of a table");

  auto* predict = app.add_subcommand("predict", "write ranked entities per example as JSONL");
  predict->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  predict->add_option("--data", data, "JSONL data")->required();
  predict->add_option("--top-k,--top_k", top_k, "candidates per example");
  predict->add_option("--variant", variant, "decode as sebertnets or hsebertnets");
  predict->add_option("--out", out_path, "output file (default stdout)");

  auto* inspect = app.add_subcommand("inspect", "dump attention weights for one example as CSV");
  inspect->add_option("--checkpoint", checkpoint, "model checkpoint")->required();
  inspect->add_option("--data", data, "JSONL data containing the example")->required();
  inspect->add_option("--example-id,--example_id", example_id, "example id")->required();
  inspect->add_option("--out-dir,--out_dir", out_dir, "write one CSV per layer and head here");

  auto* synth = app.add_subcommand("synth", "generate a synthetic JSONL corpus");
  synth->add_option("--config", config_path, "config file ([synth] section)");
  synth->add_option("--out", out_path, "output file (default stdout)");
  Overrides synth_ov;
  synth_ov.attach(*synth, {"synth"});

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(config_path, resume, train_ov, *train, out, err);
    if (*eval) return cmd_eval(checkpoint, predictions, data, top_k, variant, match, as_json, out);
    if (*predict) return cmd_predict(checkpoint, data, top_k, variant, out_path, out);
    if (*inspect) return cmd_inspect(checkpoint, data, example_id, out_dir, out);
    if (*synth) return cmd_synth(config_path, out_path, synth_ov, *synth, out);
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace sebert
