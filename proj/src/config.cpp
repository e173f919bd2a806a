#include "sebert/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "sebert/errors.hpp"

namespace sebert {

namespace {

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

// Drops a trailing "# ..." or "; ..." comment that follows whitespace.
std::string strip_comment(const std::string& line) {
  for (std::size_t i = 1; i < line.size(); ++i)
    if ((line[i] == '#' || line[i] == ';') && (line[i - 1] == ' ' || line[i - 1] == '\t')) return line.substr(0, i);
  return line;
}

std::size_t to_size(const std::string& key, const std::string& v) {
  std::size_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used == v.size()) return out;
  } catch (const std::exception&) {
  }
  throw ConfigError(key + ": expected a number, got '" + v + "'");
}

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Key {
  std::string section;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

// Wraps a value conversion so that library exceptions surface as ConfigError.
template <typename F>
auto guarded(const std::string& key, F f) {
  return [key, f](RunConfig& c, const std::string& v) {
    try {
      f(c, v);
    } catch (const ConfigError&) {
      throw;
    } catch (const ContractError& e) {
      throw ConfigError(key + ": " + e.what());
    }
  };
}

const std::vector<std::pair<std::string, Key>>& keys() {
  static const std::vector<std::pair<std::string, Key>> table = [] {
    std::vector<std::pair<std::string, Key>> t;
    auto add = [&](std::string section, std::string name, std::function<void(RunConfig&, const std::string&)> set,
                   std::function<std::string(const RunConfig&)> get) {
      t.push_back({name, Key{std::move(section), guarded(name, std::move(set)), std::move(get)}});
    };
    auto size_key = [&](std::string section, std::string name, std::function<std::size_t&(RunConfig&)> ref) {
      add(section, name, [name, ref](RunConfig& c, const std::string& v) { ref(c) = to_size(name, v); },
          [ref](RunConfig c) { return std::to_string(ref(c)); });
    };
    auto double_key = [&](std::string section, std::string name, std::function<double&(RunConfig&)> ref) {
      add(section, name, [name, ref](RunConfig& c, const std::string& v) { ref(c) = to_double(name, v); },
          [ref](RunConfig c) { return num(ref(c)); });
    };
    auto path_key = [&](std::string section, std::string name,
                        std::function<std::filesystem::path&(RunConfig&)> ref) {
      add(section, name, [ref](RunConfig& c, const std::string& v) { ref(c) = v; },
          [ref](RunConfig c) { return ref(c).string(); });
    };

    add("model", "variant", [](RunConfig& c, const std::string& v) { c.model.variant = parse_variant(v); },
        [](const RunConfig& c) { return variant_name(c.model.variant); });
    add("model", "cell", [](RunConfig& c, const std::string& v) { c.model.cell = parse_cell(v); },
        [](const RunConfig& c) { return cell_name(c.model.cell); });
    size_key("model", "d_model", [](RunConfig& c) -> std::size_t& { return c.model.encoder.d_model; });
    size_key("model", "n_layers", [](RunConfig& c) -> std::size_t& { return c.model.encoder.n_layers; });
    size_key("model", "n_heads", [](RunConfig& c) -> std::size_t& { return c.model.encoder.n_heads; });
    size_key("model", "d_ff", [](RunConfig& c) -> std::size_t& { return c.model.encoder.d_ff; });
    size_key("model", "max_len", [](RunConfig& c) -> std::size_t& { return c.model.encoder.max_len; });
    double_key("model", "dropout", [](RunConfig& c) -> double& { return c.model.encoder.dropout; });
    add("model", "activation",
        [](RunConfig& c, const std::string& v) {
          if (v == "relu") c.model.encoder.activation = FeedForwardActivation::Relu;
          else if (v == "tanh") c.model.encoder.activation = FeedForwardActivation::Tanh;
          else throw ConfigError("activation: expected relu or tanh, got '" + v + "'");
        },
        [](const RunConfig& c) {
          return std::string(c.model.encoder.activation == FeedForwardActivation::Relu ? "relu" : "tanh");
        });
    size_key("model", "hidden", [](RunConfig& c) -> std::size_t& { return c.model.hidden; });
    size_key("model", "max_span_len", [](RunConfig& c) -> std::size_t& { return c.model.recall.max_span_len; });
    add("model", "channels",
        [](RunConfig& c, const std::string& v) {
          std::vector<RecallChannel> chans;
          std::stringstream ss(v);
          std::string item;
          while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) chans.push_back(parse_channel(item));
          }
          if (chans.empty()) throw ConfigError("channels: at least one channel is required");
          c.model.recall.channels = chans;
        },
        [](const RunConfig& c) {
          std::string out;
          for (auto ch : c.model.recall.channels) out += (out.empty() ? "" : ",") + channel_name(ch);
          return out;
        });
    size_key("model", "top_k", [](RunConfig& c) -> std::size_t& { return c.top_k; });

    add("optimizer", "optimizer", [](RunConfig& c, const std::string& v) { c.optimizer.kind = parse_optimizer(v); },
        [](const RunConfig& c) { return optimizer_name(c.optimizer.kind); });
    double_key("optimizer", "lr", [](RunConfig& c) -> double& { return c.optimizer.adam.lr; });
    double_key("optimizer", "beta1", [](RunConfig& c) -> double& { return c.optimizer.adam.beta1; });
    double_key("optimizer", "beta2", [](RunConfig& c) -> double& { return c.optimizer.adam.beta2; });
    double_key("optimizer", "eps", [](RunConfig& c) -> double& { return c.optimizer.adam.eps; });
    double_key("optimizer", "sgd_lr", [](RunConfig& c) -> double& { return c.optimizer.sgd_lr; });
    double_key("optimizer", "switch_eps", [](RunConfig& c) -> double& { return c.optimizer.switch_eps; });
    double_key("optimizer", "clip_norm", [](RunConfig& c) -> double& { return c.model.clip_norm; });

    size_key("train", "epochs", [](RunConfig& c) -> std::size_t& { return c.train.epochs; });
    size_key("train", "batch_size", [](RunConfig& c) -> std::size_t& { return c.train.batch_size; });
    add("train", "seed", [](RunConfig& c, const std::string& v) { c.train.seed = to_u64("seed", v); },
        [](const RunConfig& c) { return std::to_string(c.train.seed); });
    add("train", "match", [](RunConfig& c, const std::string& v) { c.train.match = parse_match_mode(v); },
        [](const RunConfig& c) { return match_mode_name(c.train.match); });

    path_key("data", "train", [](RunConfig& c) -> std::filesystem::path& { return c.train_path; });
    path_key("data", "dev", [](RunConfig& c) -> std::filesystem::path& { return c.dev_path; });
    path_key("output", "checkpoint", [](RunConfig& c) -> std::filesystem::path& { return c.checkpoint_path; });
    path_key("output", "log", [](RunConfig& c) -> std::filesystem::path& { return c.log_path; });

    size_key("synth", "count", [](RunConfig& c) -> std::size_t& { return c.synth.count; });
    double_key("synth", "multi_fraction", [](RunConfig& c) -> double& { return c.synth.multi_fraction; });
    size_key("synth", "min_candidates", [](RunConfig& c) -> std::size_t& { return c.synth.min_candidates; });
    size_key("synth", "max_candidates", [](RunConfig& c) -> std::size_t& { return c.synth.max_candidates; });
    double_key("synth", "inverted_rate", [](RunConfig& c) -> double& { return c.synth.inverted_rate; });
    double_key("synth", "ambiguous_rate", [](RunConfig& c) -> double& { return c.synth.ambiguous_rate; });
    add("synth", "synth_seed", [](RunConfig& c, const std::string& v) { c.synth_seed = to_u64("synth_seed", v); },
        [](const RunConfig& c) { return std::to_string(c.synth_seed); });
    return t;
  }();
  return table;
}

const Key& find_key(const std::string& name) {
  for (const auto& [k, v] : keys())
    if (k == name) return v;
  throw ConfigError("unknown configuration key '" + name + "'");
}

}  // namespace

RunConfig::RunConfig() {
  model.variant = ModelVariant::SeBertNets;
  model.cell = CellType::Gru;
  model.hidden = 200;
  model.encoder.max_len = 140;
  train.batch_size = 32;
}

void RunConfig::set(const std::string& key, const std::string& value) { find_key(key).set(*this, trim(value)); }

std::string RunConfig::get(const std::string& key) const { return find_key(key).get(*this); }

const std::map<std::string, std::vector<std::string>>& RunConfig::sections() {
  static const auto grouped = [] {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& [name, key] : keys()) out[key.section].push_back(name);
    return out;
  }();
  return grouped;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& section : {"model", "optimizer", "train", "data", "output", "synth"}) {
    out += std::string(out.empty() ? "" : "\n") + "[" + section + "]\n";
    for (const auto& name : sections().at(section)) out += name + " = " + get(name) + "\n";
  }
  return out;
}

void RunConfig::validate() const {
  if (top_k == 0) throw ConfigError("top_k must be at least 1");
  ModelConfig m = model;
  m.encoder.vocab_size = std::max<std::size_t>(m.encoder.vocab_size, 1);
  try {
    m.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
  if (train.batch_size == 0) throw ConfigError("batch_size must be at least 1");
  if (!(optimizer.adam.lr >= 0.0) || !(optimizer.sgd_lr >= 0.0)) throw ConfigError("learning rates must be >= 0");
}

RunConfig parse_config(std::istream& in, RunConfig base) {
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(strip_comment(line));
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      if (!RunConfig::sections().count(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    try {
      const Key& k = find_key(key);
      if (!section.empty() && k.section != section)
        throw ConfigError("key '" + key + "' belongs to [" + k.section + "], not [" + section + "]");
      base.set(key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return base;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw NotFoundError("cannot open config file '" + path.string() + "'");
  return parse_config(f);
}

}  // namespace sebert
