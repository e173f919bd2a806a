#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "sebert/errors.hpp"
#include "sebert/model.hpp"
#include "sebert/utf8.hpp"

namespace sebert {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

using json = nlohmann::ordered_json;

constexpr char kMagic[4] = {'S', 'E', 'B', 'N'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kFixedHeader = 12;
constexpr std::string_view kCrcKey = "\"header_crc32\":\"";
constexpr std::string_view kCrcPlaceholder = "00000000";

std::uint32_t crc32_of(std::string_view bytes, std::uint32_t crc = 0) {
  return static_cast<std::uint32_t>(
      ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

std::string hex8(std::uint32_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(8, '0');
  for (int i = 7; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

std::uint32_t get_u32(std::string_view bytes, std::size_t at) {
  std::uint32_t v;
  std::memcpy(&v, bytes.data() + at, 4);
  return v;
}

json encoder_json(const EncoderConfig& c) {
  return json{{"d_model", c.d_model},
              {"n_layers", c.n_layers},
              {"n_heads", c.n_heads},
              {"d_ff", c.d_ff},
              {"max_len", c.max_len},
              {"vocab_size", c.vocab_size},
              {"dropout", c.dropout},
              {"activation", c.activation == FeedForwardActivation::Relu ? "relu" : "tanh"}};
}

EncoderConfig encoder_from(const json& j) {
  EncoderConfig c;
  c.d_model = j.at("d_model").get<std::size_t>();
  c.n_layers = j.at("n_layers").get<std::size_t>();
  c.n_heads = j.at("n_heads").get<std::size_t>();
  c.d_ff = j.at("d_ff").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  const auto act = j.at("activation").get<std::string>();
  if (act != "relu" && act != "tanh") throw FormatError(kFixedHeader, "unknown activation '" + act + "'");
  c.activation = act == "relu" ? FeedForwardActivation::Relu : FeedForwardActivation::Tanh;
  return c;
}

json recall_json(const RecallConfig& r) {
  json channels = json::array();
  for (auto ch : r.channels) channels.push_back(channel_name(ch));
  return json{{"k", r.k}, {"max_span_len", r.max_span_len}, {"channels", channels}};
}

RecallConfig recall_from(const json& j) {
  RecallConfig r;
  r.k = j.at("k").get<std::size_t>();
  r.max_span_len = j.at("max_span_len").get<std::size_t>();
  r.channels.clear();
  for (const auto& ch : j.at("channels")) r.channels.push_back(parse_channel(ch.get<std::string>()));
  return r;
}

json adam_json(const AdamState<float>& a) {
  return json{{"lr", a.hyper.lr}, {"beta1", a.hyper.beta1}, {"beta2", a.hyper.beta2},
              {"eps", a.hyper.eps}, {"step", a.step}};
}

AdamState<float> adam_from(const json& j) {
  AdamState<float> a;
  a.hyper.lr = j.at("lr").get<double>();
  a.hyper.beta1 = j.at("beta1").get<double>();
  a.hyper.beta2 = j.at("beta2").get<double>();
  a.hyper.eps = j.at("eps").get<double>();
  a.step = j.at("step").get<std::uint64_t>();
  return a;
}

struct Blob {
  std::string name;
  Shape shape;
  std::span<const float> values;
};

}  // namespace

void write_checkpoint(std::ostream& out, const SpanModel& model, const Optimizer<float>* optimizer,
                      const TrainingState& training) {
  const auto params = model.parameters();
  std::vector<Blob> blobs;
  for (const auto& p : params) blobs.push_back({p.name, p.tensor.shape(), p.tensor.data()});

  json opt = nullptr;
  if (optimizer) {
    const AdamState<float>* adam = nullptr;
    opt = json{{"kind", optimizer_name(optimizer->kind())}};
    if (const auto* a = std::get_if<AdamState<float>>(&optimizer->state())) {
      adam = a;
      opt["adam"] = adam_json(*a);
    } else if (const auto* s = std::get_if<SgdState<float>>(&optimizer->state())) {
      opt["lr"] = s->lr;
      opt["step"] = s->step;
    } else {
      const auto& w = std::get<SwatsState<float>>(optimizer->state());
      adam = &w.adam;
      opt["adam"] = adam_json(w.adam);
      opt["phase"] = w.phase == SwatsPhase::Adam ? "adam" : "sgd";
      opt["lambda"] = w.lambda;
      opt["sgd_lr"] = w.sgd_lr ? json(*w.sgd_lr) : json(nullptr);
      opt["switch_eps"] = w.switch_eps;
      opt["switch_step"] = w.switch_step;
      opt["sgd_steps"] = w.sgd_steps;
    }
    if (adam && !adam->m.empty()) {
      if (adam->m.size() != params.size()) throw ContractError("optimizer state does not match the model");
      for (std::size_t i = 0; i < params.size(); ++i)
        blobs.push_back({"optimizer.m." + params[i].name, params[i].tensor.shape(), adam->m[i]});
      for (std::size_t i = 0; i < params.size(); ++i)
        blobs.push_back({"optimizer.v." + params[i].name, params[i].tensor.shape(), adam->v[i]});
    }
  }

  std::string payload;
  json directory = json::array();
  for (const auto& b : blobs) {
    const std::size_t bytes = b.values.size() * sizeof(float);
    directory.push_back(json{{"name", b.name}, {"shape", b.shape}, {"offset", payload.size()}, {"bytes", bytes}});
    payload.append(reinterpret_cast<const char*>(b.values.data()), bytes);
  }

  const auto& cfg = model.config();
  std::u32string symbols(model.vocabulary().symbols().begin(), model.vocabulary().symbols().end());
  json meta;
  meta["variant"] = variant_name(cfg.variant);
  meta["encoder"] = encoder_json(cfg.encoder);
  meta["sequence"] = json{{"cell", cell_name(cfg.cell)}, {"hidden", cfg.hidden}};
  meta["head"] = json{{"recall", recall_json(cfg.recall)}, {"clip_norm", cfg.clip_norm}};
  meta["vocabulary"] = utf8::encode(symbols);
  meta["training"] = json{{"step", training.step}, {"epoch", training.epoch}};
  meta["optimizer"] = opt;
  meta["parameters"] = directory;
  meta["payload_bytes"] = payload.size();
  meta["payload_crc32"] = hex8(crc32_of(payload));
  meta["header_crc32"] = std::string(kCrcPlaceholder);
  std::string text = meta.dump();

  std::string header(kMagic, 4);
  put_u32(header, kVersion);
  put_u32(header, static_cast<std::uint32_t>(text.size()));
  const std::uint32_t crc = crc32_of(text, crc32_of(header));
  text.replace(text.size() - 2 - kCrcPlaceholder.size(), kCrcPlaceholder.size(), hex8(crc));

  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw Error("failed to write checkpoint");
}

void save_checkpoint(const std::filesystem::path& path, const SpanModel& model, const Optimizer<float>* optimizer,
                     const TrainingState& training) {
  std::ostringstream buf;
  write_checkpoint(buf, model, optimizer, training);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open '" + path.string() + "' for writing");
  const std::string bytes = buf.str();
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("failed to write '" + path.string() + "'");
}

Checkpoint read_checkpoint(std::string_view bytes) {
  if (bytes.size() < kFixedHeader) throw FormatError(bytes.size(), "file shorter than the fixed header");
  for (std::size_t i = 0; i < 4; ++i)
    if (bytes[i] != kMagic[i]) throw FormatError(i, "bad magic bytes");
  const std::uint32_t version = get_u32(bytes, 4);
  const std::size_t meta_len = get_u32(bytes, 8);
  if (meta_len > bytes.size() - kFixedHeader)
    throw FormatError(8, "metadata length " + std::to_string(meta_len) + " runs past the end of the file");

  std::string text(bytes.substr(kFixedHeader, meta_len));
  const std::size_t tail = kCrcKey.size() + 8 + 2;
  if (text.size() < tail || text.compare(text.size() - tail, kCrcKey.size(), kCrcKey) != 0 ||
      text.compare(text.size() - 2, 2, "\"}") != 0)
    throw FormatError(kFixedHeader + text.size(), "metadata does not end with its checksum field");
  const std::size_t crc_at = text.size() - 10;
  const std::string stored = text.substr(crc_at, 8);
  text.replace(crc_at, 8, kCrcPlaceholder);
  const std::uint32_t actual = crc32_of(text, crc32_of(bytes.substr(0, kFixedHeader)));
  if (stored != hex8(actual))
    throw FormatError(kFixedHeader + crc_at, "header checksum mismatch (stored " + stored + ", computed " +
                                                 hex8(actual) + ")");
  if (version != kVersion)
    throw CompatibilityError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                             std::to_string(kVersion) + ")");

  json meta;
  try {
    meta = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(kFixedHeader, std::string("metadata is not valid JSON: ") + e.what());
  }

  const std::size_t payload_at = kFixedHeader + meta_len;
  const std::string_view payload = bytes.substr(payload_at);
  try {
    if (payload.size() != meta.at("payload_bytes").get<std::size_t>())
      throw FormatError(payload_at, "payload holds " + std::to_string(payload.size()) + " bytes, metadata says " +
                                        std::to_string(meta.at("payload_bytes").get<std::size_t>()));
    if (hex8(crc32_of(payload)) != meta.at("payload_crc32").get<std::string>())
      throw FormatError(payload_at, "payload checksum mismatch");

    ModelConfig cfg;
    cfg.variant = parse_variant(meta.at("variant").get<std::string>());
    cfg.encoder = encoder_from(meta.at("encoder"));
    cfg.cell = parse_cell(meta.at("sequence").at("cell").get<std::string>());
    cfg.hidden = meta.at("sequence").at("hidden").get<std::size_t>();
    cfg.recall = recall_from(meta.at("head").at("recall"));
    cfg.clip_norm = meta.at("head").at("clip_norm").get<double>();
    const std::u32string symbols = utf8::decode(meta.at("vocabulary").get<std::string>());
    Vocabulary vocab(std::vector<char32_t>(symbols.begin(), symbols.end()));
    if (vocab.size() != cfg.encoder.vocab_size)
      throw FormatError(kFixedHeader, "vocabulary size disagrees with the encoder configuration");

    SpanModel model(cfg, std::move(vocab), 0);
    auto params = model.parameters();

    // Payload offsets need not be float-aligned inside the input buffer, so
    // entries are kept as byte pointers and copied out with memcpy.
    std::unordered_map<std::string, std::pair<Shape, const char*>> blobs;
    for (const auto& entry : meta.at("parameters")) {
      const auto name = entry.at("name").get<std::string>();
      const auto shape = entry.at("shape").get<Shape>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto nbytes = entry.at("bytes").get<std::size_t>();
      if (nbytes != shape_numel(shape) * sizeof(float) || offset > payload.size() || nbytes > payload.size() - offset)
        throw FormatError(payload_at + offset, "directory entry '" + name + "' does not fit the payload");
      blobs[name] = {shape, payload.data() + offset};
    }

    auto fill = [&](const std::string& name, const Shape& shape, std::span<float> dst) {
      const auto it = blobs.find(name);
      if (it == blobs.end()) throw FormatError(kFixedHeader, "missing tensor '" + name + "'");
      if (it->second.first != shape)
        throw FormatError(kFixedHeader, "tensor '" + name + "' has shape " + shape_str(it->second.first) +
                                            ", model expects " + shape_str(shape));
      std::memcpy(dst.data(), it->second.second, dst.size() * sizeof(float));
    };
    for (auto& p : params) fill(p.name, p.tensor.shape(), p.tensor.data());

    std::optional<Optimizer<float>> optimizer;
    const auto& opt = meta.at("optimizer");
    if (!opt.is_null()) {
      auto load_moments = [&](AdamState<float>& a) {
        if (!blobs.count("optimizer.m." + params.front().name)) return;
        for (auto& p : params) {
          a.m.emplace_back(p.tensor.numel());
          a.v.emplace_back(p.tensor.numel());
          fill("optimizer.m." + p.name, p.tensor.shape(), a.m.back());
          fill("optimizer.v." + p.name, p.tensor.shape(), a.v.back());
        }
      };
      const auto kind = parse_optimizer(opt.at("kind").get<std::string>());
      if (kind == OptimizerKind::Adam) {
        auto a = adam_from(opt.at("adam"));
        load_moments(a);
        optimizer.emplace(std::move(a));
      } else if (kind == OptimizerKind::Sgd) {
        optimizer.emplace(SgdState<float>{opt.at("lr").get<double>(), opt.at("step").get<std::uint64_t>()});
      } else {
        SwatsState<float> w;
        w.adam = adam_from(opt.at("adam"));
        load_moments(w.adam);
        w.phase = opt.at("phase").get<std::string>() == "sgd" ? SwatsPhase::Sgd : SwatsPhase::Adam;
        w.lambda = opt.at("lambda").get<double>();
        if (!opt.at("sgd_lr").is_null()) w.sgd_lr = opt.at("sgd_lr").get<double>();
        if ((w.phase == SwatsPhase::Sgd) != w.sgd_lr.has_value())
          throw FormatError(kFixedHeader, "SWATS phase and frozen rate disagree");
        w.switch_eps = opt.at("switch_eps").get<double>();
        w.switch_step = opt.at("switch_step").get<std::uint64_t>();
        w.sgd_steps = opt.at("sgd_steps").get<std::uint64_t>();
        optimizer.emplace(std::move(w));
      }
    }

    TrainingState training;
    training.step = meta.at("training").at("step").get<std::uint64_t>();
    training.epoch = meta.at("training").at("epoch").get<std::uint64_t>();
    return Checkpoint{std::move(model), std::move(optimizer), training};
  } catch (const json::exception& e) {
    throw FormatError(kFixedHeader, std::string("malformed metadata: ") + e.what());
  } catch (const ContractError& e) {
    throw FormatError(kFixedHeader, std::string("inconsistent metadata: ") + e.what());
  } catch (const DataError& e) {
    throw FormatError(kFixedHeader, std::string("inconsistent metadata: ") + e.what());
  }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw NotFoundError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream buf;
  buf << f.rdbuf();
  return read_checkpoint(buf.str());
}

}  // namespace sebert
