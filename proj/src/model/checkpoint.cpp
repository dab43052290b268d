#include "dbaug/model/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "dbaug/error.hpp"
#include "json.hpp"

namespace dbaug::model {

using nlohmann::json;

namespace {

constexpr const char* kFormatTag = "dbaug-checkpoint";

json tensor_json(const nx::Tensor& t) {
  return json{{"shape", t.shape()}, {"values", t.storage()}};
}

nx::Tensor tensor_from(const json& j, const char* name, const nx::Shape& expected) {
  nx::Tensor t(j.at("shape").get<nx::Shape>(), j.at("values").get<std::vector<double>>());
  if (t.shape() != expected) {
    throw InputError(std::string("checkpoint: array '") + name + "' has shape " +
                     nx::shape_str(t.shape()) + ", expected " + nx::shape_str(expected));
  }
  if (!t.all_finite()) throw InputError(std::string("checkpoint: array '") + name + "' is not finite");
  return t;
}

}  // namespace

std::string serialize(const Model& m) {
  const auto& c = m.config;
  json doc;
  doc["format"] = kFormatTag;
  doc["version"] = kCheckpointVersion;
  doc["hyperparameters"] = {{"vocab_size", c.vocab_size},     {"num_classes", c.num_classes},
                            {"embed_dim", c.embed_dim},       {"latent_dim", c.latent_dim},
                            {"encoder_hidden", c.encoder_hidden},
                            {"decoder_hidden", c.decoder_hidden},
                            {"position_dim", c.position_dim}, {"max_len", c.max_len},
                            {"pooling", to_string(c.pooling)},
                            {"embed_init", c.embed_init}};
  doc["vocabulary"] = m.vocab.tokens();
  doc["encoder"] = {{"embedding", tensor_json(m.encoder.embedding)},
                    {"hidden_w", tensor_json(m.encoder.hidden_w)},
                    {"hidden_b", tensor_json(m.encoder.hidden_b)},
                    {"out_w", tensor_json(m.encoder.out_w)},
                    {"out_b", tensor_json(m.encoder.out_b)}};
  doc["classifier"] = {{"weight", tensor_json(m.classifier.weight)},
                       {"bias", tensor_json(m.classifier.bias)}};
  doc["decoder"] = {{"embedding", tensor_json(m.decoder.embedding)},
                    {"hidden_w", tensor_json(m.decoder.hidden_w)},
                    {"hidden_b", tensor_json(m.decoder.hidden_b)},
                    {"out_w", tensor_json(m.decoder.out_w)},
                    {"out_b", tensor_json(m.decoder.out_b)}};
  return doc.dump(1) + "\n";
}

Model deserialize(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("checkpoint: not valid JSON: ") + e.what());
  }
  try {
    if (doc.at("format").get<std::string>() != kFormatTag) {
      throw InputError("checkpoint: unrecognized format tag");
    }
    const int version = doc.at("version").get<int>();
    if (version != kCheckpointVersion) {
      throw InputError("checkpoint: unsupported version " + std::to_string(version));
    }
    const auto& h = doc.at("hyperparameters");
    ModelConfig c;
    c.vocab_size = h.at("vocab_size").get<std::size_t>();
    c.num_classes = h.at("num_classes").get<std::size_t>();
    c.embed_dim = h.at("embed_dim").get<std::size_t>();
    c.latent_dim = h.at("latent_dim").get<std::size_t>();
    c.encoder_hidden = h.at("encoder_hidden").get<std::size_t>();
    c.decoder_hidden = h.at("decoder_hidden").get<std::size_t>();
    c.position_dim = h.at("position_dim").get<std::size_t>();
    c.max_len = h.at("max_len").get<std::size_t>();
    c.pooling = pooling_from_string(h.at("pooling").get<std::string>());
    c.embed_init = h.value("embed_init", 1.0);
    c.validate();

    auto vocab = Vocabulary::from_tokens(doc.at("vocabulary").get<std::vector<std::string>>());
    if (vocab.size() != c.vocab_size) throw InputError("checkpoint: vocabulary size mismatch");

    const auto V = c.vocab_size, E = c.embed_dim, d = c.latent_dim, C = c.num_classes;
    const auto& e = doc.at("encoder");
    EncoderParams enc{tensor_from(e.at("embedding"), "encoder.embedding", {V, E}),
                      tensor_from(e.at("hidden_w"), "encoder.hidden_w", {E, c.encoder_hidden}),
                      tensor_from(e.at("hidden_b"), "encoder.hidden_b", {c.encoder_hidden}),
                      tensor_from(e.at("out_w"), "encoder.out_w", {c.encoder_hidden, d}),
                      tensor_from(e.at("out_b"), "encoder.out_b", {d}), c.pooling};
    const auto& k = doc.at("classifier");
    ClassifierParams cls{tensor_from(k.at("weight"), "classifier.weight", {C, d}),
                         tensor_from(k.at("bias"), "classifier.bias", {C})};
    const auto& g = doc.at("decoder");
    const auto H = c.decoder_hidden;
    DecoderParams dec{tensor_from(g.at("embedding"), "decoder.embedding", {V, E}),
                      tensor_from(g.at("hidden_w"), "decoder.hidden_w", {d + E + c.position_dim, H}),
                      tensor_from(g.at("hidden_b"), "decoder.hidden_b", {H}),
                      tensor_from(g.at("out_w"), "decoder.out_w", {H, V}),
                      tensor_from(g.at("out_b"), "decoder.out_b", {V}),
                      c.position_dim,
                      c.max_len};
    return Model{c, std::move(vocab), std::move(enc), std::move(cls), std::move(dec)};
  } catch (const json::exception& e) {
    throw InputError(std::string("checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Model& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("checkpoint: cannot write " + path.string());
  out << serialize(m);
  if (!out) throw InputError("checkpoint: write failed for " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("checkpoint: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

}  // namespace dbaug::model
