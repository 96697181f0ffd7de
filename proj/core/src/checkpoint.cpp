#include "genemeta/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "genemeta/error.hpp"

namespace genemeta {
namespace {

constexpr const char* kMagic = "genemeta-checkpoint";
constexpr int kVersion = 1;

std::string hex(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

template <typename T>
T read_field(std::istream& in, const std::string& key) {
  std::string name;
  T value{};
  if (!(in >> name) || name != key || !(in >> value)) {
    throw ParseError("checkpoint: expected field '" + key + "'");
  }
  return value;
}

}  // namespace

void save_checkpoint(std::ostream& out, const ModelConfig& c, const ModelParams& params) {
  out << kMagic << ' ' << kVersion << '\n';
  out << "architecture " << to_string(c.architecture) << '\n';
  out << "input_dim " << c.input_dim << '\n';
  out << "hidden " << c.hidden.size();
  for (auto h : c.hidden) out << ' ' << h;
  out << '\n';
  out << "channels " << c.channels << '\n'
      << "kernel " << c.kernel << '\n'
      << "conv_stride " << c.conv_stride << '\n'
      << "padding " << c.padding << '\n'
      << "pool " << c.pool << '\n'
      << "pool_stride " << c.pool_stride << '\n'
      << "conv_layers " << c.conv_layers << '\n'
      << "embed_dim " << c.embed_dim << '\n'
      << "tokens " << c.tokens << '\n'
      << "attention_layers " << c.attention_layers << '\n'
      << "slope " << hex(c.slope) << '\n';
  out << "tensors " << params.size() << '\n';
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& t = params[i];
    out << "tensor " << params.name(i) << ' ' << t.rank();
    for (auto d : t.shape()) out << ' ' << d;
    out << '\n';
    for (std::size_t j = 0; j < t.size(); ++j) out << (j ? " " : "") << hex(t[j]);
    out << '\n';
  }
}

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  save_checkpoint(out, config, params);
}

Checkpoint load_checkpoint(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kMagic) throw ParseError("not a genemeta checkpoint");
  if (version != kVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ck;
  ModelConfig& c = ck.config;
  c.architecture = parse_architecture(read_field<std::string>(in, "architecture"));
  c.input_dim = read_field<std::size_t>(in, "input_dim");
  const auto n_hidden = read_field<std::size_t>(in, "hidden");
  c.hidden.assign(n_hidden, 0);
  for (auto& h : c.hidden)
    if (!(in >> h)) throw ParseError("checkpoint: truncated hidden list");
  c.channels = read_field<std::size_t>(in, "channels");
  c.kernel = read_field<std::size_t>(in, "kernel");
  c.conv_stride = read_field<std::size_t>(in, "conv_stride");
  c.padding = read_field<std::size_t>(in, "padding");
  c.pool = read_field<std::size_t>(in, "pool");
  c.pool_stride = read_field<std::size_t>(in, "pool_stride");
  c.conv_layers = read_field<std::size_t>(in, "conv_layers");
  c.embed_dim = read_field<std::size_t>(in, "embed_dim");
  c.tokens = read_field<std::size_t>(in, "tokens");
  c.attention_layers = read_field<std::size_t>(in, "attention_layers");
  c.slope = std::strtod(read_field<std::string>(in, "slope").c_str(), nullptr);

  ck.params = ModelParams(c.architecture);
  const auto count = read_field<std::size_t>(in, "tensors");
  for (std::size_t i = 0; i < count; ++i) {
    std::string tag, name;
    std::size_t rank = 0;
    if (!(in >> tag >> name >> rank) || tag != "tensor") throw ParseError("checkpoint: bad tensor header");
    Shape shape(rank);
    for (auto& d : shape)
      if (!(in >> d)) throw ParseError("checkpoint: bad shape for " + name);
    std::vector<double> values(shape_numel(shape));
    std::string token;
    for (auto& v : values) {
      if (!(in >> token)) throw ParseError("checkpoint: truncated values for " + name);
      char* end = nullptr;
      v = std::strtod(token.c_str(), &end);
      if (end != token.c_str() + token.size()) throw ParseError("checkpoint: bad value '" + token + "'");
    }
    ck.params.add(name, Tensor(std::move(shape), std::move(values)));
  }
  return ck;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open checkpoint " + path.string());
  return load_checkpoint(in);
}

}  // namespace genemeta
