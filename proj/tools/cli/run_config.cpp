#include "run_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "genemeta/error.hpp"

namespace genemeta::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  T value{};
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || end != t.data() + t.size()) {
    throw ParseError(key + ": expected a number, got '" + text + "'");
  }
  return value;
}

std::size_t parse_size(const std::string& key, const std::string& text) {
  return parse_number<std::size_t>(key, text);
}

double parse_double(const std::string& key, const std::string& text) {
  return parse_number<double>(key, text);
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ParseError(key + ": expected true or false, got '" + text + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& text) {
  std::filesystem::path p(trim(text));
  if (p.is_relative() && !base.empty()) p = base / p;
  return p.lexically_normal();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename Range, typename F>
std::string join(const Range& items, F&& render) {
  std::string s;
  for (const auto& item : items) {
    if (!s.empty()) s += ',';
    s += render(item);
  }
  return s;
}

}  // namespace

ExperimentConfig RunConfig::experiment() const {
  ExperimentConfig c;
  c.model = model;
  c.meta = meta;
  c.meta.seed = seed;
  c.trainer = trainer;
  c.folds = folds;
  c.jobs = jobs;
  return c;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_double("list", item));
  if (out.empty()) throw ParseError("expected a non-empty comma separated list");
  return out;
}

void set_value(RunConfig& c, const std::string& assignment, const std::filesystem::path& base) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ParseError("expected section.key=value, got '" + assignment + "'");
  const std::string key = trim(assignment.substr(0, eq));
  const std::string value = trim(assignment.substr(eq + 1));

  if (key == "run.seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "run.out") c.out = resolve(base, value);
  else if (key == "run.jobs") c.jobs = parse_number<unsigned>(key, value);

  else if (key == "data.target") c.target = resolve(base, value);
  else if (key == "data.sources") {
    c.sources.clear();
    for (const auto& item : split_list(value)) c.sources.push_back(resolve(base, item));
  } else if (key == "data.interactions") {
    if (value.empty()) c.interactions.reset();
    else c.interactions = resolve(base, value);
  }

  else if (key == "model.architecture") c.model.architecture = parse_architecture(value);
  else if (key == "model.input_dim") c.model.input_dim = parse_size(key, value);
  else if (key == "model.hidden") {
    c.model.hidden.clear();
    for (const auto& item : split_list(value)) c.model.hidden.push_back(parse_size(key, item));
  }
  else if (key == "model.channels") c.model.channels = parse_size(key, value);
  else if (key == "model.kernel") c.model.kernel = parse_size(key, value);
  else if (key == "model.conv_stride") c.model.conv_stride = parse_size(key, value);
  else if (key == "model.padding") c.model.padding = parse_size(key, value);
  else if (key == "model.pool") c.model.pool = parse_size(key, value);
  else if (key == "model.pool_stride") c.model.pool_stride = parse_size(key, value);
  else if (key == "model.conv_layers") c.model.conv_layers = parse_size(key, value);
  else if (key == "model.embed_dim") c.model.embed_dim = parse_size(key, value);
  else if (key == "model.tokens") c.model.tokens = parse_size(key, value);
  else if (key == "model.attention_layers") c.model.attention_layers = parse_size(key, value);
  else if (key == "model.slope") c.model.slope = parse_double(key, value);

  else if (key == "meta.alpha") c.meta.alpha = parse_double(key, value);
  else if (key == "meta.momentum") c.meta.momentum = parse_double(key, value);
  else if (key == "meta.beta") c.meta.beta = parse_double(key, value);
  else if (key == "meta.lambda") {
    c.meta.lambda = parse_double(key, value);
    c.lambda_set = true;
  }
  else if (key == "meta.epochs") c.meta.epochs = parse_size(key, value);
  else if (key == "meta.batch_size") c.meta.batch_size = parse_size(key, value);
  else if (key == "meta.fresh_eval_batch") c.meta.fresh_eval_batch = parse_bool(key, value);
  else if (key == "meta.pretrain_epochs") c.meta.pretrain_epochs = parse_size(key, value);
  else if (key == "meta.finetune_epochs") c.meta.finetune_epochs = parse_size(key, value);
  else if (key == "meta.adam_beta1") c.meta.adam_beta1 = parse_double(key, value);
  else if (key == "meta.adam_beta2") c.meta.adam_beta2 = parse_double(key, value);
  else if (key == "meta.adam_eps") c.meta.adam_eps = parse_double(key, value);

  else if (key == "experiment.trainer") c.trainer = parse_trainer(value);
  else if (key == "experiment.folds") c.folds = parse_size(key, value);
  else if (key == "experiment.lambdas") c.lambdas = parse_double_list(value);

  else if (key == "explain.checkpoint") c.explain.checkpoint = resolve(base, value);
  else if (key == "explain.samples") c.explain.samples = parse_size(key, value);
  else if (key == "explain.permutations") c.explain.permutations = parse_size(key, value);
  else if (key == "explain.top_k") c.explain.top_k = parse_size(key, value);
  else if (key == "explain.exact") c.explain.exact = parse_bool(key, value);

  else if (key == "synth.sources") c.synth.sources = parse_size(key, value);
  else if (key == "synth.source_samples") c.synth.source_samples = parse_size(key, value);
  else if (key == "synth.target_samples") c.synth.target_samples = parse_size(key, value);
  else if (key == "synth.features") c.synth.features = parse_size(key, value);
  else if (key == "synth.signal_dim") c.synth.signal_dim = parse_size(key, value);
  else if (key == "synth.perturbation") c.synth.perturbation = parse_double(key, value);
  else if (key == "synth.noise") c.synth.noise = parse_double(key, value);
  else if (key == "synth.balance") c.synth.balance = parse_double(key, value);

  else throw ParseError("unknown configuration key '" + key + "'");
}

RunConfig load_run_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ParseError("config file not found: " + path.string());
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(path.string() + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  const std::filesystem::path base = path.parent_path();
  RunConfig config;
  for (const auto& [section, entries] : tree) {
    if (entries.empty() && !entries.data().empty()) {
      throw ParseError(path.string() + ": key '" + section + "' outside a section");
    }
    for (const auto& [key, node] : entries) {
      try {
        set_value(config, section + "." + key + "=" + node.data(), base);
      } catch (const Error& e) {
        throw ParseError(path.string() + ": " + e.what());
      }
    }
  }
  return config;
}

void write_run_config(std::ostream& out, const RunConfig& c) {
  auto path = [](const std::filesystem::path& p) {
    return p.empty() ? std::string() : std::filesystem::absolute(p).lexically_normal().generic_string();
  };
  auto num = [](std::size_t v) { return std::to_string(v); };
  out << "[run]\n"
      << "seed = " << c.seed << '\n'
      << "out = " << path(c.out) << '\n'
      << "jobs = " << c.jobs << "\n\n";
  out << "[data]\n"
      << "target = " << path(c.target) << '\n'
      << "sources = " << join(c.sources, path) << '\n'
      << "interactions = " << (c.interactions ? path(*c.interactions) : std::string()) << "\n\n";
  const ModelConfig& m = c.model;
  out << "[model]\n"
      << "architecture = " << to_string(m.architecture) << '\n'
      << "hidden = " << join(m.hidden, num) << '\n'
      << "channels = " << m.channels << '\n'
      << "kernel = " << m.kernel << '\n'
      << "conv_stride = " << m.conv_stride << '\n'
      << "padding = " << m.padding << '\n'
      << "pool = " << m.pool << '\n'
      << "pool_stride = " << m.pool_stride << '\n'
      << "conv_layers = " << m.conv_layers << '\n'
      << "embed_dim = " << m.embed_dim << '\n'
      << "tokens = " << m.tokens << '\n'
      << "attention_layers = " << m.attention_layers << '\n'
      << "slope = " << fmt(m.slope) << "\n\n";
  const MetaConfig& t = c.meta;
  out << "[meta]\n"
      << "alpha = " << fmt(t.alpha) << '\n'
      << "momentum = " << fmt(t.momentum) << '\n'
      << "beta = " << fmt(t.beta) << '\n';
  if (c.lambda_set) out << "lambda = " << fmt(t.lambda) << '\n';
  out << "epochs = " << t.epochs << '\n'
      << "batch_size = " << t.batch_size << '\n'
      << "fresh_eval_batch = " << (t.fresh_eval_batch ? "true" : "false") << '\n'
      << "pretrain_epochs = " << t.pretrain_epochs << '\n'
      << "finetune_epochs = " << t.finetune_epochs << '\n'
      << "adam_beta1 = " << fmt(t.adam_beta1) << '\n'
      << "adam_beta2 = " << fmt(t.adam_beta2) << '\n'
      << "adam_eps = " << fmt(t.adam_eps) << "\n\n";
  out << "[experiment]\n"
      << "trainer = " << to_string(c.trainer) << '\n'
      << "folds = " << c.folds << '\n'
      << "lambdas = " << join(c.lambdas, fmt) << "\n\n";
  out << "[explain]\n"
      << "checkpoint = " << path(c.explain.checkpoint) << '\n'
      << "samples = " << c.explain.samples << '\n'
      << "permutations = " << c.explain.permutations << '\n'
      << "top_k = " << c.explain.top_k << '\n'
      << "exact = " << (c.explain.exact ? "true" : "false") << "\n\n";
  const SynthSpec& s = c.synth;
  out << "[synth]\n"
      << "sources = " << s.sources << '\n'
      << "source_samples = " << s.source_samples << '\n'
      << "target_samples = " << s.target_samples << '\n'
      << "features = " << s.features << '\n'
      << "signal_dim = " << s.signal_dim << '\n'
      << "perturbation = " << fmt(s.perturbation) << '\n'
      << "noise = " << fmt(s.noise) << '\n'
      << "balance = " << fmt(s.balance) << '\n';
}

}  // namespace genemeta::cli
