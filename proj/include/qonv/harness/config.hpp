#pragma once

// Experiment configuration files.
//
// Flat key/value text with [sections]. '#' and ';' start comment lines.
// Unknown sections and keys are errors. Model specs live in
// [model.<name>] sections, acceptance assertions in [assert].
//
//   [experiment]
//   kind = regress1d            # regress1d | regress2d | theory | bound_table
//   seeds = 0,1,2,3,4
//   output = results/regress1d
//
//   [model.qnn]
//   family = qnn
//   width = matched:256         # matched_width(256, kernel, rank)
//   kernel = 3
//
//   [assert]
//   qnn_beats_mlp = val_psnr(qnn) >= val_psnr(mlp) + 0.5

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qonv/error.hpp"
#include "qonv/model.hpp"
#include "qonv/train.hpp"

namespace qonv::harness {

struct IniEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;
};

struct IniSection {
  std::string name;
  std::vector<IniEntry> entries;
  std::size_t line = 0;
};

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<IniSection> parse_ini(const std::string& text, const std::string& source = "<config>") {
  std::vector<IniSection> sections;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& why) {
    throw ConfigError(source + ":" + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, raw)) {
    ++lineno;
    // strip trailing comments introduced by " #"
    if (auto hash = raw.find(" #"); hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      const std::string name = trim(std::string_view(line).substr(1, line.size() - 2));
      if (name.empty()) fail("empty section name");
      for (const auto& s : sections) {
        if (s.name == name) fail("duplicate section [" + name + "]");
      }
      sections.push_back({name, {}, lineno});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail("expected 'key = value'");
    if (sections.empty()) fail("key outside of any section");
    IniEntry e{trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)), lineno};
    if (e.key.empty()) fail("empty key");
    for (const auto& other : sections.back().entries) {
      if (other.key == e.key) fail("duplicate key '" + e.key + "' in [" + sections.back().name + "]");
    }
    sections.back().entries.push_back(std::move(e));
  }
  return sections;
}

/// Normalised text of a parsed file: comments and spacing removed, order kept.
inline std::string canonical_text(const std::vector<IniSection>& sections) {
  std::string s;
  for (const auto& sec : sections) {
    s += "[" + sec.name + "]\n";
    for (const auto& e : sec.entries) s += e.key + "=" + e.value + "\n";
  }
  return s;
}

/// 64-bit FNV-1a; byte-order independent, so stable across machines.
inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline double parse_double(const std::string& v, const std::string& what) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(what + ": '" + v + "' is not a number");
  }
}

inline std::uint64_t parse_uint(const std::string& v, const std::string& what) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw ConfigError(what + ": '" + v + "' is not a non-negative integer");
  return out;
}

inline bool parse_bool(const std::string& v, const std::string& what) {
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw ConfigError(what + ": '" + v + "' is not a boolean");
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(v);
  while (std::getline(in, cur, ',')) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

enum class Metric { val_psnr, train_psnr, val_ssim, train_ssim };

inline Metric parse_metric(const std::string& s) {
  if (s == "val_psnr") return Metric::val_psnr;
  if (s == "train_psnr") return Metric::train_psnr;
  if (s == "val_ssim") return Metric::val_ssim;
  if (s == "train_ssim") return Metric::train_ssim;
  throw ConfigError("unknown metric '" + s + "' (expected val_psnr, train_psnr, val_ssim or train_ssim)");
}

inline std::string to_string(Metric m) {
  switch (m) {
  case Metric::val_psnr: return "val_psnr";
  case Metric::train_psnr: return "train_psnr";
  case Metric::val_ssim: return "val_ssim";
  case Metric::train_ssim: return "train_ssim";
  }
  return "?";
}

/// `metric(model) OP metric(model) [+|- margin]` or `metric(model) OP number`,
/// evaluated on means over seeds. OP is one of > >= < <=.
struct Assertion {
  std::string label;
  std::string text;
  Metric lhs_metric{};
  std::string lhs_model;
  std::string op;
  std::optional<Metric> rhs_metric;
  std::string rhs_model;
  double constant = 0.0; // margin when rhs is a metric, the value otherwise

  static Assertion parse(const std::string& label, const std::string& text) {
    Assertion a;
    a.label = label;
    a.text = text;
    std::string s;
    for (char c : text) {
      if (!std::isspace(static_cast<unsigned char>(c))) s += c;
    }
    auto fail = [&]() -> Assertion {
      throw ConfigError("assertion '" + label + "': cannot parse '" + text + "'");
    };
    auto parse_term = [&](std::size_t& pos, Metric& m, std::string& model) {
      const auto open = s.find('(', pos);
      const auto close = s.find(')', pos);
      if (open == std::string::npos || close == std::string::npos || close < open) return false;
      m = parse_metric(s.substr(pos, open - pos));
      model = s.substr(open + 1, close - open - 1);
      if (model.empty()) return false;
      pos = close + 1;
      return true;
    };
    std::size_t pos = 0;
    if (!parse_term(pos, a.lhs_metric, a.lhs_model)) return fail();
    for (const char* op : {">=", "<=", ">", "<"}) {
      if (s.compare(pos, std::string(op).size(), op) == 0) {
        a.op = op;
        pos += a.op.size();
        break;
      }
    }
    if (a.op.empty()) return fail();
    if (s.find('(', pos) != std::string::npos) {
      Metric m{};
      if (!parse_term(pos, m, a.rhs_model)) return fail();
      a.rhs_metric = m;
      if (pos < s.size()) {
        if (s[pos] != '+' && s[pos] != '-') return fail();
        a.constant = parse_double(s.substr(pos), "assertion '" + label + "' margin");
      }
    } else {
      a.constant = parse_double(s.substr(pos), "assertion '" + label + "' value");
    }
    return a;
  }

  bool holds(double lhs, double rhs) const {
    if (op == ">") return lhs > rhs;
    if (op == ">=") return lhs >= rhs;
    if (op == "<") return lhs < rhs;
    return lhs <= rhs;
  }
};

struct SignalParams {
  std::size_t n = 32;
  double alpha = 0.5;
  double cutoff = 0.125;
  std::string split = "even_odd"; // even_odd | random
  double train_fraction = 0.5;    // random split only
  double peak = 2.0;              // PSNR peak for signals in [-1,1]
};

struct ImageParams {
  std::string path;
  double blur_sigma = 2.0;
  double val_fraction = 0.1;
};

struct TheoryParams {
  std::size_t instances = 1000;
  std::size_t max_size = 16;
  std::uint64_t seed = 0;
};

struct BoundParams {
  double c = 1.0;
  std::vector<double> eps;
};

struct ExperimentConfig {
  std::string kind;
  std::vector<ModelSpec> models;
  std::vector<std::uint64_t> seeds;
  SignalParams signal;
  ImageParams image;
  TrainConfig train;
  TheoryParams theory;
  BoundParams bound;
  std::vector<Assertion> assertions;
  std::string output_dir = "results";
  std::filesystem::path base_dir; // relative paths resolve against this
  std::string canonical;          // normalised config text
  std::uint64_t hash = 0;

  std::filesystem::path resolve(const std::string& p) const {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  }
};

namespace detail {

class KeyReader {
public:
  KeyReader(const IniSection& sec, const std::string& source) : sec_(sec), source_(source) {}

  std::optional<std::string> get(const std::string& key) {
    for (const auto& e : sec_.entries) {
      if (e.key == key) {
        used_.push_back(key);
        return e.value;
      }
    }
    return std::nullopt;
  }

  std::string where(const std::string& key) const { return source_ + " [" + sec_.name + "] " + key; }

  void reject_unknown() const {
    for (const auto& e : sec_.entries) {
      if (std::find(used_.begin(), used_.end(), e.key) == used_.end()) {
        throw ConfigError(source_ + ":" + std::to_string(e.line) + ": unknown key '" + e.key + "' in [" +
                          sec_.name + "]");
      }
    }
  }

private:
  const IniSection& sec_;
  const std::string& source_;
  std::vector<std::string> used_;
};

} // namespace detail

/// Reads one [model.<name>] section. Rank and channel counts come from the
/// experiment kind (1-D signal: 1 query, 1 low, 1 output; image: 2, 3, 3).
inline ModelSpec parse_model_section(const IniSection& sec, const std::string& kind, const std::string& source) {
  detail::KeyReader r(sec, source);
  ModelSpec m;
  m.name = sec.name.substr(std::string("model.").size());
  if (m.name.empty()) throw ConfigError(source + ": model section needs a name: [model.<name>]");
  for (char c : m.name) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') {
      throw ConfigError(source + ": model name '" + m.name + "' may only use letters, digits, '_' and '-'");
    }
  }
  const bool image = kind == "regress2d";
  m.rank = image ? 2 : 1;
  m.output_channels = image ? 3 : 1;
  const std::size_t coord_dim = image ? 2 : 1;
  const std::size_t low_dim = image ? 3 : 1;

  const auto family = r.get("family");
  if (!family) throw ConfigError(r.where("family") + ": missing");
  m.family = parse_family(*family);

  std::string inputs = m.family == Family::mlp ? "queries" : (m.family == Family::cnn ? "low" : "queries+low");
  if (auto v = r.get("inputs")) inputs = *v;
  if (inputs == "queries") {
    m.query_channels = coord_dim;
    m.low_freq_channels = 0;
  } else if (inputs == "low") {
    m.query_channels = 0;
    m.low_freq_channels = low_dim;
  } else if (inputs == "queries+low") {
    m.query_channels = coord_dim;
    m.low_freq_channels = low_dim;
  } else {
    throw ConfigError(r.where("inputs") + ": expected queries, low or queries+low");
  }

  if (auto v = r.get("depth")) m.depth = parse_uint(*v, r.where("depth"));
  if (auto v = r.get("kernel")) m.kernel = parse_uint(*v, r.where("kernel"));
  if (auto v = r.get("width")) {
    if (v->rfind("matched:", 0) == 0) {
      const auto base = parse_uint(v->substr(8), r.where("width"));
      if (m.family == Family::mlp) throw ConfigError(r.where("width") + ": matched widths apply to conv models");
      m.width = matched_width(base, m.kernel, m.rank);
    } else {
      m.width = parse_uint(*v, r.where("width"));
    }
  }
  if (auto v = r.get("encoding")) m.encoding.kind = parse_encoding_kind(*v);
  if (auto v = r.get("num_features")) m.encoding.num_features = parse_uint(*v, r.where("num_features"));
  if (auto v = r.get("sigma")) m.encoding.sigma = parse_double(*v, r.where("sigma"));
  if (auto v = r.get("num_octaves")) m.encoding.num_octaves = parse_uint(*v, r.where("num_octaves"));
  double omega0 = 30.0;
  if (auto v = r.get("omega0")) omega0 = parse_double(*v, r.where("omega0"));
  m.activation = Activation::parse(r.get("activation").value_or("relu"), omega0);
  if (auto v = r.get("residual")) m.residual_output = parse_bool(*v, r.where("residual"));
  if (auto v = r.get("bias")) m.bias = parse_bool(*v, r.where("bias"));
  if (auto v = r.get("output_init")) {
    if (*v == "uniform") m.zero_output_init = false;
    else if (*v == "zero") m.zero_output_init = true;
    else throw ConfigError(r.where("output_init") + ": expected uniform or zero");
  }
  r.reject_unknown();
  m.validate();
  return m;
}

/// Serialises a spec as a [model.<name>] section readable by
/// parse_model_section().
inline std::string model_section_text(const ModelSpec& m) {
  std::ostringstream os;
  os.precision(17);
  os << "[model." << m.name << "]\n";
  os << "family = " << to_string(m.family) << "\n";
  std::string inputs = m.query_channels && m.low_freq_channels ? "queries+low" : (m.query_channels ? "queries" : "low");
  os << "inputs = " << inputs << "\n";
  os << "depth = " << m.depth << "\n";
  os << "width = " << m.width << "\n";
  if (m.family != Family::mlp) os << "kernel = " << m.kernel << "\n";
  os << "encoding = " << to_string(m.encoding.kind) << "\n";
  os << "num_features = " << m.encoding.num_features << "\n";
  os << "sigma = " << m.encoding.sigma << "\n";
  os << "num_octaves = " << m.encoding.num_octaves << "\n";
  os << "activation = " << m.activation.name() << "\n";
  os << "omega0 = " << m.activation.omega0 << "\n";
  os << "residual = " << (m.residual_output ? "true" : "false") << "\n";
  os << "bias = " << (m.bias ? "true" : "false") << "\n";
  os << "output_init = " << (m.zero_output_init ? "zero" : "uniform") << "\n";
  return os.str();
}

inline ExperimentConfig parse_config(const std::string& text, const std::string& source = "<config>",
                                     const std::filesystem::path& base_dir = ".") {
  const auto sections = parse_ini(text, source);
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  cfg.canonical = canonical_text(sections);
  cfg.hash = fnv1a64(cfg.canonical);

  const IniSection* exp = nullptr;
  for (const auto& s : sections) {
    if (s.name == "experiment") exp = &s;
  }
  if (!exp) throw ConfigError(source + ": missing [experiment] section");
  {
    detail::KeyReader r(*exp, source);
    cfg.kind = r.get("kind").value_or("");
    if (cfg.kind != "regress1d" && cfg.kind != "regress2d" && cfg.kind != "theory" && cfg.kind != "bound_table") {
      throw ConfigError(r.where("kind") + ": expected regress1d, regress2d, theory or bound_table");
    }
    if (auto v = r.get("seeds")) {
      for (const auto& s : split_list(*v)) cfg.seeds.push_back(parse_uint(s, r.where("seeds")));
    }
    if (auto v = r.get("output")) cfg.output_dir = *v;
    r.reject_unknown();
  }

  for (const auto& sec : sections) {
    detail::KeyReader r(sec, source);
    if (sec.name == "experiment") continue;
    if (sec.name == "signal") {
      if (auto v = r.get("n")) cfg.signal.n = parse_uint(*v, r.where("n"));
      if (auto v = r.get("alpha")) cfg.signal.alpha = parse_double(*v, r.where("alpha"));
      if (auto v = r.get("cutoff")) cfg.signal.cutoff = parse_double(*v, r.where("cutoff"));
      if (auto v = r.get("split")) {
        if (*v != "even_odd" && *v != "random") throw ConfigError(r.where("split") + ": expected even_odd or random");
        cfg.signal.split = *v;
      }
      if (auto v = r.get("train_fraction")) cfg.signal.train_fraction = parse_double(*v, r.where("train_fraction"));
      if (auto v = r.get("peak")) cfg.signal.peak = parse_double(*v, r.where("peak"));
    } else if (sec.name == "image") {
      if (auto v = r.get("path")) cfg.image.path = *v;
      if (auto v = r.get("blur_sigma")) cfg.image.blur_sigma = parse_double(*v, r.where("blur_sigma"));
      if (auto v = r.get("val_fraction")) cfg.image.val_fraction = parse_double(*v, r.where("val_fraction"));
    } else if (sec.name == "train") {
      if (auto v = r.get("iterations")) cfg.train.iterations = parse_uint(*v, r.where("iterations"));
      if (auto v = r.get("lr")) cfg.train.optimizer.lr = parse_double(*v, r.where("lr"));
      if (auto v = r.get("optimizer")) cfg.train.optimizer.kind = parse_optimizer(*v);
      if (auto v = r.get("weight_decay")) cfg.train.optimizer.weight_decay = parse_double(*v, r.where("weight_decay"));
      if (auto v = r.get("beta1")) cfg.train.optimizer.beta1 = parse_double(*v, r.where("beta1"));
      if (auto v = r.get("beta2")) cfg.train.optimizer.beta2 = parse_double(*v, r.where("beta2"));
      if (auto v = r.get("eps")) cfg.train.optimizer.eps = parse_double(*v, r.where("eps"));
      if (auto v = r.get("log_every")) cfg.train.log_every = parse_uint(*v, r.where("log_every"));
    } else if (sec.name == "theory") {
      if (auto v = r.get("instances")) cfg.theory.instances = parse_uint(*v, r.where("instances"));
      if (auto v = r.get("max_size")) cfg.theory.max_size = parse_uint(*v, r.where("max_size"));
      if (auto v = r.get("seed")) cfg.theory.seed = parse_uint(*v, r.where("seed"));
    } else if (sec.name == "bound") {
      if (auto v = r.get("c")) cfg.bound.c = parse_double(*v, r.where("c"));
      if (auto v = r.get("eps")) {
        for (const auto& e : split_list(*v)) cfg.bound.eps.push_back(parse_double(e, r.where("eps")));
      }
    } else if (sec.name == "assert") {
      for (const auto& e : sec.entries) {
        r.get(e.key);
        cfg.assertions.push_back(Assertion::parse(e.key, e.value));
      }
    } else if (sec.name.rfind("model.", 0) == 0) {
      cfg.models.push_back(parse_model_section(sec, cfg.kind, source));
      continue;
    } else {
      throw ConfigError(source + ":" + std::to_string(sec.line) + ": unknown section [" + sec.name + "]");
    }
    r.reject_unknown();
  }

  if (cfg.kind == "regress1d" || cfg.kind == "regress2d") {
    if (cfg.models.empty()) throw ConfigError(source + ": at least one [model.<name>] section is required");
    if (cfg.seeds.empty()) throw ConfigError(source + ": at least one seed is required");
    if (cfg.train.iterations < 1) throw ConfigError(source + ": [train] iterations must be >= 1");
    if (cfg.train.log_every < 1) throw ConfigError(source + ": [train] log_every must be >= 1");
    for (std::size_t i = 0; i < cfg.models.size(); ++i) {
      if (cfg.models[i].name == "lowfreq") throw ConfigError(source + ": model name 'lowfreq' is reserved for the baseline");
      for (std::size_t j = 0; j < i; ++j) {
        if (cfg.models[i].name == cfg.models[j].name) throw ConfigError(source + ": duplicate model name");
      }
    }
    for (const auto& a : cfg.assertions) {
      auto known = [&](const std::string& name) {
        if (name == "lowfreq") return true;
        return std::any_of(cfg.models.begin(), cfg.models.end(), [&](const ModelSpec& m) { return m.name == name; });
      };
      if (!known(a.lhs_model) || (a.rhs_metric && !known(a.rhs_model))) {
        throw ConfigError(source + ": assertion '" + a.label + "' names an unknown model");
      }
    }
  }
  if (cfg.kind == "regress2d" && cfg.image.path.empty()) throw ConfigError(source + ": [image] path is required");
  if (cfg.kind == "regress2d" && !(cfg.image.val_fraction > 0.0 && cfg.image.val_fraction < 1.0)) {
    throw ConfigError(source + ": [image] val_fraction must lie in (0,1)");
  }
  if (cfg.kind == "regress1d" && cfg.signal.split == "random" &&
      !(cfg.signal.train_fraction > 0.0 && cfg.signal.train_fraction < 1.0)) {
    throw ConfigError(source + ": [signal] train_fraction must lie in (0,1)");
  }
  if (cfg.kind == "bound_table") {
    if (!(cfg.bound.c > 0.0)) throw ConfigError(source + ": [bound] c must be > 0");
    for (double e : cfg.bound.eps) {
      if (!(e > 0.0)) throw ConfigError(source + ": [bound] eps values must be > 0");
    }
  }
  if (cfg.kind == "theory" && cfg.theory.max_size < 3) throw ConfigError(source + ": [theory] max_size must be >= 3");
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string(), path.parent_path().empty() ? "." : path.parent_path());
}

} // namespace qonv::harness
