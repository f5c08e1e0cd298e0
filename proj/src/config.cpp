#include "mtcpd/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace mtcpd {

namespace {

struct Value {
  std::string raw;
  int line = 0;
  bool is_array = false;
  std::vector<std::string> items;
};

using ValueMap = std::map<std::string, Value>;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

ValueMap parse_values(const std::string& text) {
  ValueMap values;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // strip comments outside quotes
    bool in_string = false;
    std::string clean;
    for (char c : line) {
      if (c == '"') in_string = !in_string;
      if (c == '#' && !in_string) break;
      clean.push_back(c);
    }
    clean = trim(clean);
    if (clean.empty()) continue;
    if (clean.front() == '[') {
      if (clean.back() != ']') {
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": unterminated section header");
      }
      section = trim(clean.substr(1, clean.size() - 2));
      if (section.empty()) {
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty section");
      }
      continue;
    }
    const auto eq = clean.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    }
    const std::string key = trim(clean.substr(0, eq));
    std::string val = trim(clean.substr(eq + 1));
    if (key.empty() || val.empty()) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": empty key or value");
    }
    Value v;
    v.line = lineno;
    if (val.front() == '[') {
      if (val.back() != ']') {
        throw std::invalid_argument("config line " + std::to_string(lineno) +
                                    ": unterminated array");
      }
      v.is_array = true;
      const std::string body = trim(val.substr(1, val.size() - 2));
      if (!body.empty()) {
        for (auto& item : split(body, ',')) v.items.push_back(strip_quotes(item));
      }
    } else {
      v.raw = strip_quotes(val);
    }
    const std::string full_key = section.empty() ? key : section + "." + key;
    if (values.count(full_key)) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": duplicate key '" +
                                  full_key + "'");
    }
    values[full_key] = std::move(v);
  }
  return values;
}

double parse_double(const std::string& s, const std::string& key) {
  const std::string t = trim(s);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end == t.c_str() || *end != '\0') {
    throw std::invalid_argument("config key '" + key + "': cannot parse number '" + s + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& key) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(trim(s).c_str(), &end, 10);
  if (end == trim(s).c_str() || *end != '\0') {
    throw std::invalid_argument("config key '" + key + "': cannot parse integer '" + s + "'");
  }
  return v;
}

class Reader {
public:
  explicit Reader(ValueMap values) : values_(std::move(values)) {}

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  void get_size(const std::string& key, std::size_t& out) {
    if (auto* v = take(key)) out = static_cast<std::size_t>(parse_u64(v->raw, key));
  }
  void get_u64(const std::string& key, std::uint64_t& out) {
    if (auto* v = take(key)) out = parse_u64(v->raw, key);
  }
  void get_double(const std::string& key, double& out) {
    if (auto* v = take(key)) out = parse_double(v->raw, key);
  }
  void get_string(const std::string& key, std::string& out) {
    if (auto* v = take(key)) out = v->raw;
  }
  void get_bool(const std::string& key, bool& out) {
    if (auto* v = take(key)) {
      if (v->raw == "true") {
        out = true;
      } else if (v->raw == "false") {
        out = false;
      } else {
        throw std::invalid_argument("config key '" + key + "': expected true|false, got '" +
                                    v->raw + "'");
      }
    }
  }
  void get_double_list(const std::string& key, std::vector<double>& out) {
    if (auto* v = take(key)) {
      out.clear();
      for (const auto& item : v->items) out.push_back(parse_double(item, key));
    }
  }
  void get_size_list(const std::string& key, std::vector<std::size_t>& out) {
    if (auto* v = take(key)) {
      out.clear();
      for (const auto& item : v->items) {
        out.push_back(static_cast<std::size_t>(parse_u64(item, key)));
      }
    }
  }
  void get_string_list(const std::string& key, std::vector<std::string>& out) {
    if (auto* v = take(key)) out = v->items;
  }

  void finish() const {
    for (const auto& [key, value] : values_) {
      if (!consumed_.count(key)) {
        throw std::invalid_argument("config line " + std::to_string(value.line) +
                                    ": unknown key '" + key + "'");
      }
    }
  }

private:
  Value* take(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) return nullptr;
    consumed_.insert(key);
    return &it->second;
  }

  ValueMap values_;
  std::set<std::string> consumed_;
};

}  // namespace

std::string to_string(RankRule rule) {
  switch (rule) {
    case RankRule::fixed: return "fixed";
    case RankRule::avg: return "avg";
    case RankRule::pcm: return "pcm";
  }
  return "?";
}

RankRule rank_rule_from_string(const std::string& s) {
  if (s == "fixed") return RankRule::fixed;
  if (s == "avg") return RankRule::avg;
  if (s == "pcm") return RankRule::pcm;
  throw std::invalid_argument("unknown rank rule '" + s + "' (expected fixed|avg|pcm)");
}

void ExperimentConfig::validate() const {
  scenario.validate();
  als.validate();
  if (n_realizations < 1) throw std::invalid_argument("config: n_realizations must be >= 1");
  if (snr_grid_db.empty()) throw std::invalid_argument("config: snr_grid_db must be non-empty");
  if (r_max < 1) throw std::invalid_argument("config: r_max must be >= 1");
  if (fixed_rank < 1 || fixed_rank > r_max) {
    throw std::invalid_argument("config: fixed_rank must be in [1, r_max]");
  }
  if (methods.empty()) throw std::invalid_argument("config: methods must be non-empty");
  for (const auto& m : methods) {
    if (m != "cpd" && m != "mtcpd") {
      throw std::invalid_argument("config: unknown method '" + m + "' (expected cpd|mtcpd)");
    }
  }
  if (rank_rules.empty()) throw std::invalid_argument("config: rank_rules must be non-empty");
  if (!(pcm_threshold > 0.0)) throw std::invalid_argument("config: pcm_threshold must be > 0");
  if (streams_p.empty()) throw std::invalid_argument("config: streams_p must be non-empty");
  const std::size_t max_p = std::min(scenario.bs_antennas(), scenario.n);
  for (std::size_t p : streams_p) {
    if (p < 1 || p > max_p) {
      throw std::invalid_argument("config: streams_p entry " + std::to_string(p) +
                                  " outside [1, min(M, N)] = [1, " + std::to_string(max_p) + "]");
    }
  }
  for (double s : snr_grid_db) {
    if (std::isnan(s)) throw std::invalid_argument("config: snr_grid_db entry is NaN");
  }
  // Plans must resolve against the scenario dims.
  for (const auto& m : methods) plan_for(m);
}

TensorizationPlan ExperimentConfig::plan_for(const std::string& method) const {
  const std::string& spec = method == "cpd" ? plan_cpd : plan_mtcpd;
  if (method != "cpd" && method != "mtcpd") {
    throw std::invalid_argument("plan_for: unknown method '" + method + "'");
  }
  return resolve_plan(spec, scenario.x, scenario.y, scenario.k);
}

std::string ExperimentConfig::canonical_text() const {
  std::ostringstream os;
  os << "als.init = "
     << (als.init == InitMethod::dft_dominant ? "dft_dominant" : "random") << "\n";
  os << "als.max_iterations = " << als.max_iterations << "\n";
  os << "als.tolerance = " << format_double(als.tolerance) << "\n";
  os << "dump_components = " << (dump_components ? "true" : "false") << "\n";
  os << "fixed_rank = " << fixed_rank << "\n";
  os << "master_seed = " << master_seed << "\n";
  os << "methods =";
  for (const auto& m : methods) os << " " << m;
  os << "\n";
  os << "n_realizations = " << n_realizations << "\n";
  os << "pcm_threshold = " << format_double(pcm_threshold) << "\n";
  os << "plan_cpd = " << plan_cpd << "\n";
  os << "plan_mtcpd = " << plan_mtcpd << "\n";
  os << "r_max = " << r_max << "\n";
  os << "rank_rules =";
  for (const auto& r : rank_rules) os << " " << to_string(r);
  os << "\n";
  os << "scenario.angular_spread = " << format_double(scenario.angular_spread) << "\n";
  os << "scenario.delay_spread = " << format_double(scenario.delay_spread) << "\n";
  os << "scenario.k = " << scenario.k << "\n";
  os << "scenario.n = " << scenario.n << "\n";
  os << "scenario.n_clusters = " << scenario.n_clusters << "\n";
  os << "scenario.power_decay_db = " << format_double(scenario.power_decay_db) << "\n";
  os << "scenario.subpaths_per_cluster = " << scenario.subpaths_per_cluster << "\n";
  os << "scenario.x = " << scenario.x << "\n";
  os << "scenario.y = " << scenario.y << "\n";
  os << "snr_dl_db = " << format_double(snr_dl_db) << "\n";
  os << "snr_grid_db =";
  for (double s : snr_grid_db) os << " " << format_double(s);
  os << "\n";
  os << "streams_p =";
  for (std::size_t p : streams_p) os << " " << p;
  os << "\n";
  return os.str();
}

std::string ExperimentConfig::config_hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_text())));
  return buf;
}

ExperimentConfig desk_profile() { return ExperimentConfig{}; }

ExperimentConfig paper_profile() {
  ExperimentConfig cfg;
  cfg.scenario.x = 8;
  cfg.scenario.y = 8;
  cfg.scenario.n = 2;
  cfg.scenario.k = 512;
  cfg.scenario.n_clusters = 6;
  cfg.scenario.subpaths_per_cluster = 8;
  cfg.n_realizations = 1200;
  cfg.r_max = 40;
  cfg.fixed_rank = 40;
  cfg.snr_grid_db.clear();
  for (int s = -24; s <= 4; s += 2) cfg.snr_grid_db.push_back(static_cast<double>(s));
  return cfg;
}

ExperimentConfig parse_config(const std::string& text) {
  Reader reader(parse_values(text));
  ExperimentConfig cfg;

  reader.get_u64("master_seed", cfg.master_seed);
  reader.get_string("output_dir", cfg.output_dir);
  reader.get_size("n_realizations", cfg.n_realizations);
  reader.get_double_list("snr_grid_db", cfg.snr_grid_db);
  reader.get_string_list("methods", cfg.methods);
  reader.get_size("r_max", cfg.r_max);
  bool fixed_rank_given = reader.has("fixed_rank");
  reader.get_size("fixed_rank", cfg.fixed_rank);
  if (!fixed_rank_given) cfg.fixed_rank = cfg.r_max;
  reader.get_double("pcm_threshold", cfg.pcm_threshold);
  reader.get_size_list("streams_p", cfg.streams_p);
  reader.get_double("snr_dl_db", cfg.snr_dl_db);
  reader.get_bool("dump_components", cfg.dump_components);

  std::vector<std::string> rules;
  reader.get_string_list("rank_rules", rules);
  if (!rules.empty()) {
    cfg.rank_rules.clear();
    for (const auto& r : rules) cfg.rank_rules.push_back(rank_rule_from_string(r));
  }

  reader.get_size("scenario.x", cfg.scenario.x);
  reader.get_size("scenario.y", cfg.scenario.y);
  reader.get_size("scenario.n", cfg.scenario.n);
  reader.get_size("scenario.k", cfg.scenario.k);
  reader.get_size("scenario.n_clusters", cfg.scenario.n_clusters);
  reader.get_size("scenario.subpaths_per_cluster", cfg.scenario.subpaths_per_cluster);
  reader.get_double("scenario.angular_spread", cfg.scenario.angular_spread);
  reader.get_double("scenario.delay_spread", cfg.scenario.delay_spread);
  reader.get_double("scenario.power_decay_db", cfg.scenario.power_decay_db);

  reader.get_size("als.max_iterations", cfg.als.max_iterations);
  reader.get_double("als.tolerance", cfg.als.tolerance);
  std::string init;
  reader.get_string("als.init", init);
  if (!init.empty()) {
    if (init == "dft_dominant") {
      cfg.als.init = InitMethod::dft_dominant;
    } else if (init == "random") {
      cfg.als.init = InitMethod::random_unit;
    } else {
      throw std::invalid_argument("config key 'als.init': expected dft_dominant|random, got '" +
                                  init + "'");
    }
  }

  reader.get_string("plans.cpd", cfg.plan_cpd);
  reader.get_string("plans.mtcpd", cfg.plan_mtcpd);

  reader.finish();
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

TensorizationPlan resolve_plan(const std::string& spec, std::size_t x, std::size_t y,
                               std::size_t k) {
  if (spec == "trivial") return make_trivial_plan(x, y, k);
  if (spec == "all2") return make_all2_plan(x, y, k);

  // Explicit form "x=2,2;y=2,2;k=4,4,4".
  TensorizationPlan plan;
  plan.physical_dims = {x, y, k};
  bool got_x = false, got_y = false, got_k = false;
  for (const auto& part : split(spec, ';')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("plan spec '" + spec + "': expected mode=f1,f2,...");
    }
    const std::string mode = trim(part.substr(0, eq));
    std::vector<std::size_t> factors;
    for (const auto& item : split(part.substr(eq + 1), ',')) {
      factors.push_back(static_cast<std::size_t>(parse_u64(item, "plan:" + mode)));
    }
    if (mode == "x") {
      plan.factors_x = factors;
      got_x = true;
    } else if (mode == "y") {
      plan.factors_y = factors;
      got_y = true;
    } else if (mode == "k") {
      plan.factors_k = factors;
      got_k = true;
    } else {
      throw std::invalid_argument("plan spec '" + spec + "': unknown mode '" + mode + "'");
    }
  }
  if (!got_x || !got_y || !got_k) {
    throw std::invalid_argument("plan spec '" + spec + "': must define x, y and k");
  }
  plan.validate();
  return plan;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[64];
  // shortest representation that round-trips
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace mtcpd
