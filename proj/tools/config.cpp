#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>

namespace dynastep::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError(key + ": '" + t + "' is not a number");
  }
  return v;
}

std::size_t parse_count(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw ConfigError(key + ": '" + t + "' is not a non-negative integer");
  }
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::string item;
  for (char c : text + ",") {
    if (c == ',') {
      out.push_back(parse_double(key, item));
      item.clear();
    } else {
      item += c;
    }
  }
  return out;
}

bool parse_switch(const std::string& key, const std::string& text) {
  const std::string t = lower(trim(text));
  if (t == "on" || t == "true" || t == "yes" || t == "1") return true;
  if (t == "off" || t == "false" || t == "no" || t == "0") return false;
  throw ConfigError(key + ": expected on/off, got '" + trim(text) + "'");
}

template <typename Enum>
Enum parse_choice(const std::string& key, const std::string& text,
                  const std::vector<std::pair<std::string, Enum>>& choices) {
  const std::string t = lower(trim(text));
  std::string names;
  for (const auto& [name, value] : choices) {
    if (t == name) return value;
    names += (names.empty() ? "" : ", ") + name;
  }
  throw ConfigError(key + ": expected one of " + names + ", got '" + trim(text) + "'");
}

using Setter = void (*)(RunConfig&, const std::string& key, const std::string& value);

struct KeyInfo {
  const char* section;
  const char* name;
  Setter set;
};

#define DOUBLE_FIELD(sec, field, target)                                              \
  KeyInfo {                                                                           \
    sec, #field, [](RunConfig& c, const std::string& k, const std::string& v) {       \
      c.target.field = parse_double(k, v);                                            \
    }                                                                                 \
  }

const std::vector<KeyInfo>& key_table() {
  static const std::vector<KeyInfo> table{
      {"run", "scenario",
       [](RunConfig& c, const std::string&, const std::string& v) { c.scenario = trim(v); }},
      {"run", "outdir",
       [](RunConfig& c, const std::string&, const std::string& v) { c.outdir = trim(v); }},
      {"run", "plot",
       [](RunConfig& c, const std::string&, const std::string& v) {
         c.plot_channels.clear();
         std::string item;
         for (char ch : v + ",") {
           if (ch == ',') {
             if (!trim(item).empty()) c.plot_channels.push_back(trim(item));
             item.clear();
           } else {
             item += ch;
           }
         }
       }},
      DOUBLE_FIELD("gains", K1, params),
      DOUBLE_FIELD("gains", K2, params),
      DOUBLE_FIELD("gains", K3, params),
      DOUBLE_FIELD("gains", Kv1, params),
      DOUBLE_FIELD("gains", Kv2, params),
      {"initial", "x0",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.params.x0 = parse_list(k, v);
       }},
      DOUBLE_FIELD("initial", x2d0, params),
      DOUBLE_FIELD("initial", u0, params),
      {"controller", "kappa2_variant",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.params.kappa2_variant = parse_choice<Kappa2Variant>(
             k, v,
             {{"full", Kappa2Variant::Full},
              {"lipschitz", Kappa2Variant::SimplifiedLipschitz},
              {"first-order", Kappa2Variant::SimplifiedFirstOrder}});
       }},
      {"controller", "x2d_dot_variant",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.params.x2d_dot_variant = parse_choice<X2dDotVariant>(
             k, v, {{"full", X2dDotVariant::Full}, {"simplified", X2dDotVariant::Simplified}});
       }},
      {"controller", "first_order_factor",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.params.first_order_factor = parse_choice<FirstOrderFactor>(
             k, v,
             {{"transpose", FirstOrderFactor::Transpose},
              {"inverse-transpose", FirstOrderFactor::InverseTranspose}});
       }},
      {"controller", "scaling",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.params.scaling = parse_switch(k, v);
       }},
      DOUBLE_FIELD("plant", sigma, params),
      DOUBLE_FIELD("plant", domain_bound, params),
      DOUBLE_FIELD("reference", mu, params),
      DOUBLE_FIELD("reference", r0, params),
      DOUBLE_FIELD("reference", rdot0, params),
      {"sim", "integrator",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.sim.integrator = parse_choice<Integrator>(
             k, v, {{"rk4", Integrator::RK4}, {"rk45", Integrator::RK45}});
       }},
      DOUBLE_FIELD("sim", dt, sim),
      DOUBLE_FIELD("sim", t_final, sim),
      DOUBLE_FIELD("sim", rtol, sim),
      DOUBLE_FIELD("sim", atol, sim),
      DOUBLE_FIELD("sim", dt_max, sim),
      DOUBLE_FIELD("sim", abort_threshold, sim),
      {"sim", "sample_every",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.sim.sample_every = parse_count(k, v);
       }},
  };
  return table;
}

#undef DOUBLE_FIELD

const KeyInfo* find_key(const std::string& section, const std::string& name) {
  for (const KeyInfo& k : key_table()) {
    if (name == k.name && (section.empty() || section == k.section)) return &k;
  }
  return nullptr;
}

bool known_section(const std::string& section) {
  return std::any_of(key_table().begin(), key_table().end(),
                     [&](const KeyInfo& k) { return section == k.section; });
}

}  // namespace

void SimOverrides::apply(SimConfig& cfg) const {
  if (integrator) cfg.integrator = *integrator;
  if (dt) cfg.dt = *dt;
  if (t_final) cfg.t_final = *t_final;
  if (rtol) cfg.rtol = *rtol;
  if (atol) cfg.atol = *atol;
  if (dt_max) cfg.dt_max = *dt_max;
  if (abort_threshold) cfg.abort_threshold = *abort_threshold;
  if (sample_every) cfg.sample_every = *sample_every;
}

void set_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const std::string k = trim(key);
  std::string section;
  std::string name = k;
  if (const auto dot = k.find('.'); dot != std::string::npos) {
    section = k.substr(0, dot);
    name = k.substr(dot + 1);
  }
  const KeyInfo* info = find_key(section, name);
  if (info == nullptr) throw ConfigError("unknown key '" + k + "'");
  info->set(cfg, k, value);
}

void parse_config(std::istream& in, const std::string& origin, RunConfig& cfg) {
  std::string line;
  std::string section;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string where = origin + ":" + std::to_string(number) + ": ";
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!known_section(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string name = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (find_key(section, name) == nullptr) {
        throw ConfigError("unknown key '" + name + "'" +
                          (section.empty() ? "" : " in [" + section + "]"));
      }
      set_value(cfg, section.empty() ? name : section + "." + name, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("--set " + assignment + ": expected key=value");
  }
  try {
    set_value(cfg, assignment.substr(0, eq), assignment.substr(eq + 1));
  } catch (const ConfigError& e) {
    throw ConfigError("--set " + assignment + ": " + e.what());
  }
}

std::vector<std::string> known_keys() {
  std::vector<std::string> out;
  for (const KeyInfo& k : key_table()) out.push_back(std::string(k.section) + "." + k.name);
  return out;
}

}  // namespace dynastep::cli
