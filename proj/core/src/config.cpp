#include "d3d/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "d3d/errors.hpp"

namespace d3d {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(std::string_view text, const std::string& key) {
  const std::string s(trim(text));
  if (s.empty()) throw ConfigError("empty value for '" + key + "'");
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError("'" + key + "': not a number: '" + s + "'");
  }
  if (used != s.size()) throw ConfigError("'" + key + "': not a number: '" + s + "'");
  return v;
}

std::size_t parse_count(std::string_view text, const std::string& key) {
  const std::string_view s = trim(text);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || v == 0) {
    throw ConfigError("'" + key + "': expected a positive integer, got '" + std::string(s) + "'");
  }
  return v;
}

std::array<float, 3> parse_triple(std::string_view text, const std::string& key) {
  std::array<float, 3> out{};
  std::size_t n = 0;
  std::size_t pos = 0;
  while (true) {
    const auto comma = text.find(',', pos);
    const auto item = text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    if (n == 3) throw ConfigError("'" + key + "': expected 3 comma-separated values");
    out[n++] = static_cast<float>(parse_number(item, key));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (n != 3) throw ConfigError("'" + key + "': expected 3 comma-separated values");
  return out;
}

std::string format_float(double v) {
  std::ostringstream os;
  os.precision(9);
  os << v;
  return os.str();
}

}  // namespace

double parse_fraction(std::string_view text) {
  const std::string_view s = trim(text);
  const auto slash = s.find('/');
  double v = 0.0;
  if (slash == std::string_view::npos) {
    v = parse_number(s, "width_multiplier");
  } else {
    const double num = parse_number(s.substr(0, slash), "width_multiplier");
    const double den = parse_number(s.substr(slash + 1), "width_multiplier");
    if (den == 0.0) throw ConfigError("width_multiplier: zero denominator");
    v = num / den;
  }
  if (!(v > 0.0) || v > 1e3) throw ConfigError("width_multiplier out of range: '" + std::string(s) + "'");
  return v;
}

ModelSpec ModelConfig::build() const { return build_model(variant, skip, width_multiplier, shortcut); }

ModelSpec ModelConfig::build_baseline() const {
  return build_conventional(variant.depth, width_multiplier, shortcut);
}

ModelConfig ModelConfig::parse(std::string_view text) {
  ModelConfig cfg;
  bool have_variant = false;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");

    if (key == "variant") {
      cfg.variant = parse_variant(value);
      have_variant = true;
    } else if (key == "skip_kind") {
      cfg.skip = parse_skip_kind(value);
    } else if (key == "width_multiplier") {
      cfg.width_multiplier = parse_fraction(value);
      cfg.width_text = std::string(value);
    } else if (key == "head") {
      cfg.head.kind = parse_head_kind(value);
    } else if (key == "num_classes") {
      cfg.head.num_classes = parse_count(value, key);
    } else if (key == "input_size") {
      cfg.input_size = parse_count(value, key);
    } else if (key == "cache_padding") {
      cfg.cache_padding = parse_cache_padding(value);
    } else if (key == "norm_mean") {
      cfg.norm.mean = parse_triple(value, key);
    } else if (key == "norm_std") {
      cfg.norm.stdev = parse_triple(value, key);
      for (float s : cfg.norm.stdev) {
        if (!(s > 0.0f)) throw ConfigError("norm_std values must be positive");
      }
    } else if (key == "shortcut") {
      cfg.shortcut = parse_shortcut_mode(value);
    } else if (key == "hidden_dim") {
      cfg.head.hidden_dim = parse_count(value, key);
    } else if (key == "head_layers") {
      cfg.head.layers = parse_count(value, key);
    } else if (key == "fc_window") {
      cfg.head.window = parse_count(value, key);
    } else if (key == "fc_pooling") {
      cfg.head.pooling = parse_fc_pooling(value);
    } else {
      throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (!have_variant) throw ConfigError("missing required key 'variant'");
  return cfg;
}

ModelConfig ModelConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string ModelConfig::to_text() const {
  auto triple = [](const std::array<float, 3>& a) {
    return format_float(a[0]) + ", " + format_float(a[1]) + ", " + format_float(a[2]);
  };
  std::ostringstream os;
  os << "variant = " << to_string(variant) << '\n'
     << "skip_kind = " << to_string(skip) << '\n'
     << "width_multiplier = " << width_text << '\n'
     << "head = " << to_string(head.kind) << '\n'
     << "num_classes = " << head.num_classes << '\n'
     << "input_size = " << input_size << '\n'
     << "cache_padding = " << to_string(cache_padding) << '\n'
     << "norm_mean = " << triple(norm.mean) << '\n'
     << "norm_std = " << triple(norm.stdev) << '\n'
     << "shortcut = " << to_string(shortcut) << '\n'
     << "hidden_dim = " << head.hidden_dim << '\n'
     << "head_layers = " << head.layers << '\n'
     << "fc_window = " << head.window << '\n'
     << "fc_pooling = " << to_string(head.pooling) << '\n';
  return os.str();
}

}  // namespace d3d
