#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "eklab/io.hpp"

// Experiment manifests for the command-line driver.  The on-disk format is
// a small TOML subset: `key = value` lines, `[flow]` / `[verify]` tables,
// `#` comments, double-quoted strings, numbers, booleans, and integer
// arrays.  canonical() emits a manifest in a fixed key order with
// round-trip number formatting; its FNV-1a hash fingerprints the resolved
// configuration and is embedded in every output file.

namespace eklab {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FlowSettings {
  double step = 1.0;
  double tol = 1e-6;
  long long max_iters = 1000;
  double shrink = 0.5;
  bool precondition = true;

  bool operator==(const FlowSettings&) const = default;
};

struct ExperimentConfig {
  std::string testbed = "projective";  // "projective" | "torus"
  int n = 2;                           // complex dimension
  int nodes = 192;                     // radial interior collocation nodes
  int axis_points = 16;                // torus points per real axis
  std::vector<int> k = {1};            // functional indices to run
  std::string schedule = "linear";     // path schedule for energy runs
  int path_steps = 33;                 // time-quadrature nodes (odd)
  std::uint64_t seed = 1;              // drives all random perturbations
  double amplitude = 0.05;             // perturbation size; 0 = reference
  std::string out = "eklab-out";       // output directory
  FlowSettings flow;
  double verify_tol = 1e-5;

  bool operator==(const ExperimentConfig&) const = default;

  void validate() const {
    if (testbed != "projective" && testbed != "torus")
      throw ConfigError("config: testbed = \"" + testbed +
                        "\" (expected \"projective\" or \"torus\")");
    if (testbed == "projective") {
      if (n < 1 || n > 8)
        throw ConfigError("config: n = " + std::to_string(n) +
                          " is out of range: the projective testbed supports "
                          "n in [1, 8]");
      if (nodes < 64 || nodes > 1024)
        throw ConfigError("config: nodes = " + std::to_string(nodes) +
                          " is out of range [64, 1024]");
    } else {
      if (n < 1 || n > 3)
        throw ConfigError("config: n = " + std::to_string(n) +
                          " is out of range: the torus testbed supports "
                          "n in [1, 3]");
      if (axis_points < 8 || axis_points > 256 || axis_points % 2 != 0)
        throw ConfigError("config: axis_points = " +
                          std::to_string(axis_points) +
                          " must be even and in [8, 256]");
    }
    if (k.empty()) throw ConfigError("config: k list is empty");
    for (int kk : k)
      if (kk < 0 || kk > n)
        throw ConfigError("config: k = " + std::to_string(kk) +
                          " is out of range [0, n] with n = " +
                          std::to_string(n));
    if (schedule != "linear" && schedule != "sine")
      throw ConfigError("config: schedule = \"" + schedule +
                        "\" (expected \"linear\" or \"sine\")");
    if (path_steps < 3 || path_steps % 2 == 0 || path_steps > 100001)
      throw ConfigError("config: path_steps = " + std::to_string(path_steps) +
                        " must be odd and in [3, 100001]");
    if (!(amplitude >= 0.0) || amplitude > 10.0)
      throw ConfigError("config: amplitude must be in [0, 10]");
    if (out.empty()) throw ConfigError("config: out directory is empty");
    if (!(flow.step > 0.0))
      throw ConfigError("config: flow.step must be positive");
    if (!(flow.tol > 0.0)) throw ConfigError("config: flow.tol must be positive");
    if (flow.max_iters < 1)
      throw ConfigError("config: flow.max_iters must be at least 1");
    if (!(flow.shrink > 0.0) || !(flow.shrink < 1.0))
      throw ConfigError("config: flow.shrink must lie in (0, 1)");
    if (!(verify_tol > 0.0))
      throw ConfigError("config: verify.tol must be positive");
  }

  std::string canonical() const {
    std::ostringstream os;
    os << "amplitude = " << num(amplitude) << '\n'
       << "axis_points = " << axis_points << '\n'
       << "k = [";
    for (std::size_t i = 0; i < k.size(); ++i)
      os << (i ? ", " : "") << k[i];
    os << "]\n"
       << "n = " << n << '\n'
       << "nodes = " << nodes << '\n'
       << "out = \"" << out << "\"\n"
       << "path_steps = " << path_steps << '\n'
       << "schedule = \"" << schedule << "\"\n"
       << "seed = " << seed << '\n'
       << "testbed = \"" << testbed << "\"\n\n"
       << "[flow]\n"
       << "max_iters = " << flow.max_iters << '\n'
       << "precondition = " << (flow.precondition ? "true" : "false") << '\n'
       << "shrink = " << num(flow.shrink) << '\n'
       << "step = " << num(flow.step) << '\n'
       << "tol = " << num(flow.tol) << "\n\n"
       << "[verify]\n"
       << "tol = " << num(verify_tol) << '\n';
    return os.str();
  }

  std::uint64_t hash() const { return fnv1a64(canonical()); }
  std::string hash_hex() const { return hex64(hash()); }

 private:
  // Shortest decimal that round-trips the double.
  static std::string num(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  }
};

namespace detail {

struct TomlValue {
  enum class Kind { string, number, boolean, array } kind;
  std::string str;
  double number = 0.0;
  bool is_integer = false;
  bool boolean = false;
  std::vector<long long> array;
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline ConfigError at_line(int line, const std::string& what) {
  return ConfigError("config line " + std::to_string(line) + ": " + what);
}

inline TomlValue parse_value(std::string_view v, int line) {
  TomlValue out{};
  if (v.empty()) throw at_line(line, "missing value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"' ||
        v.substr(1, v.size() - 2).find('"') != std::string_view::npos)
      throw at_line(line, "malformed string value");
    out.kind = TomlValue::Kind::string;
    out.str = std::string(v.substr(1, v.size() - 2));
    return out;
  }
  if (v == "true" || v == "false") {
    out.kind = TomlValue::Kind::boolean;
    out.boolean = (v == "true");
    return out;
  }
  if (v.front() == '[') {
    if (v.back() != ']') throw at_line(line, "unterminated array");
    out.kind = TomlValue::Kind::array;
    std::string_view body = trim(v.substr(1, v.size() - 2));
    while (!body.empty()) {
      const std::size_t comma = body.find(',');
      const std::string_view item = trim(body.substr(0, comma));
      long long x = 0;
      const auto res = std::from_chars(item.data(), item.data() + item.size(), x);
      if (res.ec != std::errc{} || res.ptr != item.data() + item.size())
        throw at_line(line, "array entries must be integers");
      out.array.push_back(x);
      if (comma == std::string_view::npos) break;
      body = trim(body.substr(comma + 1));
      if (body.empty()) throw at_line(line, "trailing comma in array");
    }
    return out;
  }
  out.kind = TomlValue::Kind::number;
  long long i = 0;
  auto ri = std::from_chars(v.data(), v.data() + v.size(), i);
  if (ri.ec == std::errc{} && ri.ptr == v.data() + v.size()) {
    out.number = static_cast<double>(i);
    out.is_integer = true;
    return out;
  }
  auto rd = std::from_chars(v.data(), v.data() + v.size(), out.number);
  if (rd.ec != std::errc{} || rd.ptr != v.data() + v.size())
    throw at_line(line, "cannot parse value '" + std::string(v) + "'");
  return out;
}

inline long long as_int(const TomlValue& v, const std::string& key, int line) {
  if (v.kind != TomlValue::Kind::number || !v.is_integer)
    throw at_line(line, key + " must be an integer");
  return std::llround(v.number);
}

inline double as_double(const TomlValue& v, const std::string& key, int line) {
  if (v.kind != TomlValue::Kind::number)
    throw at_line(line, key + " must be a number");
  return v.number;
}

inline std::string as_string(const TomlValue& v, const std::string& key,
                             int line) {
  if (v.kind != TomlValue::Kind::string)
    throw at_line(line, key + " must be a quoted string");
  return v.str;
}

}  // namespace detail

inline ExperimentConfig parse_config(std::string_view text) {
  using detail::TomlValue;
  ExperimentConfig cfg;
  std::string section;
  int line = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view raw = text.substr(
        pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++line;
    // Comments start a '#' outside of quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] == '"') quoted = !quoted;
      if (raw[i] == '#' && !quoted) {
        raw = raw.substr(0, i);
        break;
      }
    }
    const std::string_view s = detail::trim(raw);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']')
        throw detail::at_line(line, "malformed table header");
      section = std::string(detail::trim(s.substr(1, s.size() - 2)));
      if (section != "flow" && section != "verify")
        throw detail::at_line(line, "unknown table [" + section + "]");
      continue;
    }
    const std::size_t eq = s.find('=');
    if (eq == std::string_view::npos)
      throw detail::at_line(line, "expected key = value");
    const std::string key(detail::trim(s.substr(0, eq)));
    const TomlValue v = detail::parse_value(detail::trim(s.substr(eq + 1)), line);
    const std::string full = section.empty() ? key : section + "." + key;

    if (full == "testbed")
      cfg.testbed = detail::as_string(v, full, line);
    else if (full == "n")
      cfg.n = static_cast<int>(detail::as_int(v, full, line));
    else if (full == "nodes")
      cfg.nodes = static_cast<int>(detail::as_int(v, full, line));
    else if (full == "axis_points")
      cfg.axis_points = static_cast<int>(detail::as_int(v, full, line));
    else if (full == "k") {
      cfg.k.clear();
      if (v.kind == TomlValue::Kind::array)
        for (long long x : v.array) cfg.k.push_back(static_cast<int>(x));
      else
        cfg.k.push_back(static_cast<int>(detail::as_int(v, full, line)));
    } else if (full == "schedule")
      cfg.schedule = detail::as_string(v, full, line);
    else if (full == "path_steps")
      cfg.path_steps = static_cast<int>(detail::as_int(v, full, line));
    else if (full == "seed") {
      const long long x = detail::as_int(v, full, line);
      if (x < 0) throw detail::at_line(line, "seed must be nonnegative");
      cfg.seed = static_cast<std::uint64_t>(x);
    } else if (full == "amplitude")
      cfg.amplitude = detail::as_double(v, full, line);
    else if (full == "out")
      cfg.out = detail::as_string(v, full, line);
    else if (full == "flow.step")
      cfg.flow.step = detail::as_double(v, full, line);
    else if (full == "flow.tol")
      cfg.flow.tol = detail::as_double(v, full, line);
    else if (full == "flow.max_iters")
      cfg.flow.max_iters = detail::as_int(v, full, line);
    else if (full == "flow.shrink")
      cfg.flow.shrink = detail::as_double(v, full, line);
    else if (full == "flow.precondition") {
      if (v.kind != TomlValue::Kind::boolean)
        throw detail::at_line(line, "flow.precondition must be true or false");
      cfg.flow.precondition = v.boolean;
    } else if (full == "verify.tol")
      cfg.verify_tol = detail::as_double(v, full, line);
    else
      throw detail::at_line(line, "unknown key '" + full + "'");
  }
  return cfg;
}

inline ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return parse_config(text);
}

}  // namespace eklab
