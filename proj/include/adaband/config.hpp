#ifndef ADABAND_CONFIG_HPP
#define ADABAND_CONFIG_HPP

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace adaband {

// Raised for any malformed or unknown configuration input; the CLI maps it
// to exit code 2.  Messages carry file:line so a bad run is diagnosable from
// the error alone.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Plain sectioned key=value text.  '#' or ';' starts a comment, blank lines
// are skipped, '[name]' opens a section, keys may not repeat within one
// section.  Sections may repeat (several [model] blocks describe a suite).
class Config {
 public:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
  };
  struct Section {
    std::string name;
    int line = 0;
    std::map<std::string, Entry> entries;
    std::string origin;

    bool has(const std::string& key) const { return entries.count(key) != 0; }

    const std::string& get_string(const std::string& key) const {
      auto it = entries.find(key);
      if (it == entries.end())
        throw ConfigError(origin + ":" + std::to_string(line) + ": section [" + name +
                          "] is missing required key '" + key + "'");
      it->second.used = true;
      return it->second.value;
    }

    std::string get_string(const std::string& key, const std::string& fallback) const {
      return has(key) ? get_string(key) : fallback;
    }

    double get_double(const std::string& key) const {
      return parse_double(key, get_string(key));
    }
    double get_double(const std::string& key, double fallback) const {
      return has(key) ? get_double(key) : fallback;
    }

    long long get_int(const std::string& key) const {
      const std::string& v = get_string(key);
      try {
        std::size_t pos = 0;
        long long x = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
      } catch (const std::exception&) {
        throw ConfigError(place(key) + ": key '" + key + "' expects an integer, got '" + v + "'");
      }
    }
    long long get_int(const std::string& key, long long fallback) const {
      return has(key) ? get_int(key) : fallback;
    }

    std::uint64_t get_u64(const std::string& key) const {
      const std::string& v = get_string(key);
      try {
        // stoull would wrap a negative value instead of failing
        if (!v.empty() && v[0] == '-') throw std::invalid_argument("");
        std::size_t pos = 0;
        unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
      } catch (const std::exception&) {
        throw ConfigError(place(key) + ": key '" + key + "' expects an unsigned integer, got '" +
                          v + "'");
      }
    }
    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
      return has(key) ? get_u64(key) : fallback;
    }

    bool get_bool(const std::string& key, bool fallback) const {
      if (!has(key)) return fallback;
      const std::string& v = get_string(key);
      if (v == "true" || v == "1" || v == "yes") return true;
      if (v == "false" || v == "0" || v == "no") return false;
      throw ConfigError(place(key) + ": key '" + key + "' expects true/false, got '" + v + "'");
    }

    // whitespace- or comma-separated list of integers
    std::vector<long long> get_int_list(const std::string& key) const {
      std::string v = get_string(key);
      for (char& c : v)
        if (c == ',') c = ' ';
      std::istringstream is(v);
      std::vector<long long> out;
      long long x;
      while (is >> x) out.push_back(x);
      if (out.empty() || !is.eof())
        throw ConfigError(place(key) + ": key '" + key + "' expects a list of integers, got '" +
                          v + "'");
      return out;
    }

    std::vector<double> get_double_list(const std::string& key) const {
      std::string v = get_string(key);
      for (char& c : v)
        if (c == ',') c = ' ';
      std::istringstream is(v);
      std::vector<double> out;
      double x;
      while (is >> x) out.push_back(x);
      if (out.empty() || !is.eof())
        throw ConfigError(place(key) + ": key '" + key + "' expects a list of reals, got '" + v +
                          "'");
      return out;
    }

    std::string place(const std::string& key) const {
      auto it = entries.find(key);
      int ln = it == entries.end() ? line : it->second.line;
      return origin + ":" + std::to_string(ln);
    }

   private:
    double parse_double(const std::string& key, const std::string& v) const {
      try {
        std::size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("");
        return x;
      } catch (const std::exception&) {
        throw ConfigError(place(key) + ": key '" + key + "' expects a real number, got '" + v +
                          "'");
      }
    }
  };

  static Config parse_string(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    Section* cur = nullptr;
    while (std::getline(in, raw)) {
      ++line;
      std::string s = strip_comment(raw);
      s = trim(s);
      if (s.empty()) continue;
      if (s.front() == '[') {
        if (s.back() != ']')
          throw ConfigError(origin + ":" + std::to_string(line) + ": unterminated section header '" +
                            raw + "'");
        std::string name = trim(s.substr(1, s.size() - 2));
        if (name.empty())
          throw ConfigError(origin + ":" + std::to_string(line) + ": empty section name");
        cfg.sections_.push_back(Section{name, line, {}, origin});
        cur = &cfg.sections_.back();
        continue;
      }
      auto eq = s.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(line) + ": expected 'key = value', got '" +
                          raw + "'");
      if (!cur)
        throw ConfigError(origin + ":" + std::to_string(line) +
                          ": key outside of any [section]");
      std::string key = trim(s.substr(0, eq));
      std::string value = trim(s.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(line) + ": empty key");
      if (cur->entries.count(key))
        throw ConfigError(origin + ":" + std::to_string(line) + ": duplicate key '" + key +
                          "' in section [" + cur->name + "] (first at line " +
                          std::to_string(cur->entries[key].line) + ")");
      cur->entries[key] = Entry{value, line, false};
    }
    return cfg;
  }

  static Config parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
  }

  // first section with this name, or null
  const Section* find(const std::string& name) const {
    for (const auto& s : sections_)
      if (s.name == name) return &s;
    return nullptr;
  }

  const Section& require(const std::string& name) const {
    const Section* s = find(name);
    if (!s) throw ConfigError(origin_ + ": missing required section [" + name + "]");
    return *s;
  }

  std::vector<const Section*> all(const std::string& name) const {
    std::vector<const Section*> out;
    for (const auto& s : sections_)
      if (s.name == name) out.push_back(&s);
    return out;
  }

  // Fail-fast reproducibility: every key must have been consumed by the
  // experiment that ran, otherwise a typo would silently change nothing.
  void check_all_used() const {
    for (const auto& s : sections_)
      for (const auto& [key, e] : s.entries)
        if (!e.used)
          throw ConfigError(s.origin + ":" + std::to_string(e.line) + ": unknown key '" + key +
                            "' in section [" + s.name + "]");
  }

 private:
  static std::string strip_comment(const std::string& s) {
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s[i] == '#' || s[i] == ';') return s.substr(0, i);
    return s;
  }
  static std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
  }

  std::vector<Section> sections_;
  std::string origin_;
};

}  // namespace adaband

#endif
