// SPDX-License-Identifier: Apache-2.0
#include "emaslov/config.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace emaslov {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
  std::ostringstream os;
  os << origin << ":" << line << ": " << msg;
  throw ConfigError(os.str());
}

}  // namespace

// ---------------------------------------------------------------------------
// Polynomial

Polynomial Polynomial::parse(const std::string& text, int dim) {
  std::vector<Term> terms;
  size_t i = 0;
  const size_t n = text.size();
  auto skip_ws = [&] {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  skip_ws();
  if (i == n) throw ConfigError("empty polynomial expression");
  bool first = true;
  while (i < n) {
    double sign = 1.0;
    skip_ws();
    if (i < n && (text[i] == '+' || text[i] == '-')) {
      if (text[i] == '-') sign = -1.0;
      ++i;
    } else if (!first) {
      throw ConfigError("expected '+' or '-' between polynomial terms in '" + text + "'");
    }
    first = false;
    skip_ws();
    Term term;
    term.coeff = sign;
    term.exponents.assign(dim, 0);
    bool saw_factor = false;
    bool expect_factor = true;
    while (i < n && expect_factor) {
      skip_ws();
      if (i < n && (std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '.')) {
        char* end = nullptr;
        double value = std::strtod(text.c_str() + i, &end);
        if (end == text.c_str() + i) throw ConfigError("bad number in polynomial '" + text + "'");
        term.coeff *= value;
        i = static_cast<size_t>(end - text.c_str());
        saw_factor = true;
      } else if (i < n && text[i] == 'x') {
        ++i;
        size_t start = i;
        while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
        if (i == start) throw ConfigError("expected coordinate index after 'x' in '" + text + "'");
        int var = std::stoi(text.substr(start, i - start));
        if (var < 0 || var >= dim)
          throw ConfigError("coordinate x" + std::to_string(var) + " out of range in '" + text + "'");
        int power = 1;
        if (i < n && text[i] == '^') {
          ++i;
          size_t ps = i;
          while (i < n && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
          if (i == ps) throw ConfigError("expected exponent after '^' in '" + text + "'");
          power = std::stoi(text.substr(ps, i - ps));
        }
        term.exponents[var] += power;
        saw_factor = true;
      } else {
        throw ConfigError("unexpected character in polynomial '" + text + "'");
      }
      skip_ws();
      if (i < n && text[i] == '*') {
        ++i;
        expect_factor = true;
      } else {
        expect_factor = false;
      }
    }
    if (!saw_factor) throw ConfigError("empty term in polynomial '" + text + "'");
    terms.push_back(std::move(term));
    skip_ws();
  }
  return Polynomial(std::move(terms));
}

double Polynomial::eval(const Eigen::VectorXd& x) const {
  double total = 0.0;
  for (const Term& term : terms_) {
    double value = term.coeff;
    for (size_t v = 0; v < term.exponents.size(); ++v)
      for (int k = 0; k < term.exponents[v]; ++k) value *= x[static_cast<int>(v)];
    total += value;
  }
  return total;
}

Polynomial Polynomial::derivative(int var) const {
  std::vector<Term> out;
  for (const Term& term : terms_) {
    if (static_cast<size_t>(var) >= term.exponents.size() || term.exponents[var] == 0) continue;
    Term d = term;
    d.coeff *= term.exponents[var];
    d.exponents[var] -= 1;
    out.push_back(std::move(d));
  }
  return Polynomial(std::move(out));
}

// ---------------------------------------------------------------------------
// ConfigSection accessors

std::string ConfigSection::get_string(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw ConfigError("missing required key '" + key + "'");
  return it->second;
}

std::string ConfigSection::get_string_or(const std::string& key, const std::string& fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

double ConfigSection::get_double(const std::string& key) const {
  const std::string text = get_string(key);
  try {
    size_t used = 0;
    double value = std::stod(text, &used);
    if (trim(text.substr(used)).empty()) return value;
  } catch (const std::exception&) {
  }
  throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
}

double ConfigSection::get_double_or(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long ConfigSection::get_int(const std::string& key) const {
  const std::string text = get_string(key);
  try {
    size_t used = 0;
    long value = std::stol(text, &used);
    if (trim(text.substr(used)).empty()) return value;
  } catch (const std::exception&) {
  }
  throw ConfigError("key '" + key + "': expected an integer, got '" + text + "'");
}

long ConfigSection::get_int_or(const std::string& key, long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

Eigen::VectorXd ConfigSection::get_vector(const std::string& key) const {
  const std::string text = get_string(key);
  std::istringstream is(text);
  std::vector<double> parts;
  double value = 0.0;
  while (is >> value) parts.push_back(value);
  if (!is.eof())
    throw ConfigError("key '" + key + "': expected whitespace-separated numbers, got '" + text + "'");
  Eigen::VectorXd out(static_cast<int>(parts.size()));
  for (size_t k = 0; k < parts.size(); ++k) out[static_cast<int>(k)] = parts[k];
  return out;
}

const ConfigSection& ConfigFile::section(const std::string& name) const {
  auto it = sections.find(name);
  if (it == sections.end()) throw ConfigError("missing required section [" + name + "]");
  return it->second;
}

// ---------------------------------------------------------------------------
// File parsing

ConfigFile ConfigFile::parse_string(const std::string& text, const std::string& origin) {
  ConfigFile file;
  ConfigSection* current = &file.top;
  std::istringstream is(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string line = raw;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(origin, line_no, "unterminated section header '" + raw + "'");
      std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) fail(origin, line_no, "empty section name");
      current = &file.sections[name];
      continue;
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos) fail(origin, line_no, "expected 'key = value', got '" + raw + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(origin, line_no, "empty key");
    if (key.rfind("entry", 0) == 0) {
      std::istringstream ks(key.substr(5));
      int i = -1, j = -1;
      if (!(ks >> i >> j) || !(ks >> std::ws).eof() || i < 0 || j < 0)
        fail(origin, line_no, "matrix entries use 'entry <i> <j> = <polynomial>'");
      current->entries.emplace_back(i, j, value, line_no);
      continue;
    }
    if (current->values.count(key) > 0) fail(origin, line_no, "duplicate key '" + key + "'");
    current->values[key] = value;
    current->value_lines[key] = line_no;
  }
  return file;
}

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str(), path);
}

}  // namespace emaslov
