// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "emaslov/errors.hpp"

namespace emaslov {

/// A polynomial in chart coordinates x0..x{n-1}, stored as a term list.
class Polynomial {
 public:
  struct Term {
    double coeff = 0.0;
    std::vector<int> exponents;  // exponents[i] = power of x_i
  };

  Polynomial() = default;
  explicit Polynomial(std::vector<Term> terms) : terms_(std::move(terms)) {}

  /// Parse expressions like "1.5", "x0", "-2*x0^2*x1 + 3".
  static Polynomial parse(const std::string& text, int dim);

  double eval(const Eigen::VectorXd& x) const;
  Polynomial derivative(int var) const;
  bool empty() const { return terms_.empty(); }
  const std::vector<Term>& terms() const { return terms_; }

 private:
  std::vector<Term> terms_;
};

/// One parsed "[section]" of a config file: flat key -> value strings,
/// plus polynomial matrix entries from "entry i j = <poly>" lines.
struct ConfigSection {
  std::map<std::string, std::string> values;
  std::map<std::string, int> value_lines;
  std::vector<std::tuple<int, int, std::string, int>> entries;  // i, j, text, line

  bool has(const std::string& key) const { return values.count(key) > 0; }
  std::string get_string(const std::string& key) const;
  std::string get_string_or(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double_or(const std::string& key, double fallback) const;
  long get_int(const std::string& key) const;
  long get_int_or(const std::string& key, long fallback) const;
  Eigen::VectorXd get_vector(const std::string& key) const;
};

/// Whole config file: a top-level section plus named sections.
struct ConfigFile {
  ConfigSection top;
  std::map<std::string, ConfigSection> sections;

  const ConfigSection& section(const std::string& name) const;
  bool has_section(const std::string& name) const { return sections.count(name) > 0; }

  static ConfigFile parse_string(const std::string& text, const std::string& origin = "<string>");
  static ConfigFile parse_file(const std::string& path);
};

}  // namespace emaslov
