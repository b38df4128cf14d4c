#pragma once

#include "modeclust/assignment.hpp"
#include "modeclust/critical_point.hpp"
#include "modeclust/density.hpp"
#include "modeclust/theory_checks.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace modeclust {

/// Malformed input. The message carries the source name and line number.
class ParseError : public UsageError {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Flat `key = value` file. Blank lines and lines starting with '#' are
/// ignored; a repeated key is an error.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in, const std::string& source = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, const std::string& value);
  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

  /// Line where the key was defined (0 for keys set programmatically).
  std::size_t line_of(const std::string& key) const;

  /// Keys that were never read through a getter.
  std::vector<std::string> unused_keys() const;

 private:
  const std::string* find(const std::string& key) const;
  ParseError error(const std::string& key, const std::string& what) const;

  std::string source_;
  std::map<std::string, std::string> values_;
  std::map<std::string, std::size_t> lines_;
  mutable std::map<std::string, bool> used_;
};

/// Comma-separated numbers; whitespace around entries is ignored.
std::vector<double> parse_number_list(const std::string& text);

/// `logspace(a, b, k)` or a plain comma-separated list.
std::vector<double> parse_grid(const std::string& text);

std::vector<double> logspace(double lo, double hi, int count);

/// Mixture spec file: `dim`, `components`, then `weight_j`, `mean_j` (d
/// comma-separated numbers) and `cov_j` (d*d numbers, row-major) for j = 1..K.
GaussianMixture parse_mixture_spec(std::istream& in, const std::string& source = "<mixture>");
GaussianMixture load_mixture_spec(const std::filesystem::path& path);
void write_mixture_spec(std::ostream& out, const GaussianMixture& gm);

/// One point per line, comma-separated coordinates, no header. Throws
/// ParseError on an empty file, a non-numeric entry or a ragged row.
std::vector<Point> parse_dataset(std::istream& in, const std::string& source = "<data>");
std::vector<Point> load_dataset(const std::filesystem::path& path);
void write_dataset(std::ostream& out, std::span<const Point> points);

/// Round-trip-exact decimal text for a double ("nan" / "inf" spelled out).
std::string format_number(double v);
std::string format_optional(const std::optional<double>& v);

/// kind,morse_index,density,x1,...,xd
void write_critical_points(std::ostream& out, std::span<const CriticalPoint> points);

/// mode,density,x1,...,xd
void write_modes(std::ostream& out, const ModeSet& modes);

/// index,label,converged,flagged[,true_label]
void write_labels(std::ostream& out, const ClusterAssignment& estimate, const ClusterAssignment* truth = nullptr);

/// check,case,lhs,rhs,violation
void write_checks_header(std::ostream& out);
void write_checks(std::ostream& out, const BoundCheckResult& result);

}  // namespace modeclust
