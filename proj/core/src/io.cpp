#include "modeclust/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace modeclust {

ParseError::ParseError(const std::string& source, std::size_t line, const std::string& what)
    : UsageError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::optional<double> to_double(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = t.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size()) return std::nullopt;
  return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) parts.emplace_back();
  return parts;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  return in;
}

}  // namespace

// ---------------------------------------------------------------------------

KeyValueConfig KeyValueConfig::parse(std::istream& in, const std::string& source) {
  KeyValueConfig cfg;
  cfg.source_ = source;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(source, lineno, "expected 'key = value'");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ParseError(source, lineno, "empty key");
    if (cfg.values_.count(key)) throw ParseError(source, lineno, "duplicate key '" + key + "'");
    cfg.values_[key] = value;
    cfg.lines_[key] = lineno;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse(in, path.string());
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  values_[trim(key)] = trim(value);
  lines_[trim(key)] = 0;
}

const std::string* KeyValueConfig::find(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  used_[key] = true;
  return &it->second;
}

ParseError KeyValueConfig::error(const std::string& key, const std::string& what) const {
  const auto it = lines_.find(key);
  return ParseError(source_.empty() ? "<config>" : source_, it == lines_.end() ? 0 : it->second,
                    key + ": " + what);
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  const std::string* v = find(key);
  return v ? *v : fallback;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const std::string* v = find(key);
  if (!v) return fallback;
  const auto d = to_double(*v);
  if (!d) throw error(key, "expected a number, got '" + *v + "'");
  return *d;
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
  const std::string* v = find(key);
  if (!v) return fallback;
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) throw error(key, "expected an integer, got '" + *v + "'");
  return out;
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  const std::string* v = find(key);
  if (!v) return fallback;
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
  if (ec != std::errc() || ptr != v->data() + v->size()) {
    throw error(key, "expected an unsigned integer, got '" + *v + "'");
  }
  return out;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const std::string* v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw error(key, "expected true or false, got '" + *v + "'");
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
  const std::string* v = find(key);
  if (!v) return fallback;
  try {
    return parse_grid(*v);
  } catch (const UsageError& e) {
    throw error(key, e.what());
  }
}

std::size_t KeyValueConfig::line_of(const std::string& key) const {
  const auto it = lines_.find(key);
  return it == lines_.end() ? 0 : it->second;
}

std::vector<std::string> KeyValueConfig::unused_keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) {
    if (!used_.count(k)) out.push_back(k);
  }
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  for (const std::string& part : split(text, ',')) {
    const auto v = to_double(part);
    if (!v) throw UsageError("not a number: '" + part + "'");
    out.push_back(*v);
  }
  if (out.empty()) throw UsageError("empty number list");
  return out;
}

std::vector<double> logspace(double lo, double hi, int count) {
  require(lo > 0.0 && hi > 0.0 && count >= 1, "logspace: need positive bounds and count >= 1");
  std::vector<double> out;
  if (count == 1) return {lo};
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < count; ++i) out.push_back(std::exp(a + (b - a) * i / (count - 1)));
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::vector<double> parse_grid(const std::string& text) {
  const std::string t = trim(text);
  if (t.rfind("logspace(", 0) == 0) {
    if (t.back() != ')') throw UsageError("unterminated logspace(...)");
    const auto args = parse_number_list(t.substr(9, t.size() - 10));
    if (args.size() != 3 || args[2] != std::floor(args[2])) {
      throw UsageError("logspace expects (low, high, count)");
    }
    return logspace(args[0], args[1], static_cast<int>(args[2]));
  }
  return parse_number_list(t);
}

// ---------------------------------------------------------------------------

GaussianMixture parse_mixture_spec(std::istream& in, const std::string& source) {
  const KeyValueConfig kv = KeyValueConfig::parse(in, source);
  const long long d = kv.get_int("dim", 0);
  const long long k = kv.get_int("components", 0);
  if (d < 1) throw ParseError(source, kv.line_of("dim"), "dim must be a positive integer");
  if (k < 1) throw ParseError(source, kv.line_of("components"), "components must be a positive integer");

  std::vector<double> weights;
  std::vector<Vector> means;
  std::vector<Matrix> covs;
  auto numbers = [&](const std::string& key, std::size_t expected) {
    if (!kv.has(key)) throw ParseError(source, 0, "missing key '" + key + "'");
    std::vector<double> v;
    try {
      v = parse_number_list(kv.get_string(key, ""));
    } catch (const UsageError& e) {
      throw ParseError(source, kv.line_of(key), key + ": " + e.what());
    }
    if (v.size() != expected) {
      throw ParseError(source, kv.line_of(key), key + ": expected " + std::to_string(expected) + " numbers, got " +
                                      std::to_string(v.size()));
    }
    return v;
  };
  const auto dd = static_cast<std::size_t>(d);
  for (long long j = 1; j <= k; ++j) {
    const std::string s = std::to_string(j);
    weights.push_back(numbers("weight_" + s, 1)[0]);
    const auto m = numbers("mean_" + s, dd);
    means.push_back(Eigen::Map<const Vector>(m.data(), d));
    const auto c = numbers("cov_" + s, dd * dd);
    covs.push_back(Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        c.data(), d, d));
  }
  for (const std::string& key : kv.unused_keys()) {
    throw ParseError(source, kv.line_of(key), "unknown key '" + key + "'");
  }
  try {
    return GaussianMixture(std::move(weights), std::move(means), std::move(covs));
  } catch (const UsageError& e) {
    throw ParseError(source, 0, e.what());
  }
}

GaussianMixture load_mixture_spec(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_mixture_spec(in, path.string());
}

void write_mixture_spec(std::ostream& out, const GaussianMixture& gm) {
  out << "dim = " << gm.dim() << "\n";
  out << "components = " << gm.num_components() << "\n";
  for (std::size_t j = 0; j < gm.num_components(); ++j) {
    const GaussianComponent& c = gm.component(j);
    const std::string s = std::to_string(j + 1);
    out << "weight_" << s << " = " << format_number(c.weight) << "\n";
    out << "mean_" << s << " = ";
    for (Eigen::Index i = 0; i < c.mean.size(); ++i) out << (i ? ", " : "") << format_number(c.mean[i]);
    out << "\ncov_" << s << " = ";
    for (Eigen::Index r = 0; r < c.covariance.rows(); ++r) {
      for (Eigen::Index q = 0; q < c.covariance.cols(); ++q) {
        out << (r || q ? ", " : "") << format_number(c.covariance(r, q));
      }
    }
    out << "\n";
  }
}

std::vector<Point> parse_dataset(std::istream& in, const std::string& source) {
  std::vector<Point> points;
  std::string line;
  std::size_t lineno = 0;
  Eigen::Index dim = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto parts = split(trim(line), ',');
    Point x(static_cast<Eigen::Index>(parts.size()));
    for (std::size_t i = 0; i < parts.size(); ++i) {
      const auto v = to_double(parts[i]);
      if (!v) throw ParseError(source, lineno, "not a number: '" + parts[i] + "'");
      if (!std::isfinite(*v)) throw ParseError(source, lineno, "non-finite coordinate");
      x[static_cast<Eigen::Index>(i)] = *v;
    }
    if (dim == 0) dim = x.size();
    if (x.size() != dim) {
      throw ParseError(source, lineno,
                       "expected " + std::to_string(dim) + " coordinates, got " + std::to_string(x.size()));
    }
    points.push_back(std::move(x));
  }
  if (points.empty()) throw ParseError(source, lineno, "dataset is empty");
  return points;
}

std::vector<Point> load_dataset(const std::filesystem::path& path) {
  auto in = open_input(path);
  return parse_dataset(in, path.string());
}

void write_dataset(std::ostream& out, std::span<const Point> points) {
  for (const Point& x : points) {
    for (Eigen::Index i = 0; i < x.size(); ++i) out << (i ? "," : "") << format_number(x[i]);
    out << "\n";
  }
}

// ---------------------------------------------------------------------------

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : "NA"; }

void write_critical_points(std::ostream& out, std::span<const CriticalPoint> points) {
  if (points.empty()) return;
  out << "kind,morse_index,density";
  for (Eigen::Index i = 0; i < points.front().location.size(); ++i) out << ",x" << i + 1;
  out << "\n";
  for (const CriticalPoint& c : points) {
    out << to_string(c.kind()) << "," << c.morse_index << "," << format_number(c.value);
    for (Eigen::Index i = 0; i < c.location.size(); ++i) out << "," << format_number(c.location[i]);
    out << "\n";
  }
}

void write_modes(std::ostream& out, const ModeSet& modes) {
  out << "mode,density";
  const Eigen::Index d = modes.modes.empty() ? 0 : modes.modes.front().size();
  for (Eigen::Index i = 0; i < d; ++i) out << ",x" << i + 1;
  out << "\n";
  for (std::size_t m = 0; m < modes.size(); ++m) {
    out << m << "," << format_number(modes.densities[m]);
    for (Eigen::Index i = 0; i < d; ++i) out << "," << format_number(modes.modes[m][i]);
    out << "\n";
  }
}

void write_labels(std::ostream& out, const ClusterAssignment& estimate, const ClusterAssignment* truth) {
  out << "index,label,converged,flagged" << (truth ? ",true_label,true_flagged" : "") << "\n";
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    out << i << "," << estimate.labels[i] << "," << (estimate.converged[i] ? 1 : 0) << ","
        << (estimate.flagged[i] ? 1 : 0);
    if (truth) out << "," << truth->labels[i] << "," << (truth->flagged[i] ? 1 : 0);
    out << "\n";
  }
}

void write_checks_header(std::ostream& out) { out << "check,case,lhs,rhs,violation\n"; }

void write_checks(std::ostream& out, const BoundCheckResult& result) {
  if (result.details.empty()) {
    out << result.name << "," << to_string(result.status) << ",NA,NA,"
        << (result.status == CheckStatus::violated ? 1 : 0) << "\n";
    return;
  }
  for (const BoundCase& c : result.details) {
    out << result.name << "," << c.case_id << "," << format_number(c.lhs) << "," << format_number(c.rhs) << ","
        << (c.violation ? 1 : 0) << "\n";
  }
}

}  // namespace modeclust
