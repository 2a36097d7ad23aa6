#include "nol/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "nol/errors.hpp"

namespace nol {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::optional<std::size_t> parse_index(std::string_view s) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  for (auto& c : cells) {
    c = trim(c);
    if (c.size() >= 2 && c.front() == '"' && c.back() == '"') c = c.substr(1, c.size() - 2);
  }
  return cells;
}

bool is_missing(std::string_view cell) { return cell.empty() || cell == "?"; }

}  // namespace

std::string_view to_string(Task task) {
  switch (task) {
    case Task::binary: return "binary";
    case Task::multiclass: return "multiclass";
    case Task::regression: return "regression";
  }
  return "?";
}

Task parse_task(std::string_view name) {
  if (name == "binary") return Task::binary;
  if (name == "multiclass") return Task::multiclass;
  if (name == "regression") return Task::regression;
  throw std::invalid_argument("unknown task '" + std::string(name) + "'");
}

SparseExample parse_svmlight_line(std::string_view line, std::size_t line_number) {
  if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  line = trim(line);
  if (line.empty()) throw ParseError("empty line", line_number);

  std::vector<std::string_view> tokens;
  std::size_t pos = 0;
  while (pos < line.size()) {
    const auto start = line.find_first_not_of(" \t", pos);
    if (start == std::string_view::npos) break;
    const auto end = line.find_first_of(" \t", start);
    tokens.push_back(line.substr(start, end == std::string_view::npos ? end : end - start));
    pos = end == std::string_view::npos ? line.size() : end;
  }

  const auto label = parse_double(tokens.front());
  if (!label || !std::isfinite(*label))
    throw ParseError("malformed label '" + std::string(tokens.front()) + "'", line_number);

  std::vector<Feature> features;
  features.reserve(tokens.size() - 1);
  for (std::size_t k = 1; k < tokens.size(); ++k) {
    const std::string_view tok = tokens[k];
    const auto colon = tok.find(':');
    if (colon == std::string_view::npos)
      throw ParseError("malformed token '" + std::string(tok) + "'", line_number);
    const auto index = parse_index(tok.substr(0, colon));
    const auto value = parse_double(tok.substr(colon + 1));
    if (!index || !value)
      throw ParseError("malformed token '" + std::string(tok) + "'", line_number);
    if (!std::isfinite(*value))
      throw ParseError("non-finite value in token '" + std::string(tok) + "'", line_number);
    if (!features.empty() && *index <= features.back().index)
      throw ParseError("duplicate or decreasing index " + std::to_string(*index), line_number);
    features.push_back({*index, *value});
  }
  return SparseExample(std::move(features), *label);
}

std::string to_svmlight_line(const SparseExample& example) {
  std::string out = format_double(example.label());
  for (const Feature& f : example.features()) {
    out += ' ';
    out += std::to_string(f.index);
    out += ':';
    out += format_double(f.value);
  }
  return out;
}

Dataset read_svmlight(std::istream& in) {
  Dataset data;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    if (trim(view).empty()) continue;
    data.push_back(parse_svmlight_line(line, line_number));
  }
  return data;
}

void write_svmlight(std::ostream& out, std::span<const SparseExample> data) {
  for (const auto& ex : data) out << to_svmlight_line(ex) << '\n';
}

DelimitedDataset read_delimited(std::istream& in, const DelimitedOptions& options) {
  std::string header_line;
  if (!std::getline(in, header_line)) throw DataError("delimited input has no header row");
  char delimiter = options.delimiter;
  if (delimiter == 0) delimiter = header_line.find('\t') != std::string::npos ? '\t' : ',';

  std::vector<std::string> header;
  for (auto cell : split(header_line, delimiter)) header.emplace_back(cell);
  const std::size_t columns = header.size();

  std::size_t label_col = columns - 1;
  if (options.label_column) {
    const auto it = std::find(header.begin(), header.end(), *options.label_column);
    if (it == header.end()) throw DataError("label column '" + *options.label_column + "' not found");
    label_col = static_cast<std::size_t>(it - header.begin());
  }

  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;
  std::string line;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    const auto cells = split(line, delimiter);
    if (cells.size() != columns)
      throw ParseError("expected " + std::to_string(columns) + " columns, got " +
                           std::to_string(cells.size()),
                       line_number);
    rows.emplace_back(cells.begin(), cells.end());
    row_lines.push_back(line_number);
  }

  std::vector<bool> categorical(columns, false);
  for (const auto& row : rows)
    for (std::size_t c = 0; c < columns; ++c)
      if (!categorical[c] && !is_missing(row[c]) && !parse_double(row[c])) categorical[c] = true;

  DelimitedDataset result;
  std::vector<std::size_t> numeric_index(columns, 0);
  for (std::size_t c = 0; c < columns; ++c) {
    if (c == label_col || categorical[c]) continue;
    numeric_index[c] = result.feature_names.size();
    result.feature_names.push_back(header[c]);
  }

  // Non-numeric labels become class ids in sorted order of their values.
  std::map<std::string, double> label_ids;
  if (categorical[label_col]) {
    std::set<std::string> distinct;
    for (const auto& row : rows) distinct.insert(row[label_col]);
    double id = 0.0;
    for (const auto& v : distinct) label_ids[v] = id++;
  }

  std::map<std::string, std::size_t> onehot;
  result.examples.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (is_missing(row[label_col])) throw ParseError("missing label", row_lines[r]);
    const double label = categorical[label_col] ? label_ids.at(row[label_col])
                                                : *parse_double(row[label_col]);
    std::vector<Feature> features;
    for (std::size_t c = 0; c < columns; ++c) {
      if (c == label_col || is_missing(row[c])) continue;
      if (!categorical[c]) {
        const double v = *parse_double(row[c]);
        if (!std::isfinite(v)) throw ParseError("non-finite value in column " + header[c], row_lines[r]);
        features.push_back({numeric_index[c], v});
        continue;
      }
      const std::string key = header[c] + "=" + row[c];
      auto it = onehot.find(key);
      if (it == onehot.end()) {
        it = onehot.emplace(key, result.feature_names.size()).first;
        result.feature_names.push_back(key);
      }
      features.push_back({it->second, 1.0});
    }
    std::sort(features.begin(), features.end(),
              [](const Feature& a, const Feature& b) { return a.index < b.index; });
    result.examples.emplace_back(std::move(features), label);
  }
  return result;
}

Dataset zero_one_to_signed(std::span<const SparseExample> data) {
  Dataset out;
  out.reserve(data.size());
  for (const auto& ex : data) {
    if (ex.label() != 0.0 && ex.label() != 1.0)
      throw DataError("expected labels in {0, 1}, got " + std::to_string(ex.label()));
    out.push_back(ex.with_label(ex.label() == 1.0 ? 1.0 : -1.0));
  }
  return out;
}

std::string_view to_string(NormalizeMode mode) {
  switch (mode) {
    case NormalizeMode::none: return "none";
    case NormalizeMode::maxnorm: return "maxnorm";
    case NormalizeMode::sqnorm: return "sqnorm";
  }
  return "?";
}

NormalizeMode parse_normalize_mode(std::string_view name) {
  if (name == "none") return NormalizeMode::none;
  if (name == "maxnorm") return NormalizeMode::maxnorm;
  if (name == "sqnorm") return NormalizeMode::sqnorm;
  throw std::invalid_argument("unknown normalization '" + std::string(name) + "'");
}

NormalizerStats NormalizerStats::compute(std::span<const SparseExample> data, NormalizeMode mode) {
  NormalizerStats stats;
  stats.mode = mode;
  stats.divisor.assign(dimension_of(data), 0.0);
  if (mode == NormalizeMode::none) return stats;
  for (const auto& ex : data)
    for (const Feature& f : ex.features()) {
      double& d = stats.divisor[f.index];
      d = mode == NormalizeMode::maxnorm ? std::max(d, std::abs(f.value)) : d + f.value * f.value;
    }
  if (mode == NormalizeMode::sqnorm && !data.empty())
    for (double& d : stats.divisor) d = std::sqrt(d / static_cast<double>(data.size()));
  return stats;
}

SparseExample NormalizerStats::apply(const SparseExample& example) const {
  if (mode == NormalizeMode::none) return example;
  std::vector<Feature> features(example.features().begin(), example.features().end());
  for (Feature& f : features) {
    const double d = f.index < divisor.size() ? divisor[f.index] : 0.0;
    if (d > 0.0) f.value /= d;
  }
  return SparseExample(std::move(features), example.label());
}

Dataset NormalizerStats::apply(std::span<const SparseExample> data) const {
  Dataset out;
  out.reserve(data.size());
  for (const auto& ex : data) out.push_back(apply(ex));
  return out;
}

Prenormalized prenormalize(std::span<const SparseExample> data, NormalizeMode mode) {
  Prenormalized result;
  result.stats = NormalizerStats::compute(data, mode);
  result.data = result.stats.apply(data);
  return result;
}

double regression_loss_scale(std::span<const SparseExample> data) {
  if (data.empty()) throw DataError("no labels");
  double lo = data.front().label();
  double hi = lo;
  for (const auto& ex : data) {
    lo = std::min(lo, ex.label());
    hi = std::max(hi, ex.label());
  }
  if (hi == lo) throw DataError("regression loss scale undefined for constant labels");
  return (hi - lo) * (hi - lo);
}

Dataset apply_scaling(std::span<const SparseExample> data, std::span<const double> scale) {
  for (double d : scale)
    if (!(d > 0.0) || !std::isfinite(d)) throw std::invalid_argument("scaling must be positive");
  Dataset out;
  out.reserve(data.size());
  for (const auto& ex : data) {
    std::vector<Feature> features(ex.features().begin(), ex.features().end());
    for (Feature& f : features)
      if (f.index < scale.size()) f.value *= scale[f.index];
    out.emplace_back(std::move(features), ex.label());
  }
  return out;
}

Dataset synth_figure1(double s, std::size_t count, std::uint64_t seed) {
  if (!(s > 0.0) || !std::isfinite(s)) throw std::invalid_argument("figure1 scale must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Dataset data;
  data.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    const double x0 = unif(rng);
    const double x1 = unif(rng);
    const double y = x0 + x1 >= 0.0 ? 1.0 : -1.0;
    data.emplace_back(std::vector<Feature>{{0, x0 * s}, {1, x1}}, y);
  }
  return data;
}

Dataset synth_linear(const LinearSynthSpec& spec) {
  if (spec.dimension == 0) throw std::invalid_argument("dimension must be positive");
  if (spec.task == Task::multiclass) throw std::invalid_argument("linear generator is binary or regression");
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const std::size_t d = spec.dimension;
  std::vector<double> magnitude(d);
  std::vector<double> w_true(d);
  for (std::size_t i = 0; i < d; ++i) {
    const double frac = d == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(d - 1);
    magnitude[i] = std::pow(10.0, spec.min_log10_scale + frac * (spec.max_log10_scale - spec.min_log10_scale));
    w_true[i] = normal(rng);
  }

  Dataset data;
  data.reserve(spec.count);
  for (std::size_t t = 0; t < spec.count; ++t) {
    std::vector<Feature> features;
    double signal = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double z = normal(rng);
      const bool present = unif(rng) < spec.density;
      if (!present) continue;
      signal += w_true[i] * z;
      features.push_back({i, z * magnitude[i]});
    }
    const double noisy = signal + spec.noise * normal(rng);
    const double y = spec.task == Task::regression ? noisy : (noisy >= 0.0 ? 1.0 : -1.0);
    data.emplace_back(std::move(features), y);
  }
  return data;
}

Dataset synth_from_spec(std::string_view spec, std::uint64_t seed) {
  const auto colon = spec.find(':');
  const std::string_view name = spec.substr(0, colon);
  std::unordered_map<std::string, std::string> params;
  if (colon != std::string_view::npos) {
    for (auto kv : split(spec.substr(colon + 1), ',')) {
      if (kv.empty()) continue;
      const auto eq = kv.find('=');
      if (eq == std::string_view::npos)
        throw std::invalid_argument("malformed generator parameter '" + std::string(kv) + "'");
      params[std::string(kv.substr(0, eq))] = std::string(kv.substr(eq + 1));
    }
  }
  auto take = [&](const std::string& key, double fallback) {
    const auto it = params.find(key);
    if (it == params.end()) return fallback;
    const auto v = parse_double(it->second);
    if (!v) throw std::invalid_argument("malformed value for '" + key + "'");
    params.erase(it);
    return *v;
  };
  auto finish = [&] {
    if (!params.empty())
      throw std::invalid_argument("unknown generator parameter '" + params.begin()->first + "'");
  };

  if (name == "figure1") {
    const double s = take("s", 1.0);
    const auto count = static_cast<std::size_t>(take("T", 1000.0));
    finish();
    return synth_figure1(s, count, seed);
  }
  if (name == "linear") {
    LinearSynthSpec ls;
    ls.dimension = static_cast<std::size_t>(take("d", 5.0));
    ls.count = static_cast<std::size_t>(take("T", 1000.0));
    ls.min_log10_scale = take("lo", 0.0);
    ls.max_log10_scale = take("hi", 0.0);
    ls.noise = take("noise", 0.1);
    ls.density = take("density", 1.0);
    if (const auto it = params.find("task"); it != params.end()) {
      ls.task = parse_task(it->second);
      params.erase(it);
    }
    ls.seed = seed;
    finish();
    return synth_linear(ls);
  }
  throw std::invalid_argument("unknown generator '" + std::string(name) + "'");
}

std::string content_digest(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace nol
