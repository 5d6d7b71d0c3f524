#include "autm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "autm/error.hpp"

namespace autm {

void SplitFractions::validate() const {
  if (!(train > 0.0) || val < 0.0 || test < 0.0) throw ConfigError("split fractions must be >= 0 with train > 0");
  if (std::abs(train + val + test - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
}

std::string_view to_string(Toy toy) {
  switch (toy) {
    case Toy::TwoMoons: return "two_moons";
    case Toy::Rings: return "rings";
    case Toy::Checkerboard: return "checkerboard";
    case Toy::TwoGaussians: return "two_gaussians";
  }
  return "unknown";
}

Toy parse_toy(std::string_view name) {
  if (name == "two_moons" || name == "moons") return Toy::TwoMoons;
  if (name == "rings") return Toy::Rings;
  if (name == "checkerboard") return Toy::Checkerboard;
  if (name == "two_gaussians") return Toy::TwoGaussians;
  throw ConfigError("unknown toy dataset '" + std::string(name) + "'");
}

Matrix toy2d_rows(Toy toy, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ConfigError("dataset size must be >= 1");
  Matrix m(n, 2);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto coin = [&] { return unif(rng) < 0.5; };
  constexpr double pi = std::numbers::pi;

  for (std::size_t i = 0; i < n; ++i) {
    double x = 0.0, y = 0.0;
    switch (toy) {
      case Toy::TwoMoons: {
        const double t = pi * unif(rng);
        if (coin()) {
          x = std::cos(t);
          y = std::sin(t);
        } else {
          x = 1.0 - std::cos(t);
          y = 0.5 - std::sin(t);
        }
        x += 0.1 * normal(rng);
        y += 0.1 * normal(rng);
        break;
      }
      case Toy::Rings: {
        const double r = (coin() ? 1.0 : 2.0) + 0.1 * normal(rng);
        const double a = 2.0 * pi * unif(rng);
        x = r * std::cos(a);
        y = r * std::sin(a);
        break;
      }
      case Toy::Checkerboard: {
        x = 4.0 * unif(rng) - 2.0;
        y = unif(rng) - (coin() ? 2.0 : 0.0);
        const auto cell = static_cast<long>(std::floor(x));
        y += static_cast<double>(((cell % 2) + 2) % 2);
        break;
      }
      case Toy::TwoGaussians: {
        const double cx = coin() ? 2.0 : -2.0;
        x = cx + 0.5 * normal(rng);
        y = 0.5 * normal(rng);
        break;
      }
    }
    m(i, 0) = x;
    m(i, 1) = y;
  }
  return m;
}

namespace {

struct SplitSizes {
  std::size_t train, val, test;
};

SplitSizes split_sizes(std::size_t n, const SplitFractions& f) {
  auto round = [](double v) { return static_cast<std::size_t>(std::floor(v + 0.5)); };
  const std::size_t train = std::clamp<std::size_t>(round(f.train * static_cast<double>(n)), 1, n);
  const std::size_t val = std::min(n - train, round(f.val * static_cast<double>(n)));
  return {train, val, n - train - val};
}

Matrix take_rows(const Matrix& src, const std::vector<std::size_t>& order, std::size_t begin, std::size_t count) {
  Matrix m(count, src.cols);
  for (std::size_t r = 0; r < count; ++r) {
    const auto row = src.row(order[begin + r]);
    std::copy(row.begin(), row.end(), m.row(r).begin());
  }
  return m;
}

Dataset split(const Matrix& rows, const std::vector<std::size_t>& order, const SplitFractions& f) {
  const SplitSizes s = split_sizes(rows.rows, f);
  Dataset d;
  d.fractions = f;
  d.train = take_rows(rows, order, 0, s.train);
  d.val = take_rows(rows, order, s.train, s.val);
  d.test = take_rows(rows, order, s.train + s.val, s.test);
  return d;
}

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i-- > 1;) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(order[i], order[pick(rng)]);
  }
  return order;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_number(std::string_view field, double& out) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  if (field.empty()) return false;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc() && ptr == field.data() + field.size();
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

void standardize(Matrix& m, const std::vector<double>& mean, const std::vector<double>& sd) {
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) m(r, c) = (m(r, c) - mean[c]) / sd[c];
}

}  // namespace

Dataset toy2d(Toy toy, std::size_t n, std::uint64_t seed, const SplitFractions& fractions) {
  fractions.validate();
  const Matrix rows = toy2d_rows(toy, n, seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Dataset d = split(rows, order, fractions);
  d.name = std::string(to_string(toy));
  d.mean.assign(2, 0.0);
  d.std.assign(2, 1.0);
  return d;
}

Dataset parse_csv(std::string_view text, const SplitFractions& fractions, std::uint64_t seed, std::string name) {
  fractions.validate();
  std::vector<double> values;
  std::size_t cols = 0, rows = 0, line_no = 0;
  bool seen_first = false;

  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;

    const auto fields = split_fields(line);
    std::vector<double> parsed(fields.size());
    std::size_t bad = fields.size();
    for (std::size_t i = 0; i < fields.size() && bad == fields.size(); ++i)
      if (!parse_number(fields[i], parsed[i])) bad = i;

    if (!seen_first) {
      seen_first = true;
      cols = fields.size();
      if (bad != fields.size()) continue;  // header
    }
    if (fields.size() != cols)
      throw ParseError("expected " + std::to_string(cols) + " fields, found " + std::to_string(fields.size()), line_no);
    if (bad != fields.size())
      throw ParseError("field " + std::to_string(bad + 1) + " is not a number: '" + std::string(trim(fields[bad])) + "'",
                       line_no);
    for (std::size_t i = 0; i < cols; ++i)
      if (!std::isfinite(parsed[i])) throw ParseError("field " + std::to_string(i + 1) + " is not finite", line_no);
    values.insert(values.end(), parsed.begin(), parsed.end());
    ++rows;
  }
  if (rows == 0) throw ParseError("no data rows", line_no);

  Matrix all(rows, cols);
  all.data = std::move(values);
  Dataset d = split(all, shuffled(rows, seed), fractions);
  d.name = std::move(name);

  const auto n = static_cast<double>(d.train.rows);
  d.mean.assign(cols, 0.0);
  d.std.assign(cols, 0.0);
  for (std::size_t r = 0; r < d.train.rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) d.mean[c] += d.train(r, c);
  for (double& m : d.mean) m /= n;
  for (std::size_t r = 0; r < d.train.rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) d.std[c] += (d.train(r, c) - d.mean[c]) * (d.train(r, c) - d.mean[c]);
  for (std::size_t c = 0; c < cols; ++c) {
    d.std[c] = std::sqrt(d.std[c] / n);
    if (!(d.std[c] > 0.0))
      throw ConfigError("column " + std::to_string(c + 1) + " is constant on the train split; remove it");
  }
  standardize(d.train, d.mean, d.std);
  standardize(d.val, d.mean, d.std);
  standardize(d.test, d.mean, d.std);
  return d;
}

Dataset load_csv(const std::filesystem::path& path, const SplitFractions& fractions, std::uint64_t seed) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  if (text.empty()) throw ParseError(path.string() + " is empty", 0);
  return parse_csv(text, fractions, seed, path.stem().string());
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m, const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) out << (c ? "," : "") << format_double(m(r, c));
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace autm
