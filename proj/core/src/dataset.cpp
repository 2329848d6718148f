#include "kgraph/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace kgraph {

namespace {

constexpr char kMagic[4] = {'K', 'G', 'D', '1'};

void check_finite(const std::vector<double>& coords) {
  for (double v : coords) {
    if (!std::isfinite(v)) throw data_error("dataset: non-finite coordinate");
  }
}

}  // namespace

Dataset::Dataset(std::vector<double> coords, std::size_t n, std::size_t d)
    : coords_(std::move(coords)), n_(n), d_(d) {
  if (n_ == 0 || d_ == 0) throw input_error("dataset: n and d must be positive");
  if (coords_.size() != n_ * d_)
    throw input_error("dataset: coordinate buffer size does not match n*d");
  check_finite(coords_);
}

Dataset Dataset::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw input_error("dataset: no rows");
  std::size_t d = rows.front().size();
  std::vector<double> coords;
  coords.reserve(rows.size() * d);
  for (const auto& row : rows) {
    if (row.size() != d) throw data_error("dataset: ragged rows");
    coords.insert(coords.end(), row.begin(), row.end());
  }
  return Dataset(std::move(coords), rows.size(), d);
}

namespace {

double parse_field(std::string_view field, std::size_t line_no) {
  std::size_t b = 0;
  std::size_t e = field.size();
  while (b < e && (field[b] == ' ' || field[b] == '\t')) ++b;
  while (e > b && (field[e - 1] == ' ' || field[e - 1] == '\t' ||
                   field[e - 1] == '\r'))
    --e;
  if (b == e)
    throw data_error("csv parse error: empty field on line " +
                     std::to_string(line_no));
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data() + b, field.data() + e, value);
  if (ec != std::errc() || ptr != field.data() + e)
    throw data_error("csv parse error: bad number '" +
                     std::string(field.substr(b, e - b)) + "' on line " +
                     std::to_string(line_no));
  return value;
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path.string());
  std::vector<double> coords;
  std::size_t n = 0;
  std::size_t d = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // skip blank lines (common at end of file)
    bool blank = true;
    for (char c : line)
      if (c != ' ' && c != '\t' && c != '\r') blank = false;
    if (blank) continue;
    std::size_t fields = 0;
    std::size_t start = 0;
    std::string_view view(line);
    while (true) {
      std::size_t comma = view.find(',', start);
      std::string_view field = comma == std::string_view::npos
                                   ? view.substr(start)
                                   : view.substr(start, comma - start);
      coords.push_back(parse_field(field, line_no));
      ++fields;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (n == 0) {
      d = fields;
    } else if (fields != d) {
      throw data_error("csv parse error: row " + std::to_string(line_no) +
                       " has " + std::to_string(fields) + " fields, expected " +
                       std::to_string(d));
    }
    ++n;
  }
  if (n == 0) throw data_error("csv parse error: no data rows in " + path.string());
  return Dataset(std::move(coords), n, d);
}

Dataset load_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw data_error("binary parse error: bad magic in " + path.string());
  std::uint64_t n = 0;
  std::uint64_t d = 0;
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&d), 8);
  if (!in) throw data_error("binary parse error: truncated header");
  if (n == 0 || d == 0) throw data_error("binary parse error: zero dimension");
  if (n > (1ull << 32) || d > (1ull << 24))
    throw data_error("binary parse error: implausible header");
  std::vector<double> coords(static_cast<std::size_t>(n * d));
  in.read(reinterpret_cast<char*>(coords.data()),
          static_cast<std::streamsize>(coords.size() * sizeof(double)));
  if (!in) throw data_error("binary parse error: truncated payload");
  return Dataset(std::move(coords), static_cast<std::size_t>(n),
                 static_cast<std::size_t>(d));
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path, DataFormat format) {
  switch (format) {
    case DataFormat::csv:
      return load_csv(path);
    case DataFormat::binary_f64:
      return load_binary(path);
  }
  throw input_error("load_dataset: unknown format");
}

void save_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw data_error("cannot write " + path.string());
  out.precision(17);
  for (std::size_t i = 0; i < data.n(); ++i) {
    auto p = data.point(i);
    for (std::size_t j = 0; j < p.size(); ++j) {
      if (j) out << ',';
      out << p[j];
    }
    out << '\n';
  }
}

void save_dataset_binary(const Dataset& data,
                         const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path.string());
  out.write(kMagic, 4);
  std::uint64_t n = data.n();
  std::uint64_t d = data.dim();
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(&d), 8);
  out.write(reinterpret_cast<const char*>(data.coords().data()),
            static_cast<std::streamsize>(data.coords().size() * sizeof(double)));
}

Dataset scale_dataset(const Dataset& data, double c) {
  if (!(c > 0.0) || !std::isfinite(c))
    throw input_error("scale_dataset: scale must be positive and finite");
  std::vector<double> coords = data.coords();
  for (double& v : coords) v *= c;
  return Dataset(std::move(coords), data.n(), data.dim());
}

}  // namespace kgraph
