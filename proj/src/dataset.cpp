#include "pkd/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "pkd/random.hpp"

namespace pkd {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char l, char r) {
           return std::tolower(static_cast<unsigned char>(l)) == std::tolower(static_cast<unsigned char>(r));
         });
}

// Comma-delimited with optional double-quoted fields ("" escapes a quote).
std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.emplace_back(trim(current));
  return fields;
}

std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) return std::nullopt;
  return value;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

void Dataset::validate() const {
  if (static_cast<Index>(ids.size()) != x.rows() || y.size() != x.rows()) {
    throw Error(Errc::DimensionMismatch, "row count differs between ids, matrix and labels");
  }
  if (static_cast<Index>(feature_names.size()) != x.cols()) {
    throw Error(Errc::DimensionMismatch, "feature name count differs from matrix columns");
  }
  if (!x.allFinite()) throw Error(Errc::ParseError, "matrix contains non-finite values");
  for (Index i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) throw Error(Errc::ParseError, "label must be 0 or 1 at row " + ids[i]);
  }
}

Dataset Dataset::subset(std::span<const Index> rows) const {
  Dataset out;
  out.feature_names = feature_names;
  out.x.resize(static_cast<Index>(rows.size()), d());
  out.y.resize(static_cast<Index>(rows.size()));
  out.ids.reserve(rows.size());
  for (Index r = 0; r < static_cast<Index>(rows.size()); ++r) {
    out.x.row(r) = x.row(rows[r]);
    out.y[r] = y[rows[r]];
    out.ids.push_back(ids[rows[r]]);
  }
  return out;
}

Index Dataset::count_label(int label) const { return (y.array() == label).count(); }

LoadedDataset read_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::EmptyDataset, "missing header row");
  const std::vector<std::string> header = split_record(line);

  const auto find_column = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  const auto label_col = find_column(schema.label_column);
  if (!label_col && schema.require_label) throw Error(Errc::MissingColumn, "label column '" + schema.label_column + "' not in header");
  std::optional<std::size_t> id_col;
  if (schema.id_column) {
    id_col = find_column(*schema.id_column);
    if (!id_col) throw Error(Errc::MissingColumn, "id column '" + *schema.id_column + "' not in header");
  }

  std::vector<std::size_t> feature_cols;
  Dataset data;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if ((label_col && c == *label_col) || (id_col && c == *id_col)) continue;
    feature_cols.push_back(c);
    data.feature_names.push_back(header[c]);
  }

  const auto is_missing = [&](std::string_view cell) {
    return std::any_of(schema.missing_tokens.begin(), schema.missing_tokens.end(),
                       [&](const std::string& token) { return iequals(trim(cell), token); });
  };

  std::vector<double> values;
  std::vector<int> labels;
  LoadedDataset result;
  std::size_t row_number = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row_number;
    const std::vector<std::string> cells = split_record(line);
    if (cells.size() != header.size()) {
      throw Error(Errc::ParseError, "row " + std::to_string(row_number) + ": expected " +
                                        std::to_string(header.size()) + " fields, got " +
                                        std::to_string(cells.size()));
    }
    bool missing = label_col && is_missing(cells[*label_col]);
    for (std::size_t c : feature_cols) missing = missing || is_missing(cells[c]);
    if (missing) {
      ++result.dropped_rows;
      continue;
    }
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      const auto value = parse_double(cells[feature_cols[k]]);
      if (!value) {
        throw Error(Errc::ParseError, "row " + std::to_string(row_number) + ", column " +
                                          data.feature_names[k] + ": '" + cells[feature_cols[k]] +
                                          "' is not a number");
      }
      values.push_back(*value);
    }
    const auto label = label_col ? parse_double(cells[*label_col]) : std::optional<double>(0.0);
    if (!label || (*label != 0.0 && *label != 1.0)) {
      throw Error(Errc::ParseError, "row " + std::to_string(row_number) + ", column " +
                                        schema.label_column + ": label must be 0 or 1");
    }
    labels.push_back(static_cast<int>(*label));
    data.ids.push_back(id_col ? cells[*id_col] : "row" + std::to_string(row_number));
  }
  result.raw_rows = row_number;
  if (labels.empty()) throw Error(Errc::EmptyDataset, "no rows survived missing-value filtering");

  const auto n = static_cast<Index>(labels.size());
  const auto d = static_cast<Index>(feature_cols.size());
  data.x = Eigen::Map<const Matrix>(values.data(), n, d);
  data.y = Eigen::Map<const Labels>(labels.data(), n);
  result.data = std::move(data);
  return result;
}

LoadedDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return read_csv(in, schema);
}

void write_csv(std::ostream& out, const Dataset& data, const std::string& id_column,
               const std::string& label_column) {
  out << csv_field(id_column);
  for (const auto& name : data.feature_names) out << ',' << csv_field(name);
  out << ',' << csv_field(label_column) << '\n';
  out << std::setprecision(17);
  for (Index i = 0; i < data.n(); ++i) {
    out << csv_field(data.ids[i]);
    for (Index j = 0; j < data.d(); ++j) out << ',' << data.x(i, j);
    out << ',' << data.y[i] << '\n';
  }
}

void save_csv(const std::filesystem::path& path, const Dataset& data, const std::string& id_column,
              const std::string& label_column) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  write_csv(out, data, id_column, label_column);
  if (!out) throw Error(Errc::IoError, "write failed for " + path.string());
}

SplitResult split(const Dataset& data, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(Errc::InvalidFraction, "test fraction must lie in (0, 1)");
  }
  Rng rng(seed);
  SplitResult result;
  result.seed = seed;
  result.test_fraction = test_fraction;
  for (int label : {0, 1}) {
    std::vector<Index> members;
    for (Index i = 0; i < data.n(); ++i) {
      if (data.y[i] == label) members.push_back(i);
    }
    const auto n_test = static_cast<std::size_t>(std::lround(static_cast<double>(members.size()) * test_fraction));
    if (n_test == 0 || n_test >= members.size()) {
      throw Error(Errc::DegenerateClass, "class " + std::to_string(label) + " with " +
                                             std::to_string(members.size()) +
                                             " rows leaves an empty train or test partition");
    }
    std::shuffle(members.begin(), members.end(), rng);
    result.test_rows.insert(result.test_rows.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    result.train_rows.insert(result.train_rows.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  std::sort(result.train_rows.begin(), result.train_rows.end());
  std::sort(result.test_rows.begin(), result.test_rows.end());
  result.train = data.subset(result.train_rows);
  result.test = data.subset(result.test_rows);
  return result;
}

}  // namespace pkd
