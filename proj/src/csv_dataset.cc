// CSV ingestion for classification datasets.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "exptree/env.h"

namespace exptree {
namespace {

// Splits one CSV record. Supports double-quoted fields with "" escapes.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (quoted) throw std::invalid_argument("csv: unterminated quote");
  fields.push_back(std::move(cur));
  return fields;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

Dataset load_csv_dataset(const std::filesystem::path& path,
                         const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("csv: cannot open " + path.string());

  std::vector<std::vector<std::string>> records;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (records.empty() && line.size() >= 3 &&
        line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    if (line.empty()) continue;
    auto fields = split_record(line);
    for (auto& f : fields) f = trim(f);
    records.push_back(std::move(fields));
  }
  if (records.size() < 2) {
    throw std::invalid_argument("csv: need a header and at least one row");
  }
  const auto& header = records.front();
  const auto label_it = std::find(header.begin(), header.end(), label_column);
  if (label_it == header.end()) {
    throw std::invalid_argument("csv: label column not found: " + label_column);
  }
  const auto label_col = static_cast<std::size_t>(label_it - header.begin());
  const std::size_t n = records.size() - 1;
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != header.size()) {
      throw std::invalid_argument("csv: row " + std::to_string(r) +
                                  " has the wrong number of fields");
    }
    for (const auto& f : records[r]) {
      if (f.empty()) {
        throw std::invalid_argument("csv: missing value in row " +
                                    std::to_string(r));
      }
    }
  }

  // Per input column: either min-max scaled numbers or one-hot levels.
  struct Column {
    std::size_t source;
    bool numeric;
    std::vector<double> values;
    double lo = 0.0, hi = 0.0;
    std::vector<std::string> levels;
  };
  std::vector<Column> columns;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == label_col) continue;
    Column col{c, true, {}, 0.0, 0.0, {}};
    col.values.reserve(n);
    for (std::size_t r = 1; r <= n; ++r) {
      const auto v = parse_number(records[r][c]);
      if (!v) {
        col.numeric = false;
        break;
      }
      col.values.push_back(*v);
    }
    if (col.numeric) {
      const auto [mn, mx] =
          std::minmax_element(col.values.begin(), col.values.end());
      col.lo = *mn;
      col.hi = *mx;
    } else {
      col.values.clear();
      for (std::size_t r = 1; r <= n; ++r) col.levels.push_back(records[r][c]);
      std::sort(col.levels.begin(), col.levels.end());
      col.levels.erase(std::unique(col.levels.begin(), col.levels.end()),
                       col.levels.end());
    }
    columns.push_back(std::move(col));
  }

  Dataset ds;
  ds.name = path.stem().string();
  ds.n_rows = n;
  for (const auto& col : columns) {
    if (col.numeric) {
      ds.feature_names.push_back(header[col.source]);
    } else {
      for (const auto& level : col.levels) {
        ds.feature_names.push_back(header[col.source] + "=" + level);
      }
    }
  }
  ds.n_features = ds.feature_names.size();
  if (ds.n_features == 0) throw std::invalid_argument("csv: no feature columns");
  ds.rows.assign(n * ds.n_features, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    double* out = ds.rows.data() + r * ds.n_features;
    std::size_t j = 0;
    for (const auto& col : columns) {
      if (col.numeric) {
        const double range = col.hi - col.lo;
        out[j++] = range > 0.0 ? (col.values[r] - col.lo) / range : 0.0;
      } else {
        const auto& v = records[r + 1][col.source];
        const auto pos = std::lower_bound(col.levels.begin(), col.levels.end(), v);
        out[j + static_cast<std::size_t>(pos - col.levels.begin())] = 1.0;
        j += col.levels.size();
      }
    }
  }

  // Labels: numeric order when every label parses as a number, else lexical.
  std::vector<std::string> raw(n);
  bool numeric_labels = true;
  for (std::size_t r = 0; r < n; ++r) {
    raw[r] = records[r + 1][label_col];
    numeric_labels = numeric_labels && parse_number(raw[r]).has_value();
  }
  std::vector<std::string> classes = raw;
  const auto less = [numeric_labels](const std::string& a, const std::string& b) {
    if (numeric_labels) return *parse_number(a) < *parse_number(b);
    return a < b;
  };
  std::sort(classes.begin(), classes.end(), less);
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2) {
    throw std::invalid_argument("csv: label column has a single class");
  }
  std::map<std::string, int> class_index;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    class_index.emplace(classes[i], static_cast<int>(i));
  }
  ds.labels.reserve(n);
  for (const auto& l : raw) ds.labels.push_back(class_index.at(l));
  ds.n_classes = static_cast<int>(classes.size());
  ds.validate();
  return ds;
}

}  // namespace exptree
