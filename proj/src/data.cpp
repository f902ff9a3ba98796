#include "coalclust/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "coalclust/error.hpp"

namespace coalclust {

DataMatrix::DataMatrix(int rows, std::vector<ColumnType> columns)
    : rows_(rows), columns_(std::move(columns)) {
  values_.assign(static_cast<std::size_t>(rows_) * columns_.size(), 0.0);
  observed_.assign(values_.size(), 0);
  row_labels.resize(rows_);
  for (int r = 0; r < rows_; ++r) row_labels[r] = "r" + std::to_string(r);
  column_names.resize(columns_.size());
  for (std::size_t c = 0; c < columns_.size(); ++c) column_names[c] = "c" + std::to_string(c);
}

void DataMatrix::set(int r, int c, double value) {
  if (columns_[c].categorical) {
    const int level = static_cast<int>(value);
    if (level < 0 || level >= columns_[c].levels || level != value) {
      fail(ErrorKind::data, "categorical value " + std::to_string(value) +
                                " out of range at row " + std::to_string(r) + ", column " +
                                std::to_string(c));
    }
  }
  values_[index(r, c)] = value;
  observed_[index(r, c)] = 1;
}

void DataMatrix::set_missing(int r, int c) {
  values_[index(r, c)] = 0.0;
  observed_[index(r, c)] = 0;
}

bool DataMatrix::all_real() const {
  return std::none_of(columns_.begin(), columns_.end(),
                      [](const ColumnType& c) { return c.categorical; });
}

bool DataMatrix::all_categorical() const {
  return std::all_of(columns_.begin(), columns_.end(),
                     [](const ColumnType& c) { return c.categorical; });
}

int DataMatrix::missing_count() const {
  int missing = 0;
  for (unsigned char o : observed_) missing += o == 0;
  return missing;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  cells.push_back(cell);
  return cells;
}

ColumnType parse_schema_token(const std::string& token) {
  if (token == "real") return {false, 0};
  if (token.rfind("cat:", 0) == 0) {
    const int k = std::stoi(token.substr(4));
    if (k < 2) fail(ErrorKind::ingestion, "categorical column needs at least 2 levels");
    return {true, k};
  }
  fail(ErrorKind::ingestion, "unknown schema token '" + token + "'");
}

std::string format_g12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

DataMatrix parse_csv(const std::string& text, const CsvOptions& options) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::ingestion, "empty CSV input");
  const std::vector<std::string> header = split_line(line);

  int label_col = -1, id_col = -1;
  std::vector<int> data_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!options.label_column.empty() && header[c] == options.label_column) {
      label_col = static_cast<int>(c);
    } else if (!options.id_column.empty() && header[c] == options.id_column) {
      id_col = static_cast<int>(c);
    } else {
      data_cols.push_back(static_cast<int>(c));
    }
  }
  if (!options.label_column.empty() && label_col < 0) {
    fail(ErrorKind::ingestion, "label column '" + options.label_column + "' not found");
  }
  if (!options.id_column.empty() && id_col < 0) {
    fail(ErrorKind::ingestion, "id column '" + options.id_column + "' not found");
  }

  std::vector<std::vector<std::string>> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      fail(ErrorKind::ingestion, "ragged row at line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(header.size()) + " cells, got " +
                                     std::to_string(cells.size()));
    }
    rows.push_back(std::move(cells));
  }

  const int n = static_cast<int>(rows.size());
  const int d = static_cast<int>(data_cols.size());
  if (n == 0 || d == 0) fail(ErrorKind::ingestion, "CSV has no data rows or columns");

  // Resolve column types: explicit schema wins, otherwise infer
  // (all-integer, small range -> categorical).
  std::vector<ColumnType> types(d);
  if (!options.schema.empty()) {
    if (options.schema.size() == 1) {
      for (int c = 0; c < d; ++c) types[c] = parse_schema_token(options.schema[0]);
    } else if (static_cast<int>(options.schema.size()) == d) {
      for (int c = 0; c < d; ++c) types[c] = parse_schema_token(options.schema[c]);
    } else {
      fail(ErrorKind::ingestion, "schema lists " + std::to_string(options.schema.size()) +
                                     " columns, data has " + std::to_string(d));
    }
  } else {
    for (int c = 0; c < d; ++c) {
      bool all_int = true;
      int max_value = -1;
      bool any = false;
      for (int r = 0; r < n; ++r) {
        const std::string& cell = rows[r][data_cols[c]];
        if (cell == options.na_token) continue;
        any = true;
        char* end = nullptr;
        const double v = std::strtod(cell.c_str(), &end);
        if (end == cell.c_str() || *end != '\0') {
          fail(ErrorKind::ingestion, "unparseable cell '" + cell + "' at row " +
                                         std::to_string(r) + ", column '" + header[data_cols[c]] + "'");
        }
        if (v != std::floor(v) || v < 0.0 || v > 16.0) all_int = false;
        max_value = std::max(max_value, static_cast<int>(v));
      }
      if (any && all_int && max_value >= 1) {
        types[c] = {true, max_value + 1};
      } else {
        types[c] = {false, 0};
      }
    }
  }

  DataMatrix data(n, types);
  for (int c = 0; c < d; ++c) data.column_names[c] = header[data_cols[c]];
  for (int r = 0; r < n; ++r) {
    if (id_col >= 0) data.row_labels[r] = rows[r][id_col];
    for (int c = 0; c < d; ++c) {
      const std::string& cell = rows[r][data_cols[c]];
      if (cell == options.na_token) {
        data.set_missing(r, c);
        continue;
      }
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0') {
        fail(ErrorKind::ingestion, "unparseable cell '" + cell + "' at row " + std::to_string(r) +
                                       ", column '" + data.column_names[c] + "'");
      }
      if (types[c].categorical &&
          (v != std::floor(v) || v < 0.0 || v >= types[c].levels)) {
        fail(ErrorKind::data, "categorical value " + cell + " out of range [0," +
                                  std::to_string(types[c].levels) + ") at row " +
                                  std::to_string(r) + ", column '" + data.column_names[c] + "'");
      }
      data.set(r, c, v);
    }
  }

  if (label_col >= 0) {
    std::set<std::string> unique;
    for (int r = 0; r < n; ++r) unique.insert(rows[r][label_col]);
    data.class_names.assign(unique.begin(), unique.end());
    std::vector<int> labels(n);
    for (int r = 0; r < n; ++r) {
      labels[r] = static_cast<int>(
          std::lower_bound(data.class_names.begin(), data.class_names.end(), rows[r][label_col]) -
          data.class_names.begin());
    }
    data.class_labels = std::move(labels);
  }
  return data;
}

DataMatrix load_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::ingestion, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), options);
}

std::string to_csv(const DataMatrix& data, const std::string& na_token) {
  std::string out = "id";
  for (int c = 0; c < data.cols(); ++c) out += "," + data.column_names[c];
  if (data.class_labels) out += ",class";
  out += "\n";
  for (int r = 0; r < data.rows(); ++r) {
    out += data.row_labels[r];
    for (int c = 0; c < data.cols(); ++c) {
      out += ",";
      if (!data.observed(r, c)) {
        out += na_token;
      } else if (data.column(c).categorical) {
        out += std::to_string(data.get_level(r, c));
      } else {
        out += format_g12(data.get(r, c));
      }
    }
    if (data.class_labels) {
      const int id = (*data.class_labels)[r];
      out += "," + (id < static_cast<int>(data.class_names.size()) ? data.class_names[id]
                                                                   : std::to_string(id));
    }
    out += "\n";
  }
  return out;
}

void save_csv(const DataMatrix& data, const std::string& path, const std::string& na_token) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::ingestion, "cannot write '" + path + "'");
  out << to_csv(data, na_token);
}

}  // namespace coalclust
