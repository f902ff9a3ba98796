#ifndef COALCLUST_DATA_HPP
#define COALCLUST_DATA_HPP

#include <optional>
#include <string>
#include <vector>

namespace coalclust {

struct ColumnType {
  bool categorical = false;
  int levels = 0;  // K for categorical columns
};

// n x D observations with an explicit missing mask. Real-valued or
// categorical per column; categorical cells store the level index.
class DataMatrix {
 public:
  DataMatrix() = default;
  DataMatrix(int rows, std::vector<ColumnType> columns);

  int rows() const { return rows_; }
  int cols() const { return static_cast<int>(columns_.size()); }
  const std::vector<ColumnType>& columns() const { return columns_; }
  const ColumnType& column(int c) const { return columns_[c]; }

  bool observed(int r, int c) const { return observed_[index(r, c)] != 0; }
  double get(int r, int c) const { return values_[index(r, c)]; }
  int get_level(int r, int c) const { return static_cast<int>(values_[index(r, c)]); }

  void set(int r, int c, double value);
  void set_missing(int r, int c);

  bool all_real() const;
  bool all_categorical() const;

  std::vector<std::string> row_labels;              // defaults to r0, r1, ...
  std::vector<std::string> column_names;
  std::optional<std::vector<int>> class_labels;     // per-row class ids
  std::vector<std::string> class_names;             // id -> original token

  int missing_count() const;

 private:
  int index(int r, int c) const { return r * cols() + c; }

  int rows_ = 0;
  std::vector<ColumnType> columns_;
  std::vector<double> values_;
  std::vector<unsigned char> observed_;
};

struct CsvOptions {
  std::string na_token = "NA";
  // Per-column schema tokens ("real" or "cat:K"). Empty -> inferred; a
  // single entry applies to every column.
  std::vector<std::string> schema;
  std::string label_column;  // class labels
  std::string id_column;     // row labels
};

DataMatrix load_csv(const std::string& path, const CsvOptions& options = {});
DataMatrix parse_csv(const std::string& text, const CsvOptions& options = {});
std::string to_csv(const DataMatrix& data, const std::string& na_token = "NA");
void save_csv(const DataMatrix& data, const std::string& path,
              const std::string& na_token = "NA");

}  // namespace coalclust

#endif
