#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace bivboost {

// Column-named table shared by the engine, the simulator and the CSV layer.
// Columns are either numeric or categorical (labels); missing cells are
// tracked per column and rejected when a column is actually used.
class DataTable {
 public:
  struct Column {
    std::string name;
    bool is_numeric = true;
    Eigen::VectorXd values;            // numeric payload
    std::vector<std::string> labels;   // categorical payload
    std::vector<long> missing_rows;    // sorted row indices
  };

  DataTable() = default;

  long n_rows() const { return n_rows_; }
  const std::vector<Column>& columns() const { return columns_; }
  std::vector<std::string> column_names() const;

  bool has_column(const std::string& name) const;
  const Column& column(const std::string& name) const;

  // Accessors that enforce type and completeness; error messages name the
  // column and the first missing rows.
  const Eigen::VectorXd& numeric(const std::string& name) const;
  const std::vector<std::string>& labels(const std::string& name) const;

  void add_numeric(const std::string& name, Eigen::VectorXd values);
  void add_labels(const std::string& name, std::vector<std::string> values);
  void add_column(Column column);

  // Two named numeric columns as an n x 2 response matrix.
  Eigen::MatrixXd responses(const std::string& y1, const std::string& y2) const;

  // Row subset in the given order.
  DataTable subset(const std::vector<long>& rows) const;

 private:
  void check_rows(long rows);

  std::vector<Column> columns_;
  long n_rows_ = 0;
  bool empty_ = true;
};

}  // namespace bivboost
