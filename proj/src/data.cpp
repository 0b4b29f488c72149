#include "bivboost/data.hpp"

#include <sstream>
#include <stdexcept>

namespace bivboost {

namespace {

std::string list_rows(const std::vector<long>& rows, std::size_t cap = 10) {
  std::ostringstream out;
  for (std::size_t i = 0; i < rows.size() && i < cap; ++i) {
    if (i) out << ", ";
    out << rows[i];
  }
  if (rows.size() > cap) out << ", ... (" << rows.size() << " total)";
  return out.str();
}

}  // namespace

std::vector<std::string> DataTable::column_names() const {
  std::vector<std::string> names;
  names.reserve(columns_.size());
  for (const auto& c : columns_) names.push_back(c.name);
  return names;
}

bool DataTable::has_column(const std::string& name) const {
  for (const auto& c : columns_) {
    if (c.name == name) return true;
  }
  return false;
}

const DataTable::Column& DataTable::column(const std::string& name) const {
  for (const auto& c : columns_) {
    if (c.name == name) return c;
  }
  throw std::invalid_argument("column '" + name + "' not found");
}

const Eigen::VectorXd& DataTable::numeric(const std::string& name) const {
  const Column& c = column(name);
  if (!c.is_numeric) throw std::invalid_argument("column '" + name + "' is not numeric");
  if (!c.missing_rows.empty()) {
    throw std::invalid_argument("column '" + name + "' has missing values in rows " +
                                list_rows(c.missing_rows));
  }
  return c.values;
}

const std::vector<std::string>& DataTable::labels(const std::string& name) const {
  const Column& c = column(name);
  if (c.is_numeric) {
    throw std::invalid_argument("column '" + name + "' is numeric, expected region labels");
  }
  if (!c.missing_rows.empty()) {
    throw std::invalid_argument("column '" + name + "' has missing values in rows " +
                                list_rows(c.missing_rows));
  }
  return c.labels;
}

void DataTable::check_rows(long rows) {
  if (empty_) {
    n_rows_ = rows;
    empty_ = false;
    return;
  }
  if (rows != n_rows_) throw std::invalid_argument("column row count mismatch");
}

void DataTable::add_numeric(const std::string& name, Eigen::VectorXd values) {
  check_rows(values.size());
  Column c;
  c.name = name;
  c.is_numeric = true;
  c.values = std::move(values);
  columns_.push_back(std::move(c));
}

void DataTable::add_labels(const std::string& name, std::vector<std::string> values) {
  check_rows(static_cast<long>(values.size()));
  Column c;
  c.name = name;
  c.is_numeric = false;
  c.labels = std::move(values);
  columns_.push_back(std::move(c));
}

void DataTable::add_column(Column column) {
  check_rows(column.is_numeric ? column.values.size()
                               : static_cast<long>(column.labels.size()));
  columns_.push_back(std::move(column));
}

Eigen::MatrixXd DataTable::responses(const std::string& y1, const std::string& y2) const {
  Eigen::MatrixXd y(n_rows_, 2);
  y.col(0) = numeric(y1);
  y.col(1) = numeric(y2);
  return y;
}

DataTable DataTable::subset(const std::vector<long>& rows) const {
  DataTable out;
  for (const auto& c : columns_) {
    Column copy;
    copy.name = c.name;
    copy.is_numeric = c.is_numeric;
    if (c.is_numeric) {
      copy.values.resize(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) copy.values[static_cast<Eigen::Index>(i)] = c.values[rows[i]];
    } else {
      copy.labels.reserve(rows.size());
      for (const long r : rows) copy.labels.push_back(c.labels[static_cast<std::size_t>(r)]);
    }
    if (!c.missing_rows.empty()) {
      std::vector<bool> missing(static_cast<std::size_t>(n_rows_), false);
      for (const long r : c.missing_rows) missing[static_cast<std::size_t>(r)] = true;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (missing[static_cast<std::size_t>(rows[i])]) {
          copy.missing_rows.push_back(static_cast<long>(i));
        }
      }
    }
    out.add_column(std::move(copy));
  }
  return out;
}

}  // namespace bivboost
