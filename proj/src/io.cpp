#include "bivboost/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bivboost::io {

namespace {

bool is_missing(const std::string& cell) {
  return cell.empty() || cell == "NA" || cell == "NaN" || cell == "nan" || cell == "na";
}

bool parse_double(const std::string& cell, double& out) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc() && res.ptr == end;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  if (!cells.empty() && !cells.back().empty() && cells.back().back() == '\r') {
    cells.back().pop_back();
  }
  return cells;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

DataTable load_csv(const std::string& path, const std::map<std::string, ColumnType>& hints) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("'" + path + "' is empty (no header)");
  const std::vector<std::string> header = split_line(line);
  const std::size_t n_cols = header.size();
  for (const auto& name : header) {
    if (name.empty()) throw std::invalid_argument("'" + path + "' has an empty column name");
  }
  for (const auto& [name, type] : hints) {
    (void)type;
    bool found = false;
    for (const auto& h : header) found = found || h == name;
    if (!found) throw std::invalid_argument("hinted column '" + name + "' not in '" + path + "'");
  }

  std::vector<std::vector<std::string>> raw(n_cols);
  long row = 0;
  while (std::getline(in, line)) {
    if (line.empty() && in.eof()) break;
    const auto cells = split_line(line);
    if (cells.size() != n_cols) {
      std::ostringstream msg;
      msg << path << ": row " << row << " has " << cells.size() << " cells, expected " << n_cols;
      throw std::invalid_argument(msg.str());
    }
    for (std::size_t c = 0; c < n_cols; ++c) raw[c].push_back(cells[c]);
    ++row;
  }

  DataTable table;
  for (std::size_t c = 0; c < n_cols; ++c) {
    const auto hint = hints.find(header[c]);
    bool numeric = true;
    if (hint != hints.end()) {
      numeric = hint->second == ColumnType::numeric;
    } else {
      for (long r = 0; r < row && numeric; ++r) {
        double v;
        if (!is_missing(raw[c][static_cast<std::size_t>(r)]) &&
            !parse_double(raw[c][static_cast<std::size_t>(r)], v)) {
          numeric = false;
        }
      }
    }
    DataTable::Column column;
    column.name = header[c];
    column.is_numeric = numeric;
    if (numeric) {
      column.values.resize(row);
      for (long r = 0; r < row; ++r) {
        const std::string& cell = raw[c][static_cast<std::size_t>(r)];
        if (is_missing(cell)) {
          column.values[r] = std::numeric_limits<double>::quiet_NaN();
          column.missing_rows.push_back(r);
          continue;
        }
        double v;
        if (!parse_double(cell, v)) {
          std::ostringstream msg;
          msg << path << ": cell at row " << r << ", column '" << header[c]
              << "' is not numeric: '" << cell << "'";
          throw std::invalid_argument(msg.str());
        }
        column.values[r] = v;
      }
    } else {
      column.labels.reserve(static_cast<std::size_t>(row));
      for (long r = 0; r < row; ++r) {
        const std::string& cell = raw[c][static_cast<std::size_t>(r)];
        if (is_missing(cell)) column.missing_rows.push_back(r);
        column.labels.push_back(cell);
      }
    }
    table.add_column(std::move(column));
  }
  return table;
}

void write_csv(const std::string& path, const DataTable& table) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write '" + path + "'");
  const auto& columns = table.columns();
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) out << ',';
    out << columns[c].name;
  }
  out << '\n';
  for (long r = 0; r < table.n_rows(); ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out << ',';
      if (columns[c].is_numeric) {
        const double v = columns[c].values[r];
        out << (std::isnan(v) ? "NA" : format_double(v));
      } else {
        out << columns[c].labels[static_cast<std::size_t>(r)];
      }
    }
    out << '\n';
  }
}

bl::Adjacency load_adjacency(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open '" + path + "'");
  bl::Adjacency adj;
  std::map<std::string, int> index;
  auto id_of = [&](const std::string& label) {
    const auto it = index.find(label);
    if (it != index.end()) return it->second;
    const int id = static_cast<int>(adj.regions.size());
    adj.regions.push_back(label);
    index[label] = id;
    return id;
  };
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos) {
      std::ostringstream msg;
      msg << path << ": line " << n << " is not a 'regionA,regionB' pair";
      throw std::invalid_argument(msg.str());
    }
    const std::string a = line.substr(0, comma);
    const std::string b = line.substr(comma + 1);
    if (a.empty() || b.empty()) {
      std::ostringstream msg;
      msg << path << ": line " << n << " has an empty region label";
      throw std::invalid_argument(msg.str());
    }
    adj.edges.emplace_back(id_of(a), id_of(b));
  }
  return adj;
}

void write_adjacency(const std::string& path, const bl::Adjacency& adjacency) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot write '" + path + "'");
  for (const auto& [a, b] : adjacency.edges) {
    out << adjacency.regions[static_cast<std::size_t>(a)] << ','
        << adjacency.regions[static_cast<std::size_t>(b)] << '\n';
  }
}

}  // namespace bivboost::io
