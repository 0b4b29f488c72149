#pragma once

#include <map>
#include <string>
#include <vector>

#include "bivboost/baselearners.hpp"
#include "bivboost/data.hpp"

namespace bivboost::io {

enum class ColumnType { numeric, categorical };

// Strict CSV: header row, comma separator, decimal point, UTF-8, no quoting.
// Empty cells and NA/NaN are missing values. Columns parse as numeric when
// every present cell does; hints force a type, and an unparsable cell in a
// hinted numeric column is an error naming row and column.
DataTable load_csv(const std::string& path,
                   const std::map<std::string, ColumnType>& hints = {});

void write_csv(const std::string& path, const DataTable& table);

// Edge-list adjacency file: one "regionA,regionB" pair per line.
bl::Adjacency load_adjacency(const std::string& path);
void write_adjacency(const std::string& path, const bl::Adjacency& adjacency);

// Round-trip exact double formatting used by every CSV writer.
std::string format_double(double value);

}  // namespace bivboost::io
