#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "claro/tabular/dataset.hpp"

namespace claro::tabular {

/// Reads a UTF-8, comma-separated file with one header row. The header must
/// contain every schema column; extra columns are ignored. Numerics use "."
/// as the decimal separator and no quoting; categorical cells must match a
/// schema level exactly. Row order is preserved.
Dataset read_csv(const std::filesystem::path& path, const Schema& schema);
Dataset read_csv(std::istream& in, const Schema& schema, const std::string& origin = "<stream>");

/// Writes features, response and weight in schema order. Numeric cells use
/// shortest round-trip formatting, so read_csv(write_csv(ds)) reproduces the
/// dataset bit for bit.
void write_csv(const Dataset& ds, const std::filesystem::path& path);
void write_csv(const Dataset& ds, std::ostream& out);

Schema load_schema(const std::filesystem::path& path);
void save_schema(const Schema& schema, const std::filesystem::path& path);

}  // namespace claro::tabular
