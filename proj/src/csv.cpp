#include "claro/tabular/csv.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "claro/error.hpp"

namespace claro::tabular {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    if (!cells.empty() && !cells.back().empty() && cells.back().back() == '\r')
        cells.back().pop_back();
    return cells;
}

double parse_double(std::string_view cell, const std::string& column, std::size_t row,
                    const std::string& origin) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size())
        throw ValidationError(origin + ": unparseable numeric '" + std::string(cell) +
                              "' in column '" + column + "' (row " + std::to_string(row) + ")");
    return value;
}

std::string format_double(double v) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

}  // namespace

Dataset read_csv(std::istream& in, const Schema& schema, const std::string& origin) {
    std::string header;
    if (!std::getline(in, header))
        throw ValidationError(origin + ": empty file, expected a header row");
    const auto names = split_line(header);
    std::unordered_map<std::string, std::size_t> positions;
    for (std::size_t c = 0; c < names.size(); ++c) positions.emplace(names[c], c);

    auto position_of = [&](const std::string& name) {
        const auto it = positions.find(name);
        if (it == positions.end())
            throw ValidationError(origin + ": missing column '" + name + "'");
        return it->second;
    };

    const std::size_t p = schema.feature_count();
    std::vector<std::size_t> feature_pos(p);
    for (std::size_t j = 0; j < p; ++j) feature_pos[j] = position_of(schema.feature(j).name);
    const std::size_t response_pos = position_of(schema.response());
    std::optional<std::size_t> weight_pos;
    if (schema.weight()) weight_pos = position_of(*schema.weight());

    std::vector<Column> columns;
    columns.reserve(p);
    for (std::size_t j = 0; j < p; ++j) {
        if (schema.feature(j).kind.is_numeric())
            columns.emplace_back(NumericColumn{});
        else
            columns.emplace_back(CategoricalColumn{});
    }
    std::vector<double> response;
    std::vector<double> weights;

    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() < names.size())
            throw ValidationError(origin + ": row " + std::to_string(row) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(names.size()));
        for (std::size_t j = 0; j < p; ++j) {
            const auto& spec = schema.feature(j);
            const std::string& cell = cells[feature_pos[j]];
            if (spec.kind.is_numeric()) {
                std::get<NumericColumn>(columns[j])
                    .push_back(parse_double(cell, spec.name, row, origin));
            } else {
                const auto idx = spec.kind.level_index(cell);
                if (!idx)
                    throw ValidationError(origin + ": unknown level '" + cell + "' in column '" +
                                          spec.name + "' (row " + std::to_string(row) + ")");
                std::get<CategoricalColumn>(columns[j]).push_back(*idx);
            }
        }
        response.push_back(parse_double(cells[response_pos], schema.response(), row, origin));
        if (weight_pos) {
            const double w = parse_double(cells[*weight_pos], *schema.weight(), row, origin);
            if (w <= 0.0)
                throw ValidationError(origin + ": non-positive weight " + format_double(w) +
                                      " (row " + std::to_string(row) + ")");
            weights.push_back(w);
        }
    }
    if (response.empty()) throw ValidationError(origin + ": no data rows");
    return Dataset(schema, std::move(columns), std::move(response), std::move(weights));
}

Dataset read_csv(const std::filesystem::path& path, const Schema& schema) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    return read_csv(in, schema, path.string());
}

void write_csv(const Dataset& ds, std::ostream& out) {
    const Schema& schema = ds.schema();
    for (std::size_t j = 0; j < schema.feature_count(); ++j) {
        if (j) out << ',';
        out << schema.feature(j).name;
    }
    out << ',' << schema.response();
    if (schema.weight()) out << ',' << *schema.weight();
    out << '\n';

    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        for (std::size_t j = 0; j < schema.feature_count(); ++j) {
            if (j) out << ',';
            const auto& spec = schema.feature(j);
            if (spec.kind.is_numeric())
                out << format_double(ds.numeric(j)[i]);
            else
                out << spec.kind.levels()[static_cast<std::size_t>(ds.categorical(j)[i])];
        }
        out << ',' << format_double(ds.response()[i]);
        if (schema.weight()) out << ',' << format_double(ds.weights()[i]);
        out << '\n';
    }
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    write_csv(ds, out);
}

Schema load_schema(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return Schema::from_json(j);
}

void save_schema(const Schema& schema, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out << schema.to_json().dump(2) << '\n';
}

}  // namespace claro::tabular
