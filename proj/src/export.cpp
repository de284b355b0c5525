#include "claro/report/export.hpp"

#include <fstream>
#include <sstream>

#include "claro/error.hpp"

namespace claro::report {

namespace {

/// Shortest decimal that parses back to the same double (what the JSON
/// library emits), so CSV and JSON agree digit for digit.
std::string number(double v) {
    return nlohmann::json(v).dump();
}

std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) return std::string(s);
    std::string quoted = "\"";
    for (char c : s) {
        quoted += c;
        if (c == '"') quoted += '"';
    }
    quoted += '"';
    return quoted;
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    write_text_file(path, j.dump(2) + "\n");
}

nlohmann::json read_json(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("cannot parse " + path.string() + ": " + e.what());
    }
}

}  // namespace

std::string to_string(ExportFormat format) {
    return format == ExportFormat::Json ? "json" : "csv";
}

ExportFormat export_format_from_string(std::string_view name) {
    if (name == "json") return ExportFormat::Json;
    if (name == "csv") return ExportFormat::Csv;
    throw ValidationError("unknown export format '" + std::string(name) + "'");
}

std::string to_csv(const explain::ImportanceReport& report) {
    std::string out = "feature,vi,permuted_loss,baseline_loss\n";
    for (const auto& entry : report.entries) {
        out += csv_field(entry.feature) + "," + number(entry.vi) + "," +
               number(entry.permuted_loss) + "," + number(report.baseline_loss) + "\n";
    }
    return out;
}

std::string to_csv(const explain::CurveSet& curve) {
    auto label = [&](std::size_t k) {
        return curve.categorical ? csv_field(curve.grid_labels[k]) : std::string();
    };
    std::string out;
    if (curve.kind == explain::CurveKind::Ice) {
        out = "instance,grid,label,value\n";
        for (std::size_t i = 0; i < curve.ice_values.size(); ++i) {
            for (std::size_t k = 0; k < curve.grid.size(); ++k) {
                out += std::to_string(curve.ice_instances[i]) + "," + number(curve.grid[k]) +
                       "," + label(k) + "," + number(curve.ice_values[i][k]) + "\n";
            }
        }
        return out;
    }
    out = "grid,label,value\n";
    for (std::size_t k = 0; k < curve.grid.size(); ++k)
        out += number(curve.grid[k]) + "," + label(k) + "," + number(curve.values[k]) + "\n";
    return out;
}

std::string to_csv(const explain::AttributionSet& attribution) {
    std::string out = "feature,contribution,cumulative\n";
    out += "intercept," + number(attribution.intercept) + "," +
           number(attribution.intercept) + "\n";
    double cumulative = attribution.intercept;
    for (const auto& c : attribution.contributions) {
        cumulative += c.value;
        out += csv_field(c.feature) + "," + number(c.value) + "," + number(cumulative) + "\n";
    }
    return out;
}

void export_artifact(const explain::ImportanceReport& report, ExportFormat format,
                     const std::filesystem::path& path) {
    if (format == ExportFormat::Json)
        write_json(report.to_json(), path);
    else
        write_text_file(path, to_csv(report));
}

void export_artifact(const explain::CurveSet& curve, ExportFormat format,
                     const std::filesystem::path& path) {
    if (format == ExportFormat::Json)
        write_json(curve.to_json(), path);
    else
        write_text_file(path, to_csv(curve));
}

void export_artifact(const explain::AttributionSet& attribution, ExportFormat format,
                     const std::filesystem::path& path) {
    if (format == ExportFormat::Json)
        write_json(attribution.to_json(), path);
    else
        write_text_file(path, to_csv(attribution));
}

explain::ImportanceReport import_importance(const std::filesystem::path& path) {
    return explain::ImportanceReport::from_json(read_json(path));
}

explain::CurveSet import_curves(const std::filesystem::path& path) {
    return explain::CurveSet::from_json(read_json(path));
}

explain::AttributionSet import_attribution(const std::filesystem::path& path) {
    return explain::AttributionSet::from_json(read_json(path));
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw ValidationError("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw ValidationError("failed reading " + path.string());
    return std::move(buffer).str();
}

}  // namespace claro::report
