#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "claro/explain/attribution.hpp"
#include "claro/explain/curves.hpp"
#include "claro/explain/importance.hpp"

namespace claro::report {

enum class ExportFormat { Json, Csv };

std::string to_string(ExportFormat format);
ExportFormat export_format_from_string(std::string_view name);

/// Flat tables with documented columns (see docs/formats.md). Doubles are
/// written in shortest round-trip form, so re-parsing loses nothing.
///   importance:  feature,vi,permuted_loss,baseline_loss
///   pdp/ale:     grid,label,value
///   ice:         instance,grid,label,value
///   attribution: feature,contribution,cumulative  ("intercept" row first)
std::string to_csv(const explain::ImportanceReport& report);
std::string to_csv(const explain::CurveSet& curve);
std::string to_csv(const explain::AttributionSet& attribution);

/// Writes the artifact to `path` in the given format. JSON keeps the full
/// structure; CSV is the flat table above.
void export_artifact(const explain::ImportanceReport& report, ExportFormat format,
                     const std::filesystem::path& path);
void export_artifact(const explain::CurveSet& curve, ExportFormat format,
                     const std::filesystem::path& path);
void export_artifact(const explain::AttributionSet& attribution, ExportFormat format,
                     const std::filesystem::path& path);

/// Read back a JSON export. Together with export_artifact these round-trip
/// every artifact bit for bit.
explain::ImportanceReport import_importance(const std::filesystem::path& path);
explain::CurveSet import_curves(const std::filesystem::path& path);
explain::AttributionSet import_attribution(const std::filesystem::path& path);

/// Shared low-level file helpers (also used by the CLI).
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace claro::report
