#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace tvol {

/// Column-named numeric records, the unit of every CSV/JSON result file.
struct ResultTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void add_row(std::vector<double> row);
};

/// %.17g, so that every finite double survives a text round trip.
std::string format_number(double v);

/// `# seed=<seed>` line, header row, then one line per record.
void write_csv(std::ostream& os, const ResultTable& table, std::uint64_t seed);
ResultTable read_csv(std::istream& is);

/// {"seed", "columns", "rows"}; non-finite numbers become null.
nlohmann::json table_to_json(const ResultTable& table, std::uint64_t seed);

/// Writes <dir>/<stem>.csv and <dir>/<stem>.json (the table plus `summary`).
/// Throws std::runtime_error when the destination cannot be written.
void emit_results(const ResultTable& table, const nlohmann::json& summary,
                  const std::filesystem::path& dir, const std::string& stem, std::uint64_t seed);

/// Writes <dir>/manifest.json: tool version, subcommand, config echo and a
/// timestamp (the only field that differs between identical reruns).
void write_manifest(const std::filesystem::path& dir, const std::string& subcommand,
                    const nlohmann::json& config);

/// Writes text to a file, creating parent directories; throws on failure.
void write_text_file(const std::filesystem::path& file, const std::string& text);

const char* version_string();

}  // namespace tvol
