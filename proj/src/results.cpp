#include "tvol/results.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifndef TVOL_VERSION
#define TVOL_VERSION "dev"
#endif

namespace tvol {

void ResultTable::add_row(std::vector<double> row) {
  if (row.size() != columns.size()) throw std::invalid_argument("result row width does not match columns");
  rows.push_back(std::move(row));
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(std::ostream& os, const ResultTable& table, std::uint64_t seed) {
  os << "# seed=" << seed << "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
  os << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_number(row[i]);
    os << "\n";
  }
}

ResultTable read_csv(std::istream& is) {
  ResultTable t;
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ss(line);
    std::string f;
    std::vector<std::string> fields;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (header) {
      t.columns = fields;
      header = false;
      continue;
    }
    std::vector<double> row;
    for (const auto& s : fields) row.push_back(std::strtod(s.c_str(), nullptr));
    t.add_row(std::move(row));
  }
  return t;
}

nlohmann::json table_to_json(const ResultTable& table, std::uint64_t seed) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json r = nlohmann::json::array();
    for (double v : row) {
      if (std::isfinite(v)) {
        r.push_back(v);
      } else {
        r.push_back(nullptr);
      }
    }
    rows.push_back(std::move(r));
  }
  return {{"seed", seed}, {"columns", table.columns}, {"rows", std::move(rows)}};
}

void write_text_file(const std::filesystem::path& file, const std::string& text) {
  std::error_code ec;
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path(), ec);
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + file.string() + "'");
  out << text;
  if (!out) throw std::runtime_error("error writing '" + file.string() + "'");
}

void emit_results(const ResultTable& table, const nlohmann::json& summary,
                  const std::filesystem::path& dir, const std::string& stem, std::uint64_t seed) {
  std::ostringstream csv;
  write_csv(csv, table, seed);
  write_text_file(dir / (stem + ".csv"), csv.str());
  nlohmann::json doc = table_to_json(table, seed);
  doc["summary"] = summary;
  write_text_file(dir / (stem + ".json"), doc.dump(2) + "\n");
}

void write_manifest(const std::filesystem::path& dir, const std::string& subcommand,
                    const nlohmann::json& config) {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  nlohmann::json m = {{"tool", "tvol"},
                      {"version", version_string()},
                      {"subcommand", subcommand},
                      {"config", config},
                      {"timestamp", stamp}};
  write_text_file(dir / "manifest.json", m.dump(2) + "\n");
}

const char* version_string() { return TVOL_VERSION; }

}  // namespace tvol
