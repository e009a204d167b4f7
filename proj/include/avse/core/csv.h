#ifndef AVSE_CORE_CSV_H_
#define AVSE_CORE_CSV_H_

#include <filesystem>
#include <string>
#include <vector>

namespace avse {

// Minimal CSV support: comma separated, optional double-quoted fields with
// "" escapes. Enough for the manifests and score tables this project emits.
std::vector<std::string> SplitCsvLine(const std::string& line);
std::string JoinCsvLine(const std::vector<std::string>& fields);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<int> line_numbers;  // 1-based source line of each row

  int Column(const std::string& name) const;  // -1 when absent
};

CsvTable ReadCsvFile(const std::filesystem::path& path);
void WriteCsvFile(const std::filesystem::path& path, const CsvTable& table);

// Shortest round-trippable decimal rendering of a double.
std::string FormatDouble(double v);

}  // namespace avse

#endif  // AVSE_CORE_CSV_H_
