#ifndef AVSE_METRICS_SCORES_H_
#define AVSE_METRICS_SCORES_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace avse::metrics {

struct ScoreRecord {
  std::string utterance_id;
  std::string noise_type;
  double sir_db = 0.0;
  double sar_db = 0.0;
  std::string method;
  std::string metric;  // stoi, sdi, pesq, hasqi, haspi
  double value = 0.0;
};

inline const std::vector<std::string> kScoreColumns = {
    "utterance_id", "noise_type", "sir_db", "sar_db", "method", "metric", "value"};

// Empty string when valid, otherwise the reason.
std::string ValidateRecord(const ScoreRecord& r);

struct RejectedRow {
  int line = 0;
  std::string reason;
};

// Keyed store: a record with the same (utterance, noise, SIR, SAR, method,
// metric) as an existing one replaces it with a warning.
class ScoreStore {
 public:
  // Returns false and leaves the store unchanged for an invalid record.
  bool Add(const ScoreRecord& r, std::string* reason = nullptr);

  // Merges a score CSV. Malformed or invalid rows are skipped, warned
  // about and returned with their line numbers. A missing header column
  // raises Error.
  std::vector<RejectedRow> ImportCsv(const std::filesystem::path& path);

  std::vector<ScoreRecord> records() const;  // sorted by key
  std::size_t size() const { return records_.size(); }
  void WriteCsv(const std::filesystem::path& path) const;

 private:
  using Key = std::tuple<std::string, std::string, double, double, std::string, std::string>;
  std::map<Key, ScoreRecord> records_;
};

enum class GroupBy { kNoiseType, kSir, kSar, kSirSar };

struct AggregateCell {
  double mean = 0.0;
  std::size_t count = 0;
};

struct AggregateTable {
  std::string metric;
  GroupBy group_by = GroupBy::kNoiseType;
  std::vector<std::string> key_columns;             // e.g. {"noise_type"}
  std::vector<std::vector<std::string>> row_keys;   // sorted
  std::vector<std::string> methods;                 // sorted
  std::vector<std::vector<AggregateCell>> cells;    // [row][method]

  std::size_t TotalCount() const;
};

// Means per (group, method) for one metric. `sar_filter` keeps only records
// at that SAR. Cell sums are accumulated in sorted value order so the result
// does not depend on record order.
AggregateTable Aggregate(const std::vector<ScoreRecord>& records, const std::string& metric,
                         GroupBy group_by, std::optional<double> sar_filter = std::nullopt);

// Writes one or more tables to a CSV: metric, key columns, then one column
// per method (blank where a cell is empty).
void WriteAggregateCsv(const std::filesystem::path& path, const std::vector<AggregateTable>& tables);

}  // namespace avse::metrics

#endif  // AVSE_METRICS_SCORES_H_
