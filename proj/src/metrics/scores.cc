#include "avse/metrics/scores.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "avse/core/csv.h"
#include "avse/core/error.h"

namespace avse::metrics {

std::string ValidateRecord(const ScoreRecord& r) {
  static const std::set<std::string> kMetrics = {"stoi", "sdi", "pesq", "hasqi", "haspi"};
  if (r.utterance_id.empty()) return "empty utterance_id";
  if (r.method.empty()) return "empty method";
  if (!kMetrics.count(r.metric)) return "unknown metric '" + r.metric + "'";
  if (!std::isfinite(r.sir_db) || !std::isfinite(r.sar_db)) return "non-finite SIR/SAR";
  if (!std::isfinite(r.value)) return "non-finite value";
  if (r.metric == "stoi" && (r.value < -1.0 || r.value > 1.0))
    return "stoi value " + FormatDouble(r.value) + " outside [-1, 1]";
  if (r.metric == "sdi" && r.value < 0.0) return "negative sdi value " + FormatDouble(r.value);
  return "";
}

bool ScoreStore::Add(const ScoreRecord& r, std::string* reason) {
  std::string why = ValidateRecord(r);
  if (!why.empty()) {
    if (reason) *reason = why;
    return false;
  }
  Key key{r.utterance_id, r.noise_type, r.sir_db, r.sar_db, r.method, r.metric};
  auto it = records_.find(key);
  if (it != records_.end()) {
    Warn("duplicate score for " + r.utterance_id + "/" + r.noise_type + "/" + r.method + "/" +
         r.metric + "; keeping the later value");
    it->second = r;
  } else {
    records_.emplace(key, r);
  }
  return true;
}

namespace {

bool ParseNumber(const std::string& s, double& out) {
  try {
    std::size_t used = 0;
    out = std::stod(s, &used);
    return used == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

std::vector<RejectedRow> ScoreStore::ImportCsv(const std::filesystem::path& path) {
  CsvTable t = ReadCsvFile(path);
  std::vector<RejectedRow> rejected;
  if (t.header.empty() && t.rows.empty()) return rejected;
  std::vector<int> col;
  for (const std::string& name : kScoreColumns) {
    int c = t.Column(name);
    if (c < 0) throw Error(path.string() + ": missing column '" + name + "'");
    col.push_back(c);
  }
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const int line = t.line_numbers[i];
    auto reject = [&](const std::string& why) {
      Warn(path.string() + ":" + std::to_string(line) + ": rejected row: " + why);
      rejected.push_back({line, why});
    };
    if (row.size() != t.header.size()) {
      reject("expected " + std::to_string(t.header.size()) + " fields, got " +
             std::to_string(row.size()));
      continue;
    }
    ScoreRecord r;
    r.utterance_id = row[col[0]];
    r.noise_type = row[col[1]];
    r.method = row[col[4]];
    r.metric = row[col[5]];
    if (!ParseNumber(row[col[2]], r.sir_db) || !ParseNumber(row[col[3]], r.sar_db) ||
        !ParseNumber(row[col[6]], r.value)) {
      reject("unparsable number");
      continue;
    }
    std::string why;
    if (!Add(r, &why)) reject(why);
  }
  return rejected;
}

std::vector<ScoreRecord> ScoreStore::records() const {
  std::vector<ScoreRecord> out;
  out.reserve(records_.size());
  for (const auto& [k, r] : records_) out.push_back(r);
  return out;
}

void ScoreStore::WriteCsv(const std::filesystem::path& path) const {
  CsvTable t;
  t.header = kScoreColumns;
  for (const auto& [k, r] : records_)
    t.rows.push_back({r.utterance_id, r.noise_type, FormatDouble(r.sir_db), FormatDouble(r.sar_db),
                      r.method, r.metric, FormatDouble(r.value)});
  WriteCsvFile(path, t);
}

std::size_t AggregateTable::TotalCount() const {
  std::size_t n = 0;
  for (const auto& row : cells)
    for (const AggregateCell& c : row) n += c.count;
  return n;
}

namespace {

struct RowKey {
  std::string noise;
  double sir = 0.0;
  double sar = 0.0;
  bool operator<(const RowKey& o) const {
    return std::tie(noise, sir, sar) < std::tie(o.noise, o.sir, o.sar);
  }
};

}  // namespace

AggregateTable Aggregate(const std::vector<ScoreRecord>& records, const std::string& metric,
                         GroupBy group_by, std::optional<double> sar_filter) {
  AggregateTable t;
  t.metric = metric;
  t.group_by = group_by;
  std::map<RowKey, std::map<std::string, std::vector<double>>> groups;
  std::set<std::string> methods;
  for (const ScoreRecord& r : records) {
    if (r.metric != metric) continue;
    if (sar_filter && r.sar_db != *sar_filter) continue;
    RowKey k;
    if (group_by == GroupBy::kNoiseType) k.noise = r.noise_type;
    if (group_by == GroupBy::kSir || group_by == GroupBy::kSirSar) k.sir = r.sir_db;
    if (group_by == GroupBy::kSar || group_by == GroupBy::kSirSar) k.sar = r.sar_db;
    groups[k][r.method].push_back(r.value);
    methods.insert(r.method);
  }
  t.methods.assign(methods.begin(), methods.end());
  switch (group_by) {
    case GroupBy::kNoiseType: t.key_columns = {"noise_type"}; break;
    case GroupBy::kSir: t.key_columns = {"sir_db"}; break;
    case GroupBy::kSar: t.key_columns = {"sar_db"}; break;
    case GroupBy::kSirSar: t.key_columns = {"sir_db", "sar_db"}; break;
  }
  for (auto& [k, by_method] : groups) {
    std::vector<std::string> key;
    switch (group_by) {
      case GroupBy::kNoiseType: key = {k.noise}; break;
      case GroupBy::kSir: key = {FormatDouble(k.sir)}; break;
      case GroupBy::kSar: key = {FormatDouble(k.sar)}; break;
      case GroupBy::kSirSar: key = {FormatDouble(k.sir), FormatDouble(k.sar)}; break;
    }
    t.row_keys.push_back(key);
    std::vector<AggregateCell> row;
    for (const std::string& m : t.methods) {
      AggregateCell c;
      auto it = by_method.find(m);
      if (it != by_method.end()) {
        std::vector<double>& v = it->second;
        std::sort(v.begin(), v.end());
        double s = 0.0;
        for (double x : v) s += x;
        c.count = v.size();
        c.mean = s / static_cast<double>(v.size());
      }
      row.push_back(c);
    }
    t.cells.push_back(std::move(row));
  }
  return t;
}

void WriteAggregateCsv(const std::filesystem::path& path, const std::vector<AggregateTable>& tables) {
  CsvTable out;
  for (const AggregateTable& t : tables) {
    std::vector<std::string> header{"metric"};
    header.insert(header.end(), t.key_columns.begin(), t.key_columns.end());
    header.insert(header.end(), t.methods.begin(), t.methods.end());
    if (out.header.empty()) {
      out.header = header;
    } else if (out.header != header) {
      // Differently shaped tables are separated by their own header row.
      out.rows.push_back({});
      out.rows.push_back(header);
    }
    for (std::size_t r = 0; r < t.row_keys.size(); ++r) {
      std::vector<std::string> row{t.metric};
      row.insert(row.end(), t.row_keys[r].begin(), t.row_keys[r].end());
      for (const AggregateCell& c : t.cells[r]) row.push_back(c.count ? FormatDouble(c.mean) : "");
      out.rows.push_back(row);
    }
  }
  WriteCsvFile(path, out);
}

}  // namespace avse::metrics
