#include "bqlearn/bench.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_map>

namespace bqlearn::bench {
namespace {

bool parse_double(const std::string& text, double& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  if (first == last) return false;
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << csv_field(fields[i]);
  }
  out << '\n';
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name,
                        const char* role) {
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j] == name) return j;
  }
  throw Error(std::string(role) + " column '" + name + "' not found");
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  bool any = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && record[0].empty();
    if (!blank) {
      if (table.header.empty()) {
        table.header = std::move(record);
      } else {
        table.rows.push_back(std::move(record));
      }
    }
    record.clear();
  };

  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get(c);
      end_record();
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw Error("csv: unterminated quoted field");
  if (any && (field_started || !record.empty())) end_record();
  if (table.header.empty()) throw Error("csv: empty file");

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    if (table.rows[r].size() != table.header.size()) {
      throw Error("csv: row " + std::to_string(r + 1) + " has " +
                  std::to_string(table.rows[r].size()) + " fields, header has " +
                  std::to_string(table.header.size()));
    }
  }
  return table;
}

IngestedDataset ingest_csv(std::istream& in, const std::string& label_column,
                           const std::optional<std::string>& quality_column) {
  const CsvTable table = read_csv(in);
  if (table.rows.empty()) throw Error("csv: no data rows");
  const std::size_t label_col = find_column(table.header, label_column, "label");
  std::optional<std::size_t> quality_col;
  if (quality_column) quality_col = find_column(table.header, *quality_column, "quality");

  IngestedDataset out;
  out.label_column = label_column;
  std::vector<std::size_t> feature_cols;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j == label_col || (quality_col && j == *quality_col)) continue;
    feature_cols.push_back(j);
    out.feature_names.push_back(table.header[j]);
  }

  const auto n = static_cast<Index>(table.rows.size());
  BiqualityDataset& ds = out.dataset;
  ds.features.resize(n, static_cast<Index>(feature_cols.size()));
  ds.labels.resize(n);
  ds.sample_quality = Labels::Ones(n);

  std::unordered_map<std::string, int> codes;
  for (Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      double v;
      if (!parse_double(row[feature_cols[f]], v)) {
        throw Error("csv: non-numeric value '" + row[feature_cols[f]] + "' in column '" +
                    table.header[feature_cols[f]] + "' at row " + std::to_string(i + 1));
      }
      ds.features(i, static_cast<Index>(f)) = v;
    }
    const std::string& label = row[label_col];
    auto [it, inserted] = codes.emplace(label, static_cast<int>(out.class_names.size()));
    if (inserted) out.class_names.push_back(label);
    ds.labels[i] = it->second;
    if (quality_col) {
      const std::string& q = row[*quality_col];
      if (q != "0" && q != "1") throw Error("sample_quality must be 0 or 1");
      ds.sample_quality[i] = q == "1" ? 1 : 0;
    }
  }
  ds.n_classes = static_cast<int>(out.class_names.size());
  validate_dataset(ds);
  return out;
}

IngestedDataset ingest_csv(const std::string& path, const std::string& label_column,
                           const std::optional<std::string>& quality_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  return ingest_csv(in, label_column, quality_column);
}

void write_dataset_csv(std::ostream& out, const IngestedDataset& data) {
  const BiqualityDataset& ds = data.dataset;
  std::vector<std::string> fields = data.feature_names;
  fields.push_back(data.label_column);
  fields.emplace_back("sample_quality");
  write_row(out, fields);
  for (Index i = 0; i < ds.n_samples(); ++i) {
    fields.clear();
    for (Index j = 0; j < ds.features.cols(); ++j) fields.push_back(format_double(ds.features(i, j)));
    fields.push_back(data.class_names.at(static_cast<std::size_t>(ds.labels[i])));
    fields.push_back(std::to_string(ds.sample_quality[i]));
    write_row(out, fields);
  }
}

OutputFormat output_format_from_name(const std::string& name) {
  if (name == "csv") return OutputFormat::kCsv;
  if (name == "json") return OutputFormat::kJson;
  throw Error("unknown output format: " + name);
}

std::string format_results(const std::vector<ResultRow>& rows, OutputFormat format) {
  if (rows.empty()) throw Error("no result rows to emit");
  for (const ResultRow& r : rows) {
    if (r.config_hash != rows.front().config_hash) throw Error("mixed config_hash");
  }

  auto metric = [](const ResultRow& r, double v) {
    return r.error.empty() ? format_double(v) : std::string();
  };

  std::ostringstream out;
  if (format == OutputFormat::kCsv) {
    write_row(out, {"algorithm", "seed", "fold", "accuracy", "balanced_accuracy", "log_loss",
                    "n_test", "wall_time", "config_hash", "error"});
    for (const ResultRow& r : rows) {
      write_row(out, {r.algorithm, std::to_string(r.seed), std::to_string(r.fold),
                      metric(r, r.metrics.accuracy), metric(r, r.metrics.balanced_accuracy),
                      metric(r, r.metrics.log_loss), std::to_string(r.metrics.n_test),
                      format_double(r.wall_time), r.config_hash, r.error});
    }
    return out.str();
  }

  // Hand-written so that every double carries 17 significant digits.
  auto number = [&](const ResultRow& r, double v) {
    const std::string s = metric(r, v);
    return s.empty() ? std::string("null") : s;
  };
  out << "[\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ResultRow& r = rows[i];
    out << "  {\"algorithm\": " << Json(r.algorithm).dump() << ", \"seed\": " << r.seed
        << ", \"fold\": " << r.fold << ", \"accuracy\": " << number(r, r.metrics.accuracy)
        << ", \"balanced_accuracy\": " << number(r, r.metrics.balanced_accuracy)
        << ", \"log_loss\": " << number(r, r.metrics.log_loss)
        << ", \"n_test\": " << r.metrics.n_test << ", \"wall_time\": " << format_double(r.wall_time)
        << ", \"config_hash\": " << Json(r.config_hash).dump()
        << ", \"error\": " << Json(r.error).dump() << "}" << (i + 1 < rows.size() ? "," : "")
        << "\n";
  }
  out << "]\n";
  return out.str();
}

void emit_results(const std::vector<ResultRow>& rows, OutputFormat format, const std::string& path) {
  const std::string text = format_results(rows, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  out.flush();
  if (!out) throw Error("cannot write '" + path + "'");
}

std::string format_summary(const std::vector<SummaryRow>& summary) {
  std::ostringstream out;
  out << std::left << std::setw(28) << "algorithm" << std::right << std::setw(6) << "ok"
      << std::setw(8) << "failed" << std::setw(22) << "accuracy" << std::setw(22)
      << "balanced_accuracy" << std::setw(22) << "log_loss" << '\n';
  auto cell = [](double mean, double sd) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f +- %.4f", mean, sd);
    return std::string(buf);
  };
  for (const SummaryRow& s : summary) {
    out << std::left << std::setw(28) << s.algorithm << std::right << std::setw(6) << s.n_ok
        << std::setw(8) << s.n_failed;
    if (s.n_ok == 0) {
      out << std::setw(22) << "-" << std::setw(22) << "-" << std::setw(22) << "-" << '\n';
      continue;
    }
    out << std::setw(22) << cell(s.accuracy_mean, s.accuracy_sd) << std::setw(22)
        << cell(s.balanced_accuracy_mean, s.balanced_accuracy_sd) << std::setw(22)
        << cell(s.log_loss_mean, s.log_loss_sd) << '\n';
  }
  return out.str();
}

}  // namespace bqlearn::bench
