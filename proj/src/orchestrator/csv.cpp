#include "fedhvac/orchestrator/csv.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace fedhvac::orchestrator {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
    : out_(path, std::ios::binary), columns_(columns.size() + 1), path_(path) {
  if (!out_) throw IoError("cannot open " + path.string() + " for writing");
  out_ << "schema_version";
  for (const auto& c : columns) out_ << ',' << c;
  out_ << '\n';
}

CsvWriter& CsvWriter::cell(std::string_view s) {
  if (filled_ == 0) {
    out_ << kSchemaVersion;
    ++filled_;
  }
  if (s.find_first_of(",\"\n") != std::string_view::npos) {
    throw IoError("CSV cell contains a separator: " + std::string(s));
  }
  out_ << ',' << s;
  ++filled_;
  return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(std::string_view(format_double(v))); }

CsvWriter& CsvWriter::cell(std::uint64_t v) { return cell(std::string_view(std::to_string(v))); }

void CsvWriter::end_row() {
  if (filled_ != columns_) throw std::logic_error("CSV row has the wrong number of cells in " + path_.string());
  out_ << '\n';
  filled_ = 0;
  if (!out_) throw IoError("write failed for " + path_.string());
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw IoError("missing CSV column '" + std::string(name) + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> cells;
    std::stringstream ss(l);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!l.empty() && l.back() == ',') cells.emplace_back();
    return cells;
  };
  if (!std::getline(in, line)) throw IoError(path.string() + " is empty");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size()) throw IoError(path.string() + ": ragged row");
    t.rows.push_back(std::move(cells));
  }
  return t;
}

}  // namespace fedhvac::orchestrator
