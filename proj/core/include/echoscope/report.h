#ifndef ECHOSCOPE_REPORT_H_
#define ECHOSCOPE_REPORT_H_

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace echoscope {

// Shortest round-trip decimal representation; identical bytes on every run.
std::string FormatDouble(double value);
std::string FormatOptional(const std::optional<double>& value);

// Backslash-escapes tab, newline, carriage return and backslash.
std::string EscapeField(std::string_view field);
std::string UnescapeField(std::string_view field);

std::vector<std::string> SplitTabs(std::string_view line);

// Tab-separated table with a header row.
class TsvTable {
 public:
  explicit TsvTable(std::vector<std::string> header);

  TsvTable& AddRow(std::vector<std::string> row);
  std::size_t num_rows() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  void Write(std::ostream& out) const;
  void WriteFile(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

TsvTable ReadTsvFile(const std::filesystem::path& path);

// Writes `contents` to `path`, creating parent directories. Throws
// std::runtime_error when the file cannot be written.
void WriteTextFile(const std::filesystem::path& path, std::string_view contents);
std::string ReadTextFile(const std::filesystem::path& path);

}  // namespace echoscope

#endif  // ECHOSCOPE_REPORT_H_
