#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace yflow {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numeric table with a header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  // Throws CsvError if the column does not exist.
  std::vector<double> column(const std::string& name) const;
};

// 17 significant digits; "nan"/"inf" for non-finite values.
std::string format_double(double x);

// Writes columns of equal length under the given header; LF line endings.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& columns);

// Throws CsvError naming the file on I/O or parse errors.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace yflow
