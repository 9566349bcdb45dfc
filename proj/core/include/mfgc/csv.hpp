#pragma once

#include <string>
#include <vector>

namespace mfgc {

// Shortest round-trip decimal for a double; keeps CSV output byte-stable.
std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(const std::vector<std::string>& cells);
  void add_row_values(const std::vector<double>& values);
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  void write(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
  double number(std::size_t row, int col) const;
};

CsvTable read_csv(const std::string& path);

// Least-squares slope of log(y) against log(x); pairs with nonpositive
// entries are skipped.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mfgc
