#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace gr {

// RFC 4180 reader: comma-delimited, double-quote escaping, quoted fields may
// span lines. CRLF and LF line endings are both accepted.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // Returns false at end of input. Blank lines are skipped.
  bool next(std::vector<std::string>& fields);

  // 1-based physical line number where the last returned record started.
  std::size_t line() const { return record_line_; }

 private:
  std::istream& in_;
  std::string buffer_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace gr
