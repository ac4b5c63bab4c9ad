#include "gr/telemetry/csv.hpp"

namespace gr {

bool CsvReader::next(std::vector<std::string>& fields) {
  fields.clear();
  std::string line;
  while (true) {
    if (!std::getline(in_, line)) return false;
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) break;
  }
  record_line_ = line_;

  std::string field;
  bool in_quotes = false;
  std::size_t i = 0;
  while (true) {
    if (i == line.size()) {
      if (in_quotes) {
        std::string continuation;
        if (!std::getline(in_, continuation)) {
          fields.push_back(std::move(field));
          return true;  // unterminated quote: surface what we have
        }
        ++line_;
        if (!continuation.empty() && continuation.back() == '\r') continuation.pop_back();
        field.push_back('\n');
        line = std::move(continuation);
        i = 0;
        continue;
      }
      fields.push_back(std::move(field));
      return true;
    }
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
    ++i;
  }
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out.put(',');
    const auto& f = fields[i];
    if (f.find_first_of(",\"\n\r") == std::string::npos) {
      out << f;
    } else {
      out.put('"');
      for (char c : f) {
        if (c == '"') out.put('"');
        out.put(c);
      }
      out.put('"');
    }
  }
  out.put('\n');
}

}  // namespace gr
