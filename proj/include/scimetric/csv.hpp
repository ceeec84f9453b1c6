#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace scimetric::csv {

// Splits one CSV line; honors double-quoted fields.
std::vector<std::string> split(const std::string& line);

// Quotes a field only when it contains a comma, quote or newline.
std::string escape(const std::string& field);

class Reader {
 public:
  // Throws DataError if the file cannot be opened or is empty.
  explicit Reader(const std::filesystem::path& path);

  const std::vector<std::string>& header() const noexcept { return header_; }
  // Index of a named column; throws DataError if absent.
  std::size_t column(const std::string& name) const;
  // Reads the next non-blank row. Returns false at end of file.
  bool next(std::vector<std::string>& fields);
  std::size_t line() const noexcept { return line_; }

 private:
  std::ifstream in_;
  std::vector<std::string> header_;
  std::size_t line_ = 0;
  std::filesystem::path path_;
};

// Formats a double with round-trip precision, locale-independent.
std::string format_double(double v);

bool parse_int(const std::string& s, int& out);
bool parse_double(const std::string& s, double& out);

}  // namespace scimetric::csv
