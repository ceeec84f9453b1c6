#include "scimetric/csv.hpp"

#include <boost/tokenizer.hpp>

#include <charconv>
#include <system_error>

#include "scimetric/error.hpp"

namespace scimetric::csv {

std::vector<std::string> split(const std::string& line) {
  using Separator = boost::escaped_list_separator<char>;
  // No escape character: RFC 4180 doubles quotes instead.
  boost::tokenizer<Separator> tok(line, Separator("", ",", "\""));
  std::vector<std::string> out(tok.begin(), tok.end());
  return out;
}

std::string escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

Reader::Reader(const std::filesystem::path& path) : in_(path), path_(path) {
  if (!in_) throw DataError("cannot open " + path.string());
  std::vector<std::string> fields;
  if (!next(fields)) throw DataError(path.string() + ": missing header row");
  header_ = std::move(fields);
}

std::size_t Reader::column(const std::string& name) const {
  for (std::size_t k = 0; k < header_.size(); ++k)
    if (header_[k] == name) return k;
  throw DataError(path_.string() + ": missing column '" + name + "'");
}

bool Reader::next(std::vector<std::string>& fields) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_ == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      fields = split(line);
    } catch (const boost::escaped_list_error&) {
      fields.clear();  // reported by the caller as a malformed row
    }
    return true;
  }
  return false;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool parse_int(const std::string& s, int& out) {
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc() && res.ptr == end;
}

bool parse_double(const std::string& s, double& out) {
  const char* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc() && res.ptr == end;
}

}  // namespace scimetric::csv
