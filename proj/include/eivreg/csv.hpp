#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace eivreg {

class csv_error : public std::runtime_error
{
public:
  csv_error(const std::string& what, std::size_t line)
    : std::runtime_error("line " + std::to_string(line) + ": " + what)
    , line_(line)
  {
  }

  std::size_t line() const { return line_; }

private:
  std::size_t line_;
};

struct CsvTable
{
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const
  {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name)
        return i;
    throw std::out_of_range("csv: no column named '" + std::string(name) + "'");
  }
};

//! Shortest decimal text that parses back to exactly the same double.
inline std::string
format_double(double x)
{
  if (std::isnan(x))
    return "nan";
  if (std::isinf(x))
    return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, r.ptr);
}

inline double
parse_double(std::string_view text, std::size_t line = 0)
{
  if (text == "nan")
    return std::nan("");
  if (text == "inf")
    return INFINITY;
  if (text == "-inf")
    return -INFINITY;
  double x = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+')
    ++first;
  const auto r = std::from_chars(first, last, x);
  if (r.ec != std::errc() || r.ptr != last || text.empty())
    throw csv_error("not a number: '" + std::string(text) + "'", line);
  return x;
}

namespace detail {

inline std::string
quote_field(const std::string& f)
{
  if (f.find_first_of(",\"\n\r") == std::string::npos)
    return f;
  std::string out = "\"";
  for (char c : f) {
    if (c == '"')
      out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::vector<std::string>
split_record(const std::string& line, std::size_t lineno)
{
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      if (!cur.empty())
        throw csv_error("quote inside an unquoted field", lineno);
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted)
    throw csv_error("unterminated quoted field", lineno);
  out.push_back(std::move(cur));
  return out;
}

} // namespace detail

inline std::string
to_csv_string(const CsvTable& t)
{
  std::string out;
  auto emit = [&](const std::vector<std::string>& rec) {
    for (std::size_t i = 0; i < rec.size(); ++i) {
      if (i)
        out += ',';
      out += detail::quote_field(rec[i]);
    }
    out += '\n';
  };
  emit(t.header);
  for (const auto& r : t.rows) {
    if (r.size() != t.header.size())
      throw std::invalid_argument("csv: row width differs from the header");
    emit(r);
  }
  return out;
}

//! Parses text with a header line; every record must match the header width.
inline CsvTable
parse_csv(const std::string& text)
{
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty())
      continue;
    auto rec = detail::split_record(line, lineno);
    if (t.header.empty()) {
      t.header = std::move(rec);
      continue;
    }
    if (rec.size() != t.header.size())
      throw csv_error("expected " + std::to_string(t.header.size()) + " fields, found " +
                        std::to_string(rec.size()),
                      lineno);
    t.rows.push_back(std::move(rec));
  }
  if (t.header.empty())
    throw csv_error("missing header", lineno);
  return t;
}

//! Numeric column by name; a bad cell reports its 1-based line.
inline std::vector<double>
numeric_column(const CsvTable& t, std::string_view name)
{
  const std::size_t c = t.column(name);
  std::vector<double> out;
  out.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    out.push_back(parse_double(t.rows[i][c], i + 2));
  return out;
}

inline CsvTable
read_csv(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

//! Writes to a temporary sibling file and renames it over the target.
inline void
write_text_atomic(const std::filesystem::path& path, const std::string& text)
{
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out)
      throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void
write_csv(const std::filesystem::path& path, const CsvTable& t)
{
  write_text_atomic(path, to_csv_string(t));
}

} // namespace eivreg
