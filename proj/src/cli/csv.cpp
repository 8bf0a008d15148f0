#include "repden/cli/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <unordered_map>

namespace repden::cli {

namespace {

std::string strip_cr(std::string s)
{
  if (!s.empty() && s.back() == '\r')
    s.pop_back();
  return s;
}

} // namespace

std::vector<SubpopSample> parse_samples(std::istream& in, const std::string& source)
{
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != "subpop_id,value")
    throw IoError(source + ": header must be exactly 'subpop_id,value'");

  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<double>> groups;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty())
      continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos)
      throw IoError(source + ":" + std::to_string(lineno) + ": expected 'subpop_id,value'");
    std::string id = line.substr(0, comma);
    const std::string field = line.substr(comma + 1);
    auto [it, fresh] = groups.try_emplace(id);
    if (fresh)
      order.push_back(id);
    if (field.empty())
      continue;
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size() || !std::isfinite(v))
      throw IoError(source + ":" + std::to_string(lineno) + ": bad value '" + field + "'");
    it->second.push_back(v);
  }
  if (in.bad())
    throw IoError(source + ": read error");

  std::vector<SubpopSample> out;
  out.reserve(order.size());
  for (auto& id : order)
    out.emplace_back(id, std::move(groups[id]));
  return out;
}

std::vector<SubpopSample> read_samples(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open " + path.string());
  return parse_samples(in, path.string());
}

std::string format_double(double v)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_samples(const std::filesystem::path& path, std::span<const SubpopSample> samples)
{
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << "subpop_id,value\n";
  for (const auto& s : samples)
    for (double v : s.obs)
      out << s.id << ',' << format_double(v) << '\n';
}

void write_columns(const std::filesystem::path& path, const std::string& header,
                   std::span<const double> a, std::span<const double> b)
{
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write " + path.string());
  out << header << '\n';
  for (std::size_t j = 0; j < a.size() && j < b.size(); ++j)
    out << format_double(a[j]) << ',' << format_double(b[j]) << '\n';
}

std::string safe_filename(const std::string& id)
{
  std::string out = id;
  for (char& c : out) {
    const bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                    c == '.' || c == '_' || c == '-';
    if (!ok)
      c = '_';
  }
  return out.empty() ? "_" : out;
}

} // namespace repden::cli
