#pragma once

#include "repden/presmooth.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace repden::cli {

//! Unreadable or malformed input and unwritable output.
class IoError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

//! Parses `subpop_id,value` rows. Subpopulations keep the order in which their
//! id first appears; a row with an empty value registers the id without adding
//! an observation.
std::vector<SubpopSample> parse_samples(std::istream& in, const std::string& source = "input");
std::vector<SubpopSample> read_samples(const std::filesystem::path& path);
void write_samples(const std::filesystem::path& path, std::span<const SubpopSample> samples);

//! 17 significant digits, enough to round-trip any double.
std::string format_double(double v);

//! Two-column CSV with the given header.
void write_columns(const std::filesystem::path& path, const std::string& header,
                   std::span<const double> a, std::span<const double> b);

//! Characters outside [A-Za-z0-9._-] become '_'.
std::string safe_filename(const std::string& id);

} // namespace repden::cli
