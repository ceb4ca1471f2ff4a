#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace smartflow::util {

// Splits one CSV record. Handles double-quoted fields with embedded commas
// and "" escapes; does not handle embedded newlines (trip logs never carry them).
std::vector<std::string> split_csv_line(const std::string& line, char delim = ',');

std::string trim(const std::string& s);

// "YYYY-MM-DD HH:MM:SS" -> seconds since 1970-01-01 00:00:00 (no time zone).
std::optional<std::int64_t> parse_timestamp(const std::string& s);

// "YYYY-MM-DD" -> days since 1970-01-01.
std::optional<std::int64_t> parse_date(const std::string& s);

std::int64_t days_from_civil(int year, int month, int day);

// Minutes since midnight -> "HH:MM". Negative input is a caller bug.
std::string format_hhmm(int minutes);

// Fixed two-decimal rendering used for kilometre figures everywhere
// (plan documents, reports, grounding) so the same value always prints
// the same bytes.
std::string format_km(double km);

double round2(double x);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

}  // namespace smartflow::util
