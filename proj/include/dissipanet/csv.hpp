#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dissipanet::csv {

/// 17 significant digits, so every double round-trips.
std::string format_double(double v);

/// RFC 4180 field quoting (only when needed).
std::string quote(const std::string& field);

/// Writes one record terminated by CRLF.
void write_row(std::ostream& os, const std::vector<std::string>& fields);

/// Writes `content` to `path` through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace dissipanet::csv
