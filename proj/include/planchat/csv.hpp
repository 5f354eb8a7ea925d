#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace planchat::csv {

using Row = std::vector<std::string>;

/// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
/// Returns false if a quoted field is not terminated.
bool split_record(const std::string& line, Row& out);

/// Quotes a field only when it contains a comma, quote or newline.
std::string escape(const std::string& field);

void write_row(std::ostream& os, const Row& row);

}  // namespace planchat::csv
