#pragma once

#include <istream>
#include <string>
#include <vector>

namespace sagechain {

// RFC 4180 reader: comma delimiter, double-quoted fields with "" escapes,
// embedded newlines inside quotes, LF or CRLF record ends. A leading UTF-8
// BOM is skipped.
class CsvReader {
public:
    explicit CsvReader(std::istream& in) : in_(in) {}

    // False at end of input. Blank lines are skipped.
    bool next(std::vector<std::string>& record);
    std::size_t records_read() const noexcept { return records_; }

private:
    std::istream& in_;
    std::size_t records_ = 0;
    bool at_start_ = true;
};

// Quotes a field when it contains a comma, quote or newline.
std::string csv_escape(const std::string& field);

}  // namespace sagechain
