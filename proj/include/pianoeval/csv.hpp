#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pianoeval {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index of `name`, or nullopt.
    std::optional<std::size_t> column(std::string_view name) const;
};

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// RFC 4180-style reader: quoted fields, doubled quotes, CRLF or LF line ends. Blank lines are skipped.
CsvTable parse_csv(std::string_view text);

std::string csv_escape(std::string_view field);
std::string csv_line(const std::vector<std::string>& fields);

}  // namespace pianoeval
