#include "mqnmr/csv.hpp"

#include "mqnmr/errors.hpp"

#include <charconv>
#include <cmath>

namespace mqnmr {

std::string format_number(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (value == 0.0) {
        return "0";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary) {
    if (!out_) {
        throw ConfigError("cannot open output file " + path.string());
    }
    for (const auto& name : header) {
        field(name);
    }
    end_row();
}

CsvWriter& CsvWriter::field(std::string_view text) {
    if (!first_in_row_) {
        out_.put(',');
    }
    out_.write(text.data(), static_cast<std::streamsize>(text.size()));
    first_in_row_ = false;
    return *this;
}

CsvWriter& CsvWriter::field(double value) { return field(std::string_view(format_number(value))); }

CsvWriter& CsvWriter::field(int value) { return field(std::string_view(std::to_string(value))); }

void CsvWriter::end_row() {
    out_.put('\n');
    first_in_row_ = true;
}

}  // namespace mqnmr
