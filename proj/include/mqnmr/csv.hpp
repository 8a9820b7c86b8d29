#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace mqnmr {

// Locale-independent shortest-round-trip formatting capped at 17
// significant digits; NaN is written as "nan".
std::string format_number(double value);

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    CsvWriter& field(std::string_view text);
    CsvWriter& field(double value);
    CsvWriter& field(int value);
    void end_row();

private:
    std::ofstream out_;
    bool first_in_row_ = true;
};

}  // namespace mqnmr
