#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "mfdr/types.hpp"

namespace mfdr {

/// Shortest round-trip decimal text for a double.
std::string format_number(double value);

/// Minimal CSV table writer. Numbers use round-trip formatting so identical
/// inputs produce byte-identical files.
class CsvWriter {
   public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    CsvWriter& cell(double value);
    CsvWriter& cell(long long value);
    CsvWriter& cell(const std::string& value);
    void end_row();

   private:
    std::ofstream out_;
    bool first_in_row_ = true;
};

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);

/// Splits one CSV line on commas, trimming surrounding whitespace.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace mfdr
