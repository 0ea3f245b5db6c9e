#include "mfdr/csv.hpp"

#include <array>
#include <charconv>
#include <sstream>

#include "mfdr/errors.hpp"

namespace mfdr {

std::string format_number(double value) {
    std::array<char, 64> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) return "nan";
    return std::string(buf.data(), end);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) throw ArgumentError("cannot write " + path.string());
    for (const auto& h : header) cell(h);
    end_row();
}

CsvWriter& CsvWriter::cell(double value) { return cell(format_number(value)); }

CsvWriter& CsvWriter::cell(long long value) { return cell(std::to_string(value)); }

CsvWriter& CsvWriter::cell(const std::string& value) {
    if (!first_in_row_) out_ << ',';
    out_ << value;
    first_in_row_ = false;
    return *this;
}

void CsvWriter::end_row() {
    out_ << '\n';
    first_in_row_ = true;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw ArgumentError("cannot write " + path.string());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_number(m(i, j));
        }
        out << '\n';
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        const auto b = field.find_first_not_of(" \t\r");
        const auto e = field.find_last_not_of(" \t\r");
        fields.push_back(b == std::string::npos ? std::string{} : field.substr(b, e - b + 1));
    }
    return fields;
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot read " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::vector<double> row;
        for (const auto& f : split_csv_line(line)) {
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc{} || ptr != f.data() + f.size()) throw ParseError("bad number '" + f + "'", line_no);
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size()) throw ParseError("ragged matrix row", line_no);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("empty matrix file", line_no);
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

}  // namespace mfdr
