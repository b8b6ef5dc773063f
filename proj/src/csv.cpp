#include "lannlab/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>

#include "lannlab/error.hpp"

namespace lannlab {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

bool parse_double(std::string_view text, double& out) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    if (text.empty()) return false;
    if (text.front() == '+') text.remove_prefix(1);
    const auto res = std::from_chars(text.data(), text.data() + text.size(), out);
    return res.ec == std::errc() && res.ptr == text.data() + text.size();
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        auto cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
        cells.emplace_back(cell);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

CsvWriter::CsvWriter(const std::filesystem::path& path) : out_(path), path_(path) {
    if (!out_) throw IoError("cannot write " + path.string());
}

void CsvWriter::header(const std::vector<std::string>& columns) {
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << '\n';
}

void CsvWriter::Row::sep() {
    if (!first_) out_ << ',';
    first_ = false;
}

CsvWriter::Row& CsvWriter::Row::operator<<(double v) {
    sep();
    out_ << format_double(v);
    return *this;
}
CsvWriter::Row& CsvWriter::Row::operator<<(int v) {
    sep();
    out_ << v;
    return *this;
}
CsvWriter::Row& CsvWriter::Row::operator<<(long v) {
    sep();
    out_ << v;
    return *this;
}
CsvWriter::Row& CsvWriter::Row::operator<<(long long v) {
    sep();
    out_ << v;
    return *this;
}
CsvWriter::Row& CsvWriter::Row::operator<<(unsigned long v) {
    sep();
    out_ << v;
    return *this;
}
CsvWriter::Row& CsvWriter::Row::operator<<(bool v) {
    sep();
    out_ << (v ? 1 : 0);
    return *this;
}
CsvWriter::Row& CsvWriter::Row::operator<<(std::string_view v) {
    sep();
    out_ << v;
    return *this;
}

}  // namespace lannlab
