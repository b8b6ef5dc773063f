#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace lannlab {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

bool parse_double(std::string_view text, double& out);

/// Splits on commas and trims surrounding whitespace. No quoting support;
/// every file this project reads or writes is purely numeric or plain tags.
std::vector<std::string> split_csv_line(std::string_view line);

class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path);

    void header(const std::vector<std::string>& columns);

    class Row {
    public:
        explicit Row(std::ofstream& out) : out_(out) {}
        Row(const Row&) = delete;
        Row& operator=(const Row&) = delete;
        ~Row() { out_ << '\n'; }

        Row& operator<<(double v);
        Row& operator<<(int v);
        Row& operator<<(long v);
        Row& operator<<(long long v);
        Row& operator<<(unsigned long v);
        Row& operator<<(bool v);
        Row& operator<<(std::string_view v);
        Row& operator<<(const char* v) { return *this << std::string_view(v); }

    private:
        void sep();
        std::ofstream& out_;
        bool first_ = true;
    };

    Row row() { return Row(out_); }

private:
    std::ofstream out_;
    std::filesystem::path path_;
};

}  // namespace lannlab
