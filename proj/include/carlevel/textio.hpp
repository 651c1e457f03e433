#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace carlevel {

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

int parse_int(std::string_view s, std::string_view what);
double parse_double(std::string_view s, std::string_view what);
std::vector<double> parse_double_list(std::string_view s, std::string_view what);

/// Shortest text that reads back to the same double.
std::string format_double(double value);
std::string format_double_list(const std::vector<double>& values);

/// Writes to a temporary sibling then renames over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

/// Ordered `key=value` text file. Blank lines and lines starting with '#' are
/// ignored on read; keys keep insertion order on write.
class KeyValueFile {
public:
    void set(std::string key, std::string value);
    void set(std::string key, double value) { set(std::move(key), format_double(value)); }
    void set(std::string key, int value) { set(std::move(key), std::to_string(value)); }
    void set(std::string key, long long value) { set(std::move(key), std::to_string(value)); }
    void set(std::string key, unsigned long long value) { set(std::move(key), std::to_string(value)); }
    void set(std::string key, bool value) { set(std::move(key), std::string(value ? "true" : "false")); }
    void set(std::string key, const char* value) { set(std::move(key), std::string(value)); }

    [[nodiscard]] std::optional<std::string> find(std::string_view key) const;
    [[nodiscard]] std::string get(std::string_view key) const;
    [[nodiscard]] double get_double(std::string_view key) const;
    [[nodiscard]] int get_int(std::string_view key) const;
    [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }

    [[nodiscard]] std::string to_string() const;
    static KeyValueFile parse(const std::string& text);
    static KeyValueFile read(const std::filesystem::path& path);
    void write(const std::filesystem::path& path) const;

private:
    std::vector<std::pair<std::string, std::string>> items_;
};

/// Header plus rows of string cells.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    [[nodiscard]] std::size_t column(std::string_view name) const;
    [[nodiscard]] bool has_column(std::string_view name) const;
    [[nodiscard]] std::string to_string() const;
    static CsvTable parse(const std::string& text);
    static CsvTable read(const std::filesystem::path& path);
    void write(const std::filesystem::path& path) const;
};

}  // namespace carlevel
