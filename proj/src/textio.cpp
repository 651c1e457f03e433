#include "carlevel/textio.hpp"

#include "carlevel/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace carlevel {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) {
            out += sep;
        }
        out += parts[i];
    }
    return out;
}

int parse_int(std::string_view s, std::string_view what) {
    const std::string t = trim(s);
    int value = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw ValidationError("invalid " + std::string(what) + ": '" + t + "'");
    }
    return value;
}

double parse_double(std::string_view s, std::string_view what) {
    const std::string t = trim(s);
    if (t == "nan" || t == "NaN") {
        return std::nan("");
    }
    if (t == "inf") {
        return HUGE_VAL;
    }
    if (t == "-inf") {
        return -HUGE_VAL;
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
        throw ValidationError("invalid " + std::string(what) + ": '" + t + "'");
    }
    return value;
}

std::vector<double> parse_double_list(std::string_view s, std::string_view what) {
    std::vector<double> out;
    if (trim(s).empty()) {
        return out;
    }
    for (const auto& part : split(s, ',')) {
        out.push_back(parse_double(part, what));
    }
    return out;
}

std::string format_double(double value) {
    if (std::isnan(value)) {
        return "nan";
    }
    if (std::isinf(value)) {
        return value > 0 ? "inf" : "-inf";
    }
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    (void)ec;
    return std::string(buf, ptr);
}

std::string format_double_list(const std::vector<double>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) {
            out += ',';
        }
        out += format_double(values[i]);
    }
    return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw ValidationError("cannot write " + path.string());
        }
        out << contents;
        if (!out.flush()) {
            throw ValidationError("write failed for " + path.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void KeyValueFile::set(std::string key, std::string value) {
    for (auto& [k, v] : items_) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    items_.emplace_back(std::move(key), std::move(value));
}

std::optional<std::string> KeyValueFile::find(std::string_view key) const {
    for (const auto& [k, v] : items_) {
        if (k == key) {
            return v;
        }
    }
    return std::nullopt;
}

std::string KeyValueFile::get(std::string_view key) const {
    auto v = find(key);
    if (!v) {
        throw ValidationError("missing key '" + std::string(key) + "'");
    }
    return *v;
}

double KeyValueFile::get_double(std::string_view key) const { return parse_double(get(key), key); }

int KeyValueFile::get_int(std::string_view key) const { return parse_int(get(key), key); }

std::string KeyValueFile::to_string() const {
    std::string out;
    for (const auto& [k, v] : items_) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

KeyValueFile KeyValueFile::parse(const std::string& text) {
    KeyValueFile kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == '[') {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ValidationError("malformed key=value line: '" + t + "'");
        }
        std::string value = trim(t.substr(eq + 1));
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        kv.set(trim(t.substr(0, eq)), value);
    }
    return kv;
}

KeyValueFile KeyValueFile::read(const std::filesystem::path& path) { return parse(read_file(path)); }

void KeyValueFile::write(const std::filesystem::path& path) const { write_file_atomic(path, to_string()); }

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) {
            return i;
        }
    }
    throw ValidationError("missing CSV column '" + std::string(name) + "'");
}

bool CsvTable::has_column(std::string_view name) const {
    for (const auto& h : header) {
        if (h == name) {
            return true;
        }
    }
    return false;
}

std::string CsvTable::to_string() const {
    std::string out = join(header, ",") + "\n";
    for (const auto& row : rows) {
        out += join(row, ",");
        out += '\n';
    }
    return out;
}

CsvTable CsvTable::parse(const std::string& text) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            continue;
        }
        auto cells = split(line, ',');
        if (first) {
            table.header = std::move(cells);
            first = false;
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw ValidationError("CSV row has " + std::to_string(cells.size()) + " cells, header has " +
                                  std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    if (first) {
        throw ValidationError("empty CSV");
    }
    return table;
}

CsvTable CsvTable::read(const std::filesystem::path& path) { return parse(read_file(path)); }

void CsvTable::write(const std::filesystem::path& path) const { write_file_atomic(path, to_string()); }

}  // namespace carlevel
