#include "peersel/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "peersel/errors.hpp"

namespace fs = std::filesystem;

namespace peersel {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            out.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    out.push_back(field);
    return out;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw_io("cannot open '" + path + "': " + std::strerror(errno));
    std::string line;
    if (!std::getline(in, line))
        throw_data("'" + path + "': empty file, header row required");
    CsvTable table;
    auto header = split_line(line);
    if (header.size() < 2)
        throw_data("'" + path + "': need a date column plus at least one series");
    table.columns.assign(header.begin() + 1, header.end());
    table.values.resize(table.columns.size());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (fields.size() != header.size())
            throw_data("'" + path + "' line " + std::to_string(lineno) + ": expected " +
                       std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
        table.stamps.push_back(parse_date(fields[0]));
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            const std::string& f = fields[c + 1];
            char* end = nullptr;
            double v = std::strtod(f.c_str(), &end);
            if (end == f.c_str() || *end != '\0')
                throw_data("'" + path + "' line " + std::to_string(lineno) + ": bad number '" + f + "'");
            table.values[c].push_back(v);
        }
    }
    return table;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw_io("cannot open '" + path + "': " + std::strerror(errno));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void atomic_write(const std::string& path, const std::string& content) {
    fs::path target(path);
    if (target.has_parent_path()) ensure_directory(target.parent_path().string());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw_io("cannot create '" + tmp.string() + "': " + std::strerror(errno));
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            throw_io("short write to '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw_io("cannot move '" + tmp.string() + "' into place: " + ec.message());
    }
}

void ensure_directory(const std::string& path) {
    if (path.empty()) return;
    std::error_code ec;
    fs::create_directories(path, ec);
    if (ec)
        throw_io("cannot create directory '" + path + "': " + ec.message());
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace peersel
