#include "chainexit/output.hpp"

#include <cstdio>
#include <fstream>

#include <openssl/evp.h>

#include "chainexit/error.hpp"

namespace chainexit
{

std::string sha256_hex(std::string_view bytes)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i)
    {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 15]);
    }
    return out;
}

std::string format_number(double v)
{
    char buf[32];
    if (v == 0)
        v = 0;
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(std::string_view s)
{
    if (s.find_first_of(",\"\r\n") == std::string_view::npos)
        return std::string(s);
    std::string out = "\"";
    for (char c : s)
    {
        if (c == '"')
            out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

//---------------------------------------------------------------------------//
CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable::Row& CsvTable::Row::operator<<(double v)
{
    cells_.push_back(format_number(v));
    return *this;
}

CsvTable::Row& CsvTable::Row::operator<<(std::size_t v)
{
    cells_.push_back(std::to_string(v));
    return *this;
}

CsvTable::Row& CsvTable::Row::operator<<(int v)
{
    cells_.push_back(std::to_string(v));
    return *this;
}

CsvTable::Row& CsvTable::Row::operator<<(bool v)
{
    cells_.emplace_back(v ? "true" : "false");
    return *this;
}

CsvTable::Row& CsvTable::Row::operator<<(std::string_view s)
{
    cells_.push_back(csv_field(s));
    return *this;
}

CsvTable::Row& CsvTable::Row::blank()
{
    cells_.emplace_back();
    return *this;
}

CsvTable::Row::~Row()
{
    cells_.resize(table_.header_.size());
    table_.rows_.push_back(std::move(cells_));
}

std::string CsvTable::str() const
{
    std::string out;
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t k = 0; k < cells.size(); ++k)
        {
            if (k)
                out.push_back(',');
            out += cells[k];
        }
        out += "\r\n";
    };
    std::vector<std::string> head;
    for (const auto& h : header_)
        head.push_back(csv_field(h));
    line(head);
    for (const auto& r : rows_)
        line(r);
    return out;
}

//---------------------------------------------------------------------------//
OutputDir::OutputDir(std::filesystem::path dir) : dir_(std::move(dir))
{
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec)
        throw ConfigError("cannot create output directory " + dir_.string() + ": "
                          + ec.message());
}

void OutputDir::write(const std::string& name, std::string_view bytes)
{
    std::ofstream os(dir_ / name, std::ios::binary | std::ios::trunc);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os)
        throw ConfigError("cannot write " + (dir_ / name).string());
    files_[name] = {{"sha256", sha256_hex(bytes)}, {"bytes", bytes.size()}};
}

void OutputDir::write_manifest(nlohmann::json info) const
{
    info["files"] = files_;
    std::string text = info.dump(2) + "\n";
    std::ofstream os(dir_ / "manifest.json", std::ios::binary | std::ios::trunc);
    os << text;
    if (!os)
        throw ConfigError("cannot write " + (dir_ / "manifest.json").string());
}

}  // namespace chainexit
