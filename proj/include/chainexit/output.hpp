#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace chainexit
{

//! Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);

//! Shortest-roundtrip-safe "%.17g" rendering.
std::string format_number(double v);

//! RFC-4180 field: quoted when it holds a comma, quote, CR or LF.
std::string csv_field(std::string_view s);

//! In-memory CSV table with a fixed header.
class CsvTable
{
  public:
    explicit CsvTable(std::vector<std::string> header);

    class Row
    {
      public:
        Row& operator<<(double v);
        Row& operator<<(std::size_t v);
        Row& operator<<(int v);
        Row& operator<<(bool v);
        Row& operator<<(std::string_view s);
        Row& operator<<(const char* s) { return *this << std::string_view(s); }
        Row& blank();
        ~Row();

      private:
        friend class CsvTable;
        explicit Row(CsvTable& t) : table_(t) {}
        CsvTable& table_;
        std::vector<std::string> cells_;
    };

    Row row() { return Row(*this); }
    std::size_t columns() const noexcept { return header_.size(); }
    std::size_t rows() const noexcept { return rows_.size(); }
    std::string str() const;

  private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

//! Output directory that records a digest for every file it writes.
class OutputDir
{
  public:
    explicit OutputDir(std::filesystem::path dir);

    void write(const std::string& name, std::string_view bytes);
    void write(const std::string& name, const CsvTable& table) { write(name, table.str()); }

    //! Writes manifest.json: \a info plus a "files" entry for everything written so far.
    void write_manifest(nlohmann::json info) const;

    const std::filesystem::path& path() const noexcept { return dir_; }
    const nlohmann::json& files() const noexcept { return files_; }

  private:
    std::filesystem::path dir_;
    nlohmann::json files_ = nlohmann::json::object();
};

}  // namespace chainexit
