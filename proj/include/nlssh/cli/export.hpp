#pragma once

// Artifact writers: CSV with 17-significant-digit numbers, the raw biphoton
// matrix dump, and the JSON run manifest.

#include <bit>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "../biphoton.hpp"

namespace nlssh::cli {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::string_view kToolName = "nlssh";
inline constexpr std::string_view kToolVersion = "0.1.0";

/// Shortest round-trip is not required; fixed 17 significant digits is.
inline std::string format_double(double x) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, end);
}

/// 64-bit FNV-1a; used to fingerprint manifests and artifact bytes.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xF];
  return s;
}

/// Accumulates a CSV document in memory. Null cells are written empty.
class CsvTable {
 public:
  explicit CsvTable(const std::vector<std::string>& header) {
    for (const auto& h : header) cell(std::string_view(h));
    text_ += '\n';
    first_ = true;
  }

  CsvTable& cell(std::string_view text) {
    if (!first_) text_ += ',';
    text_ += text;
    first_ = false;
    return *this;
  }
  CsvTable& cell(double x) { return cell(std::string_view(format_double(x))); }
  CsvTable& cell(std::optional<double> x) { return x ? cell(*x) : cell(std::string_view{}); }
  CsvTable& cell(long long x) { return cell(std::string_view(std::to_string(x))); }
  CsvTable& cell(int x) { return cell(static_cast<long long>(x)); }

  void end_row() {
    text_ += '\n';
    first_ = true;
    ++rows_;
  }

  std::size_t rows() const { return rows_; }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
  bool first_ = true;
  std::size_t rows_ = 0;
};

struct ArtifactRecord {
  std::string file;
  std::string kind;
  std::uint64_t fnv1a64 = 0;
  std::size_t bytes = 0;
};

/// Writes files into one output directory and remembers what it wrote.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  const std::filesystem::path& dir() const { return dir_; }
  const std::vector<ArtifactRecord>& records() const { return records_; }

  void write(const std::string& name, const std::string& kind, std::string_view bytes) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + (dir_ / name).string());
    records_.push_back({name, kind, fnv1a64(bytes), bytes.size()});
  }

  void write_csv(const std::string& name, const std::string& kind, const CsvTable& t) {
    write(name, kind, t.text());
  }

 private:
  std::filesystem::path dir_;
  std::vector<ArtifactRecord> records_;
};

/// Row-major (idler index major) little-endian float64 (re, im) pairs.
inline std::string biphoton_matrix_bytes(const BiphotonState& m) {
  std::string out;
  const auto n = m.amplitudes.rows();
  out.reserve(static_cast<std::size_t>(n * n * 16));
  auto put = [&](double x) {
    auto bits = std::bit_cast<std::uint64_t>(x);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
  };
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = 0; k < n; ++k) {
      put(m.amplitudes(j, k).real());
      put(m.amplitudes(j, k).imag());
    }
  return out;
}

inline nlohmann::ordered_json artifacts_json(const std::vector<ArtifactRecord>& records) {
  auto a = nlohmann::ordered_json::array();
  for (const auto& r : records)
    a.push_back({{"file", r.file}, {"kind", r.kind}, {"bytes", r.bytes}, {"fnv1a64", hex64(r.fnv1a64)}});
  return a;
}

}  // namespace nlssh::cli
