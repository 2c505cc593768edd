#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "mjo/grid.hpp"

namespace mjo {

// On-disk format version shared by every container in the toolkit.
inline constexpr std::uint32_t kFormatVersion = 1;

/// Gridded-field file ("MJOG"). Fixed layout, little-endian:
///   bytes 0..3   magic "MJOG"
///   bytes 4..7   u32 format version
///   bytes 8..55  grid scalars: u64 n_lat, u64 n_lon, f64 lat_start,
///                f64 lat_step, f64 lon_start, f64 lon_step
///   bytes 56..79 u64 n_vars, u64 n_leads, i64 init_date
///   bytes 80..   payload: n_vars*n_leads*n_lat*n_lon f32 values in
///                (var, lead, lat, lon) row-major order
inline constexpr std::size_t kGridHeaderBytes = 4 + 4 + 6 * 8 + 3 * 8;

void write_grid_file(const AnomalyField& field, const std::filesystem::path& path);
AnomalyField read_grid_file(const std::filesystem::path& path);

/// CSV export, one row per element: var,lead,lat_idx,lon_idx,value.
void write_grid_csv(const AnomalyField& field, const std::filesystem::path& path);

/// Generic named-record container used by the derived artifacts
/// (climatology "MJOC", z-score "MJOZ", EOF basis "MJOE", checkpoints
/// "MJOW", attribution maps "MJOA"). Same header style as MJOG files:
/// magic, u32 version, then u64 record count and per record a length-
/// prefixed name, u64 rank, u64 dims, and an f64 payload.
class ArtifactWriter {
public:
  ArtifactWriter(std::string magic4);
  void add(const std::string& name, const std::vector<std::uint64_t>& dims,
           const std::vector<double>& data);
  void add_scalar(const std::string& name, double value);
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

private:
  struct Record {
    std::string name;
    std::vector<std::uint64_t> dims;
    std::vector<double> data;
  };
  std::string magic_;
  std::vector<Record> records_;
};

class ArtifactReader {
public:
  ArtifactReader(const std::filesystem::path& path, const std::string& expect_magic);
  bool has(const std::string& name) const;
  const std::vector<std::uint64_t>& dims(const std::string& name) const;
  const std::vector<double>& data(const std::string& name) const;
  double scalar(const std::string& name) const;
  std::vector<std::string> names() const;

private:
  struct Record {
    std::vector<std::uint64_t> dims;
    std::vector<double> data;
  };
  const Record& find(const std::string& name) const;
  std::map<std::string, Record> records_;
  std::string path_;
};

/// Writes bytes to path atomically (temp file in the same directory,
/// then rename).
void atomic_write_bytes(const std::filesystem::path& path, const std::string& bytes);
void atomic_write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace mjo
