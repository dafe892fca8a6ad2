#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "uacep/grid.hpp"

namespace uacep {

// LATD container, little-endian:
//   "LATD" | u32 version = 1 | u64 record count
//   per record: u32 metadata length | UTF-8 JSON metadata
//               | float32[10*50*50] input | float32[50*50] target
inline constexpr std::uint32_t kLatdVersion = 1;
inline constexpr std::size_t kLatdHeaderSize = 16;
inline constexpr std::size_t kInputFloats = 10 * kGridRes * kGridRes;
inline constexpr std::size_t kTargetFloats = kGridRes * kGridRes;

struct RecordMeta {
  std::int64_t job_id = 0;
  std::string mesh_id;
  std::string cohort_tag;
  std::string site_name;
  int sample_index = 0;
  double sigma_l = 0.0;
  double sigma_t = 0.0;
  std::uint64_t seed = 0;
  std::string solver_config_hash;
  double max_lat_ms = 0.0;
  double surface_area_mm2 = 0.0;

  nlohmann::json to_json() const;
  static RecordMeta from_json(const nlohmann::json& j);
};

struct SampleRecord {
  GridField input;   // 10 x 50 x 50
  GridField target;  // 1 x 50 x 50, -1 where never activated
  RecordMeta meta;
};

std::string encode_record(const SampleRecord& record);

// Validates the record invariants (shapes, finite values, sigma channels).
void check_record(const SampleRecord& record);

struct LatdIndex {
  std::uint64_t header_count = 0;
  std::vector<std::uint64_t> offsets;  // complete records, file order
  std::uint64_t valid_end = kLatdHeaderSize;
  std::uint64_t file_size = 0;
};

// Walks the record framing. Records beyond the header count or a torn
// trailing record are reported through valid_end < file_size.
LatdIndex scan_latd(const std::filesystem::path& path);

class LatdReader {
 public:
  explicit LatdReader(const std::filesystem::path& path);

  std::size_t size() const { return index_.offsets.size(); }
  const LatdIndex& index() const { return index_; }
  SampleRecord read(std::size_t i) const;
  RecordMeta read_meta(std::size_t i) const;
  // Raw bytes of record i (framing included).
  std::string read_raw(std::size_t i) const;

 private:
  std::filesystem::path path_;
  LatdIndex index_;
};

// Appender. Each append writes the record, syncs, then bumps the header
// count and syncs again, so the file is valid after any prefix of appends.
class LatdWriter {
 public:
  // Creates a new container, replacing any existing file.
  static LatdWriter create(const std::filesystem::path& path);
  // Opens an existing container, dropping any torn trailing bytes.
  static LatdWriter open_for_append(const std::filesystem::path& path);

  LatdWriter(LatdWriter&& other) noexcept;
  LatdWriter& operator=(LatdWriter&&) = delete;
  LatdWriter(const LatdWriter&) = delete;
  ~LatdWriter();

  // Returns the byte offset of the new record.
  std::uint64_t append(const SampleRecord& record);
  std::uint64_t count() const { return count_; }
  const std::vector<std::uint64_t>& offsets() const { return offsets_; }

 private:
  LatdWriter(int fd, std::filesystem::path path, std::uint64_t count, std::uint64_t end,
             std::vector<std::uint64_t> offsets);

  int fd_ = -1;
  std::filesystem::path path_;
  std::uint64_t count_ = 0;
  std::uint64_t end_ = kLatdHeaderSize;
  std::vector<std::uint64_t> offsets_;
};

// Loads the target grid of record i from "path:i" style references.
SampleRecord read_record(const std::filesystem::path& path, std::size_t index);

}  // namespace uacep
