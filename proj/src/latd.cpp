#include "uacep/latd.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>

#include "uacep/binary.hpp"
#include "uacep/ep_solver.hpp"
#include "uacep/error.hpp"
#include "uacep/projection.hpp"

namespace uacep {

using nlohmann::json;

json RecordMeta::to_json() const {
  return {{"job_id", job_id},
          {"mesh_id", mesh_id},
          {"cohort_tag", cohort_tag},
          {"site_name", site_name},
          {"sample_index", sample_index},
          {"sigma_l", sigma_l},
          {"sigma_t", sigma_t},
          {"seed", seed},
          {"solver_config_hash", solver_config_hash},
          {"max_lat_ms", max_lat_ms},
          {"surface_area_mm2", surface_area_mm2}};
}

RecordMeta RecordMeta::from_json(const json& j) {
  RecordMeta m;
  try {
    m.job_id = j.at("job_id").get<std::int64_t>();
    m.mesh_id = j.at("mesh_id").get<std::string>();
    m.cohort_tag = j.at("cohort_tag").get<std::string>();
    m.site_name = j.at("site_name").get<std::string>();
    m.sample_index = j.at("sample_index").get<int>();
    m.sigma_l = j.at("sigma_l").get<double>();
    m.sigma_t = j.at("sigma_t").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.solver_config_hash = j.at("solver_config_hash").get<std::string>();
    m.max_lat_ms = j.at("max_lat_ms").get<double>();
    m.surface_area_mm2 = j.at("surface_area_mm2").get<double>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("record metadata: ") + e.what());
  }
  return m;
}

void check_record(const SampleRecord& r) {
  if (r.input.channels != kInputChannels || r.input.height != kGridRes || r.input.width != kGridRes)
    throw ValidationError("record input must be 10x50x50");
  if (r.target.channels != 1 || r.target.height != kGridRes || r.target.width != kGridRes)
    throw ValidationError("record target must be 1x50x50");
  for (float x : r.input.data)
    if (!std::isfinite(x)) throw ValidationError("record input holds a non-finite value");
  for (float x : r.target.data)
    if (!std::isfinite(x) || (x < 0.0f && x != kUnactivatedSerialized))
      throw ValidationError("record target must be finite and non-negative or the sentinel");
  if (r.input(7, 0, 0) != static_cast<float>(r.meta.sigma_l) || r.input(8, 0, 0) != static_cast<float>(r.meta.sigma_t))
    throw ValidationError("record metadata conductivities do not match input channels");
}

std::string encode_record(const SampleRecord& record) {
  check_record(record);
  const std::string meta = record.meta.to_json().dump();
  std::string out;
  out.reserve(4 + meta.size() + 4 * (kInputFloats + kTargetFloats));
  binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
  out += meta;
  binary::put_floats(out, record.input.data);
  binary::put_floats(out, record.target.data);
  return out;
}

namespace {

class File {
 public:
  explicit File(const std::filesystem::path& path) : in_(path, std::ios::binary) {
    if (!in_) throw ValidationError("cannot open dataset " + path.string());
  }
  bool read_at(std::uint64_t offset, void* dst, std::size_t n) {
    in_.clear();
    in_.seekg(static_cast<std::streamoff>(offset));
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    return static_cast<std::size_t>(in_.gcount()) == n;
  }

 private:
  std::ifstream in_;
};

constexpr std::uint64_t kPayloadBytes = 4 * (kInputFloats + kTargetFloats);

void check_magic(const unsigned char* header, const std::filesystem::path& path) {
  if (std::memcmp(header, "LATD", 4) != 0) throw ParseError(path.string() + ": not a LATD container");
  const auto version = binary::get<std::uint32_t>(header + 4);
  if (version != kLatdVersion)
    throw ParseError(path.string() + ": unsupported LATD version " + std::to_string(version));
}

}  // namespace

LatdIndex scan_latd(const std::filesystem::path& path) {
  LatdIndex idx;
  std::error_code ec;
  idx.file_size = std::filesystem::file_size(path, ec);
  if (ec) throw ValidationError("cannot open dataset " + path.string() + ": " + ec.message());
  File file(path);
  unsigned char header[kLatdHeaderSize];
  if (!file.read_at(0, header, kLatdHeaderSize)) throw ParseError(path.string() + ": truncated LATD header");
  check_magic(header, path);
  idx.header_count = binary::get<std::uint64_t>(header + 8);

  std::uint64_t pos = kLatdHeaderSize;
  while (idx.offsets.size() < idx.header_count) {
    unsigned char len_bytes[4];
    if (!file.read_at(pos, len_bytes, 4)) break;
    const auto len = binary::get<std::uint32_t>(len_bytes);
    const std::uint64_t end = pos + 4 + len + kPayloadBytes;
    if (end > idx.file_size) break;
    idx.offsets.push_back(pos);
    pos = end;
  }
  idx.valid_end = pos;
  return idx;
}

LatdReader::LatdReader(const std::filesystem::path& path) : path_(path), index_(scan_latd(path)) {
  if (index_.offsets.size() != index_.header_count)
    throw ParseError(path.string() + ": header announces " + std::to_string(index_.header_count) +
                     " records but only " + std::to_string(index_.offsets.size()) + " are complete");
}

std::string LatdReader::read_raw(std::size_t i) const {
  if (i >= size()) throw ValidationError("record index " + std::to_string(i) + " out of range");
  const std::uint64_t begin = index_.offsets[i];
  const std::uint64_t end = i + 1 < size() ? index_.offsets[i + 1] : index_.valid_end;
  std::string bytes(end - begin, '\0');
  File file(path_);
  if (!file.read_at(begin, bytes.data(), bytes.size())) throw ParseError(path_.string() + ": short read");
  return bytes;
}

namespace {

RecordMeta parse_meta(const std::string& raw, std::uint32_t* len_out) {
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
  const auto len = binary::get<std::uint32_t>(p);
  if (len_out) *len_out = len;
  try {
    return RecordMeta::from_json(json::parse(raw.substr(4, len)));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("record metadata: ") + e.what());
  }
}

}  // namespace

RecordMeta LatdReader::read_meta(std::size_t i) const { return parse_meta(read_raw(i), nullptr); }

SampleRecord LatdReader::read(std::size_t i) const {
  const std::string raw = read_raw(i);
  std::uint32_t len = 0;
  SampleRecord r;
  r.meta = parse_meta(raw, &len);
  r.input = GridField::zeros(kInputChannels, kGridRes, kGridRes, input_channel_names());
  r.target = GridField::zeros(1, kGridRes, kGridRes, {"lat"});
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data()) + 4 + len;
  binary::get_floats(p, r.input.data);
  binary::get_floats(p + 4 * kInputFloats, r.target.data);
  for (std::size_t k = 0; k < r.target.mask.size(); ++k)
    r.target.mask[k] = r.target.data[k] != kUnactivatedSerialized ? 1 : 0;
  return r;
}

SampleRecord read_record(const std::filesystem::path& path, std::size_t index) { return LatdReader(path).read(index); }

// ---------------------------------------------------------------------------

namespace {

void write_all(int fd, const void* data, std::size_t n, std::uint64_t offset, const std::filesystem::path& path) {
  const auto* p = static_cast<const char*>(data);
  while (n > 0) {
    const ssize_t w = ::pwrite(fd, p, n, static_cast<off_t>(offset));
    if (w < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      throw RuntimeFailure((err == ENOSPC ? "disk full while writing " : "write failed for ") + path.string() + ": " +
                           std::strerror(err));
    }
    p += w;
    n -= static_cast<std::size_t>(w);
    offset += static_cast<std::uint64_t>(w);
  }
}

void sync(int fd, const std::filesystem::path& path) {
  if (::fsync(fd) != 0) throw RuntimeFailure("fsync failed for " + path.string() + ": " + std::strerror(errno));
}

std::string header_bytes(std::uint64_t count) {
  std::string h = "LATD";
  binary::put<std::uint32_t>(h, kLatdVersion);
  binary::put<std::uint64_t>(h, count);
  return h;
}

}  // namespace

LatdWriter::LatdWriter(int fd, std::filesystem::path path, std::uint64_t count, std::uint64_t end,
                       std::vector<std::uint64_t> offsets)
    : fd_(fd), path_(std::move(path)), count_(count), end_(end), offsets_(std::move(offsets)) {}

LatdWriter::LatdWriter(LatdWriter&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)),
      path_(std::move(other.path_)),
      count_(other.count_),
      end_(other.end_),
      offsets_(std::move(other.offsets_)) {}

LatdWriter::~LatdWriter() {
  if (fd_ >= 0) ::close(fd_);
}

LatdWriter LatdWriter::create(const std::filesystem::path& path) {
  const int fd = ::open(path.c_str(), O_RDWR | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw RuntimeFailure("cannot create " + path.string() + ": " + std::strerror(errno));
  LatdWriter w(fd, path, 0, kLatdHeaderSize, {});
  const std::string h = header_bytes(0);
  write_all(fd, h.data(), h.size(), 0, path);
  sync(fd, path);
  return w;
}

LatdWriter LatdWriter::open_for_append(const std::filesystem::path& path) {
  LatdIndex idx = scan_latd(path);
  const int fd = ::open(path.c_str(), O_RDWR | O_CLOEXEC);
  if (fd < 0) throw RuntimeFailure("cannot open " + path.string() + ": " + std::strerror(errno));
  const std::uint64_t count = idx.offsets.size();
  LatdWriter w(fd, path, count, idx.valid_end, std::move(idx.offsets));
  if (idx.valid_end != idx.file_size || idx.header_count != w.count_) {
    if (::ftruncate(fd, static_cast<off_t>(idx.valid_end)) != 0)
      throw RuntimeFailure("cannot truncate " + path.string() + ": " + std::strerror(errno));
    const std::string h = header_bytes(w.count_);
    write_all(fd, h.data(), h.size(), 0, path);
    sync(fd, path);
  }
  return w;
}

std::uint64_t LatdWriter::append(const SampleRecord& record) {
  const std::string bytes = encode_record(record);
  const std::uint64_t offset = end_;
  try {
    write_all(fd_, bytes.data(), bytes.size(), offset, path_);
    sync(fd_, path_);
  } catch (...) {
    // Drop the partial record so the container stays consistent.
    [[maybe_unused]] const int rc = ::ftruncate(fd_, static_cast<off_t>(offset));
    throw;
  }
  std::string count_bytes;
  binary::put<std::uint64_t>(count_bytes, count_ + 1);
  write_all(fd_, count_bytes.data(), count_bytes.size(), 8, path_);
  sync(fd_, path_);
  ++count_;
  end_ = offset + bytes.size();
  offsets_.push_back(offset);
  return offset;
}

}  // namespace uacep
