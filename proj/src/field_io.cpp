#include "uacep/field_io.hpp"

#include <cmath>
#include <fstream>
#include <iterator>

#include "uacep/binary.hpp"
#include "uacep/error.hpp"

namespace uacep {

using nlohmann::json;

namespace {

void write_blob(const std::filesystem::path& path, const json& header, const std::string& payload) {
  const std::string text = header.dump();
  std::string out;
  binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  out += payload;
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw RuntimeFailure("cannot write " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw RuntimeFailure("write failed for " + path.string());
}

// Returns the header and leaves the payload bytes in `payload`.
json read_blob(const std::filesystem::path& path, std::string& payload) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw ValidationError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  if (bytes.size() < 4) throw ParseError(path.string() + ": truncated header");
  const auto len = binary::get<std::uint32_t>(reinterpret_cast<const unsigned char*>(bytes.data()));
  if (bytes.size() < 4ULL + len) throw ParseError(path.string() + ": truncated header");
  json header;
  try {
    header = json::parse(bytes.substr(4, len));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  payload = bytes.substr(4 + len);
  return header;
}

}  // namespace

void write_lat_file(const std::filesystem::path& path, const LatField& lat, const json& extra) {
  json header = extra.is_object() ? extra : json::object();
  header["format"] = "lat";
  header["version"] = 1;
  header["vertex_count"] = lat.values.size();
  header["unactivated"] = kUnactivatedSerialized;
  header["activated_fraction"] = lat.activated_fraction;
  header["max_lat_ms"] = lat.max_lat();
  std::vector<float> values(lat.values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    values[i] = std::isfinite(lat.values[i]) ? static_cast<float>(lat.values[i]) : kUnactivatedSerialized;
  std::string payload;
  binary::put_floats(payload, values);
  write_blob(path, header, payload);
}

LatField read_lat_file(const std::filesystem::path& path, json* header_out) {
  std::string payload;
  const json header = read_blob(path, payload);
  if (header.value("format", "") != "lat") throw ParseError(path.string() + ": not a LAT file");
  const auto n = header.at("vertex_count").get<std::size_t>();
  if (payload.size() != n * sizeof(float)) throw ParseError(path.string() + ": payload size mismatch");
  std::vector<float> values(n);
  binary::get_floats(reinterpret_cast<const unsigned char*>(payload.data()), values);
  LatField lat;
  lat.values.resize(n);
  std::size_t activated = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (values[i] == kUnactivatedSerialized) {
      lat.values[i] = kUnactivated;
    } else {
      lat.values[i] = values[i];
      ++activated;
    }
  }
  lat.activated_fraction = n ? static_cast<double>(activated) / static_cast<double>(n) : 0.0;
  if (header_out) *header_out = header;
  return lat;
}

void write_grid_file(const std::filesystem::path& path, const GridField& grid) {
  grid.check();
  const json header = {{"format", "grid"},          {"version", 1},         {"channels", grid.channels},
                       {"height", grid.height},     {"width", grid.width},  {"channel_names", grid.channel_names}};
  std::string payload;
  binary::put_floats(payload, grid.data);
  payload.append(reinterpret_cast<const char*>(grid.mask.data()), grid.mask.size());
  write_blob(path, header, payload);
}

GridField read_grid_file(const std::filesystem::path& path) {
  std::string payload;
  const json header = read_blob(path, payload);
  if (header.value("format", "") != "grid") throw ParseError(path.string() + ": not a grid file");
  GridField grid = GridField::zeros(header.at("channels").get<int>(), header.at("height").get<int>(),
                                    header.at("width").get<int>(),
                                    header.at("channel_names").get<std::vector<std::string>>());
  const std::size_t floats = grid.data.size() * sizeof(float);
  if (payload.size() != floats + grid.mask.size()) throw ParseError(path.string() + ": payload size mismatch");
  binary::get_floats(reinterpret_cast<const unsigned char*>(payload.data()), grid.data);
  std::copy(payload.begin() + static_cast<long>(floats), payload.end(), grid.mask.begin());
  return grid;
}

}  // namespace uacep
