#include "pfimex/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "json.hpp"

#include "pfimex/errors.hpp"

namespace pfimex {

namespace {

constexpr int kFormatVersion = 1;

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
}

SnapshotHeader parse_header(const std::string& line, const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw HeaderMismatch(path + ": header is not valid JSON (" + e.what() + ")");
  }
  SnapshotHeader h;
  try {
    h.format_version = j.at("format_version").get<int>();
    h.dim = j.at("dim").get<int>();
    h.n = j.at("n").get<std::vector<std::size_t>>();
    h.length = j.at("length").get<std::vector<double>>();
    h.t = j.at("t").get<double>();
    h.model_name = j.at("model_name").get<std::string>();
    if (j.at("byte_order").get<std::string>() != "little") throw HeaderMismatch(path + ": unsupported byte_order");
    if (j.at("scalar").get<std::string>() != "f64") throw HeaderMismatch(path + ": unsupported scalar type");
  } catch (const nlohmann::json::exception& e) {
    throw HeaderMismatch(path + ": malformed header (" + e.what() + ")");
  }
  if (h.format_version != kFormatVersion) {
    throw HeaderMismatch(path + ": unsupported format_version " + std::to_string(h.format_version));
  }
  if (h.dim < 1 || h.dim > 3 || h.n.size() != static_cast<std::size_t>(h.dim) ||
      h.length.size() != static_cast<std::size_t>(h.dim)) {
    throw HeaderMismatch(path + ": dim does not match the n/length arrays");
  }
  return h;
}

std::string header_line(const SnapshotHeader& h) {
  nlohmann::ordered_json j;
  j["format_version"] = h.format_version;
  j["dim"] = h.dim;
  j["n"] = h.n;
  j["length"] = h.length;
  j["t"] = h.t;
  j["model_name"] = h.model_name;
  j["byte_order"] = "little";
  j["scalar"] = "f64";
  return j.dump();
}

}  // namespace

void write_snapshot(const Field& field, const std::string& path, double t, const std::string& model_name) {
  const SpectralGrid& g = field.grid();
  SnapshotHeader h;
  h.format_version = kFormatVersion;
  h.dim = g.dim();
  h.n = g.n_per_axis();
  h.length = g.length_per_axis();
  h.t = t;
  h.model_name = model_name;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw SnapshotError("cannot open '" + path + "' for writing");
  out << header_line(h) << '\n';
  std::vector<std::uint64_t> buf(field.size());
  for (std::size_t i = 0; i < field.size(); ++i) buf[i] = to_little(std::bit_cast<std::uint64_t>(field[i]));
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
  if (!out) throw SnapshotError("write to '" + path + "' failed");
}

SnapshotHeader read_snapshot_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw SnapshotError(path + ": missing header line");
  return parse_header(line, path);
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw SnapshotError(path + ": missing header line");
  SnapshotHeader h = parse_header(line, path);

  GridPtr grid;
  try {
    grid = SpectralGrid::create(h.n, h.length);
  } catch (const Error& e) {
    throw HeaderMismatch(path + ": " + e.what());
  }
  Field f(grid);
  std::vector<std::uint64_t> buf(f.size());
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 8));
  if (static_cast<std::size_t>(in.gcount()) != buf.size() * 8) {
    throw SnapshotError(path + ": truncated payload (expected " + std::to_string(buf.size() * 8) + " bytes, got " +
                        std::to_string(in.gcount()) + ")");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw SnapshotError(path + ": trailing bytes after payload");
  for (std::size_t i = 0; i < buf.size(); ++i) f.values()[i] = std::bit_cast<double>(to_little(buf[i]));
  return {std::move(h), std::move(f)};
}

Field read_snapshot(const std::string& path, const GridPtr& grid) {
  Snapshot s = read_snapshot(path);
  if (!s.field.grid().same_shape(*grid)) {
    throw HeaderMismatch(path + ": stored grid shape does not match the requested grid");
  }
  Field out(grid);
  std::copy(s.field.values().begin(), s.field.values().end(), out.values().begin());
  return out;
}

}  // namespace pfimex
