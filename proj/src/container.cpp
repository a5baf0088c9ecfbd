#include "genderbias/container.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

namespace genderbias {

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

const char* to_string(ContainerErrorKind kind) {
  switch (kind) {
    case ContainerErrorKind::kTruncated: return "truncated file";
    case ContainerErrorKind::kMalformedHeader: return "malformed header";
    case ContainerErrorKind::kUnsupportedDtype: return "unsupported dtype";
    case ContainerErrorKind::kOutOfBounds: return "offset/length out of bounds";
    case ContainerErrorKind::kDuplicateName: return "duplicate tensor name";
    case ContainerErrorKind::kIo: return "i/o error";
  }
  return "unknown";
}

ContainerError::ContainerError(ContainerErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

Index RawTensor::element_count() const {
  Index n = 1;
  for (Index d : shape) n *= d;
  return n;
}

namespace {

using nlohmann::json;

std::uint64_t read_u64_le(std::span<const std::byte> bytes) {
  std::uint64_t v = 0;
  std::memcpy(&v, bytes.data(), sizeof(v));
  return v;
}

// nlohmann::json keeps the last of duplicate keys; the callback sees them all.
json parse_header(std::string_view text) {
  std::set<std::string> seen;
  std::string duplicate;
  auto callback = [&](int depth, json::parse_event_t event, json& parsed) {
    if (event == json::parse_event_t::key && depth == 1) {
      auto name = parsed.get<std::string>();
      if (!seen.insert(name).second && duplicate.empty()) duplicate = name;
    }
    return true;
  };
  json header;
  try {
    header = json::parse(text.begin(), text.end(), callback);
  } catch (const json::exception& e) {
    throw ContainerError(ContainerErrorKind::kMalformedHeader, e.what());
  }
  if (!duplicate.empty()) throw ContainerError(ContainerErrorKind::kDuplicateName, duplicate);
  if (!header.is_object()) {
    throw ContainerError(ContainerErrorKind::kMalformedHeader, "header is not a JSON object");
  }
  return header;
}

std::uint64_t require_unsigned(const json& entry, const char* key, const std::string& name) {
  if (!entry.contains(key) || !entry[key].is_number_unsigned()) {
    throw ContainerError(ContainerErrorKind::kMalformedHeader,
                         "tensor '" + name + "' lacks unsigned field '" + key + "'");
  }
  return entry[key].get<std::uint64_t>();
}

}  // namespace

RawContainer parse_container(std::span<const std::byte> bytes) {
  if (bytes.size() < 8) {
    throw ContainerError(ContainerErrorKind::kTruncated,
                         "file shorter than the 8-byte header length field");
  }
  const std::uint64_t header_len = read_u64_le(bytes.first(8));
  if (header_len > bytes.size() - 8) {
    throw ContainerError(ContainerErrorKind::kTruncated,
                         "header length " + std::to_string(header_len) + " exceeds file size " +
                             std::to_string(bytes.size()));
  }
  const auto header_bytes = bytes.subspan(8, header_len);
  const json header = parse_header(
      std::string_view(reinterpret_cast<const char*>(header_bytes.data()), header_bytes.size()));
  const auto data = bytes.subspan(8 + header_len);

  RawContainer out;
  for (const auto& [name, entry] : header.items()) {
    if (name == kMetadataKey) {
      if (!entry.is_object()) {
        throw ContainerError(ContainerErrorKind::kMalformedHeader, "metadata is not an object");
      }
      out.metadata = entry;
      continue;
    }
    if (!entry.is_object()) {
      throw ContainerError(ContainerErrorKind::kMalformedHeader,
                           "entry for '" + name + "' is not an object");
    }
    if (!entry.contains("dtype") || !entry["dtype"].is_string()) {
      throw ContainerError(ContainerErrorKind::kMalformedHeader,
                           "tensor '" + name + "' lacks a dtype");
    }
    if (const auto dtype = entry["dtype"].get<std::string>(); dtype != "F32") {
      throw ContainerError(ContainerErrorKind::kUnsupportedDtype,
                           "tensor '" + name + "' has dtype " + dtype);
    }
    if (!entry.contains("shape") || !entry["shape"].is_array()) {
      throw ContainerError(ContainerErrorKind::kMalformedHeader,
                           "tensor '" + name + "' lacks a shape");
    }
    RawTensor tensor;
    for (const auto& dim : entry["shape"]) {
      if (!dim.is_number_unsigned()) {
        throw ContainerError(ContainerErrorKind::kMalformedHeader,
                             "tensor '" + name + "' has a non-integer dimension");
      }
      tensor.shape.push_back(static_cast<Index>(dim.get<std::uint64_t>()));
    }
    const std::uint64_t offset = require_unsigned(entry, "offset", name);
    const std::uint64_t length = require_unsigned(entry, "length", name);
    const auto count = static_cast<std::uint64_t>(tensor.element_count());
    if (length != count * sizeof(float)) {
      throw ContainerError(ContainerErrorKind::kMalformedHeader,
                           "tensor '" + name + "' byte length " + std::to_string(length) +
                               " does not match shape element count " + std::to_string(count));
    }
    if (offset > data.size() || length > data.size() - offset) {
      throw ContainerError(ContainerErrorKind::kOutOfBounds,
                           "tensor '" + name + "' spans [" + std::to_string(offset) + ", " +
                               std::to_string(offset + length) + ") but data region holds " +
                               std::to_string(data.size()) + " bytes");
    }
    tensor.values.resize(count);
    const std::byte* src = data.data() + offset;
    for (std::uint64_t i = 0; i < count; ++i) {
      float f;
      std::memcpy(&f, src + i * sizeof(float), sizeof(float));
      tensor.values[i] = static_cast<double>(f);
    }
    out.tensors.emplace(name, std::move(tensor));
  }
  return out;
}

RawContainer read_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ContainerError(ContainerErrorKind::kIo, "cannot open " + path.string());
  std::vector<char> buffer((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw ContainerError(ContainerErrorKind::kIo, "read failed for " + path.string());
  return parse_container(std::as_bytes(std::span(buffer)));
}

std::vector<std::byte> serialize_container(const RawContainer& container) {
  json header = json::object();
  if (!container.metadata.empty()) header[kMetadataKey] = container.metadata;
  std::uint64_t offset = 0;
  for (const auto& [name, tensor] : container.tensors) {
    if (name == kMetadataKey) {
      throw ContainerError(ContainerErrorKind::kMalformedHeader,
                           "tensor name collides with the metadata key");
    }
    const auto length = static_cast<std::uint64_t>(tensor.values.size()) * sizeof(float);
    header[name] = {{"dtype", "F32"}, {"shape", tensor.shape}, {"offset", offset}, {"length", length}};
    offset += length;
  }
  const std::string text = header.dump();

  std::vector<std::byte> out(8 + text.size() + offset);
  const std::uint64_t header_len = text.size();
  std::memcpy(out.data(), &header_len, sizeof(header_len));
  std::memcpy(out.data() + 8, text.data(), text.size());
  std::byte* dst = out.data() + 8 + text.size();
  for (const auto& [name, tensor] : container.tensors) {
    for (double v : tensor.values) {
      const auto f = static_cast<float>(v);
      std::memcpy(dst, &f, sizeof(f));
      dst += sizeof(f);
    }
  }
  return out;
}

void write_container(const std::filesystem::path& path, const RawContainer& container) {
  const auto bytes = serialize_container(container);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ContainerError(ContainerErrorKind::kIo, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ContainerError(ContainerErrorKind::kIo, "write failed for " + path.string());
}

RawTensor to_raw_tensor(const Matrix& m) {
  RawTensor t;
  t.shape = {m.rows(), m.cols()};
  t.values.assign(m.data(), m.data() + m.size());
  return t;
}

RawTensor to_raw_vector(const Matrix& row) {
  RawTensor t;
  t.shape = {row.size()};
  t.values.assign(row.data(), row.data() + row.size());
  return t;
}

}  // namespace genderbias
