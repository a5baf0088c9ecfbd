#pragma once

// Flat binary tensor container.
//
//   [u64 little-endian header length N][N bytes UTF-8 JSON header][data region]
//
// The JSON header is an object mapping tensor name to
//   {"dtype": "F32", "shape": [..], "offset": <byte offset into data region>,
//    "length": <byte length>}
// plus an optional "metadata" object. Data is row-major little-endian float32.

#include "genderbias/tensor_ops.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace genderbias {

enum class ContainerErrorKind {
  kTruncated,
  kMalformedHeader,
  kUnsupportedDtype,
  kOutOfBounds,
  kDuplicateName,
  kIo,
};

const char* to_string(ContainerErrorKind kind);

class ContainerError : public std::runtime_error {
 public:
  ContainerError(ContainerErrorKind kind, const std::string& what);
  ContainerErrorKind kind() const noexcept { return kind_; }

 private:
  ContainerErrorKind kind_;
};

struct RawTensor {
  std::vector<Index> shape;
  std::vector<double> values;  // row-major, widened from float32

  Index element_count() const;
  bool operator==(const RawTensor&) const = default;
};

struct RawContainer {
  std::map<std::string, RawTensor> tensors;
  nlohmann::json metadata = nlohmann::json::object();

  bool operator==(const RawContainer&) const = default;
};

inline constexpr const char* kMetadataKey = "metadata";

RawContainer parse_container(std::span<const std::byte> bytes);
RawContainer read_container(const std::filesystem::path& path);

/// Values are narrowed to float32 on write; tensors are laid out in name order.
std::vector<std::byte> serialize_container(const RawContainer& container);
void write_container(const std::filesystem::path& path, const RawContainer& container);

RawTensor to_raw_tensor(const Matrix& m);
RawTensor to_raw_vector(const Matrix& row);

}  // namespace genderbias
