#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace typomerge {

/// On-disk element types. Everything is materialized as F32 in memory.
enum class DType { F32, F16, BF16 };

std::string_view to_string(DType dtype) noexcept;
std::optional<DType> parse_dtype(std::string_view name) noexcept;
std::size_t dtype_size(DType dtype) noexcept;

using Shape = std::vector<std::int64_t>;

/// Number of elements implied by a shape. The empty shape is a scalar.
std::size_t element_count(const Shape& shape);

struct Tensor {
  Shape shape;
  std::vector<float> data;  // row-major

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

/// Sidecar metadata (adapter.json).
struct AdapterManifest {
  std::string language;
  std::string architecture = "unknown";
  std::int64_t hidden_size = 0;
  double reduction_factor = 0.0;
  std::optional<std::int64_t> layer_count;
  nlohmann::json provenance = nlohmann::json::object();

  friend bool operator==(const AdapterManifest&, const AdapterManifest&) = default;
};

nlohmann::json to_json(const AdapterManifest& manifest);
/// Throws Error(MalformedFile) if a required key is missing or mistyped.
AdapterManifest manifest_from_json(const nlohmann::json& j);

/// Named f32 tensors plus manifest. Tensor names iterate lexicographically.
struct AdapterCheckpoint {
  std::map<std::string, Tensor> tensors;
  AdapterManifest manifest;

  /// Checks |data| == product(shape) and, unless `allow_nonfinite`, that every
  /// value is finite. Throws Error(MalformedContainer|NonfiniteInput).
  void validate(bool allow_nonfinite = false) const;

  friend bool operator==(const AdapterCheckpoint&, const AdapterCheckpoint&) = default;
};

struct TensorSpec {
  Shape shape;
  DType dtype = DType::F32;

  friend bool operator==(const TensorSpec&, const TensorSpec&) = default;
};

/// (name -> shape, dtype). Two checkpoints are compatible iff schemas are equal.
using CheckpointSchema = std::map<std::string, TensorSpec>;

CheckpointSchema schema_of(const AdapterCheckpoint& ckpt);

/// Throws Error(SchemaMismatch) naming both sides and the first offending
/// tensor when the schemas differ.
void require_same_schema(const CheckpointSchema& a, std::string_view a_label, const CheckpointSchema& b,
                         std::string_view b_label);

}  // namespace typomerge
