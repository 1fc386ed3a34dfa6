#include "typomerge/checkpoint.hpp"

#include <cmath>
#include <limits>

#include "typomerge/error.hpp"

namespace typomerge {

std::string_view to_string(DType dtype) noexcept {
  switch (dtype) {
    case DType::F32: return "F32";
    case DType::F16: return "F16";
    case DType::BF16: return "BF16";
  }
  return "F32";
}

std::optional<DType> parse_dtype(std::string_view name) noexcept {
  if (name == "F32") return DType::F32;
  if (name == "F16") return DType::F16;
  if (name == "BF16") return DType::BF16;
  return std::nullopt;
}

std::size_t dtype_size(DType dtype) noexcept { return dtype == DType::F32 ? 4 : 2; }

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto dim : shape) {
    if (dim <= 0) throw Error(ErrorCode::MalformedContainer, "tensor dimensions must be positive");
    const auto d = static_cast<std::size_t>(dim);
    if (n > std::numeric_limits<std::size_t>::max() / d) {
      throw Error(ErrorCode::MalformedContainer, "tensor shape overflows");
    }
    n *= d;
  }
  return n;
}

nlohmann::json to_json(const AdapterManifest& m) {
  nlohmann::json j = {
      {"language", m.language},
      {"architecture", m.architecture},
      {"hidden_size", m.hidden_size},
      {"reduction_factor", m.reduction_factor},
  };
  if (m.layer_count) j["layer_count"] = *m.layer_count;
  if (!m.provenance.empty()) j["provenance"] = m.provenance;
  return j;
}

AdapterManifest manifest_from_json(const nlohmann::json& j) {
  auto fail = [](const std::string& what) { return Error(ErrorCode::MalformedFile, "adapter manifest: " + what); };
  if (!j.is_object()) throw fail("not a JSON object");
  AdapterManifest m;
  if (!j.contains("language") || !j["language"].is_string()) throw fail("'language' must be a string");
  if (!j.contains("architecture") || !j["architecture"].is_string()) throw fail("'architecture' must be a string");
  if (!j.contains("hidden_size") || !j["hidden_size"].is_number_integer()) {
    throw fail("'hidden_size' must be an integer");
  }
  if (!j.contains("reduction_factor") || !j["reduction_factor"].is_number()) {
    throw fail("'reduction_factor' must be a number");
  }
  m.language = j["language"].get<std::string>();
  m.architecture = j["architecture"].get<std::string>();
  m.hidden_size = j["hidden_size"].get<std::int64_t>();
  m.reduction_factor = j["reduction_factor"].get<double>();
  if (j.contains("layer_count")) {
    if (!j["layer_count"].is_number_integer()) throw fail("'layer_count' must be an integer");
    m.layer_count = j["layer_count"].get<std::int64_t>();
  }
  if (j.contains("provenance")) {
    if (!j["provenance"].is_object()) throw fail("'provenance' must be an object");
    m.provenance = j["provenance"];
  }
  return m;
}

void AdapterCheckpoint::validate(bool allow_nonfinite) const {
  for (const auto& [name, t] : tensors) {
    if (t.data.size() != element_count(t.shape)) {
      throw Error(ErrorCode::MalformedContainer, "tensor '" + name + "' has " + std::to_string(t.data.size()) +
                                                     " values for its shape");
    }
    if (allow_nonfinite) continue;
    for (float v : t.data) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonfiniteInput, "tensor '" + name + "' contains NaN or Inf");
    }
  }
}

CheckpointSchema schema_of(const AdapterCheckpoint& ckpt) {
  CheckpointSchema schema;
  for (const auto& [name, t] : ckpt.tensors) schema.emplace(name, TensorSpec{t.shape, DType::F32});
  return schema;
}

namespace {

std::string shape_str(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

}  // namespace

void require_same_schema(const CheckpointSchema& a, std::string_view a_label, const CheckpointSchema& b,
                         std::string_view b_label) {
  auto ia = a.begin();
  auto ib = b.begin();
  const std::string pair = "'" + std::string(a_label) + "' vs '" + std::string(b_label) + "'";
  while (ia != a.end() || ib != b.end()) {
    if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
      throw Error(ErrorCode::SchemaMismatch, pair + ": tensor '" + ia->first + "' missing from '" +
                                                 std::string(b_label) + "'");
    }
    if (ia == a.end() || ib->first < ia->first) {
      throw Error(ErrorCode::SchemaMismatch, pair + ": tensor '" + ib->first + "' missing from '" +
                                                 std::string(a_label) + "'");
    }
    if (ia->second.shape != ib->second.shape) {
      throw Error(ErrorCode::SchemaMismatch, pair + ": tensor '" + ia->first + "' has shape " +
                                                 shape_str(ia->second.shape) + " vs " + shape_str(ib->second.shape));
    }
    if (ia->second.dtype != ib->second.dtype) {
      throw Error(ErrorCode::SchemaMismatch, pair + ": tensor '" + ia->first + "' has dtype " +
                                                 std::string(to_string(ia->second.dtype)) + " vs " +
                                                 std::string(to_string(ib->second.dtype)));
    }
    ++ia;
    ++ib;
  }
}

}  // namespace typomerge
