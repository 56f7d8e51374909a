#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace domescan {

// LDT container record:
//   magic "LDT1" | dtype u8 | ndim u8 | reserved u16 | ndim x dim u32 | row-major payload
// All little-endian. A .ldt file holds one or more records back to back.

enum class DType : std::uint8_t { kFloat32 = 1, kUInt32 = 2, kUInt8 = 3 };

inline constexpr std::size_t kTensorHeaderBytes = 8;
inline constexpr std::size_t kMaxTensorDims = 8;
/// Largest payload a reader will accept.
inline constexpr std::uint64_t kMaxTensorPayloadBytes = std::uint64_t{1} << 32;

std::size_t dtype_size(DType dtype);

/// Raw tensor record. `payload` is little-endian element data.
struct Tensor {
  DType dtype = DType::kFloat32;
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> payload;

  std::size_t element_count() const;

  static Tensor from_floats(std::vector<std::uint32_t> dims, std::span<const float> values);
  static Tensor from_u32(std::vector<std::uint32_t> dims, std::span<const std::uint32_t> values);
  static Tensor from_u8(std::vector<std::uint32_t> dims, std::span<const std::uint8_t> values);

  /// Throw SchemaViolation on a dtype mismatch.
  std::vector<float> floats() const;
  std::vector<std::uint32_t> u32() const;
  std::vector<std::uint8_t> u8() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::size_t encoded_size(const Tensor& tensor);
void encode_tensor(const Tensor& tensor, std::vector<std::uint8_t>& out);

/// Decodes the record at the front of `bytes` and advances it past the
/// record. Errors: BadMagic, UnsupportedDtype, DimOverflow, TruncatedFile.
Tensor decode_tensor(std::span<const std::uint8_t>& bytes);

/// Whole-file helpers; reading requires the file to hold exactly the records.
void write_tensors(const std::string& path, std::span<const Tensor> tensors);
std::vector<Tensor> read_tensors(const std::string& path);
std::vector<Tensor> decode_tensors(std::span<const std::uint8_t> bytes);

}  // namespace domescan
