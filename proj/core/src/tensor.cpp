#include "domescan/tensor.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>

#include "byte_io.hpp"
#include "domescan/error.hpp"
#include "domescan/wire.hpp"

namespace domescan {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'L', 'D', 'T', '1'};

}  // namespace

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::kFloat32: return 4;
    case DType::kUInt32: return 4;
    case DType::kUInt8: return 1;
  }
  throw Error(ErrorCode::UnsupportedDtype, "dtype");
}

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

Tensor Tensor::from_floats(std::vector<std::uint32_t> dims, std::span<const float> values) {
  Tensor t{DType::kFloat32, std::move(dims), {}};
  if (t.element_count() != values.size()) throw Error(ErrorCode::DimensionMismatch, "tensor");
  t.payload.reserve(values.size() * 4);
  for (float v : values) detail::put_u32(t.payload, detail::float_bits(v));
  return t;
}

Tensor Tensor::from_u32(std::vector<std::uint32_t> dims, std::span<const std::uint32_t> values) {
  Tensor t{DType::kUInt32, std::move(dims), {}};
  if (t.element_count() != values.size()) throw Error(ErrorCode::DimensionMismatch, "tensor");
  t.payload.reserve(values.size() * 4);
  for (auto v : values) detail::put_u32(t.payload, v);
  return t;
}

Tensor Tensor::from_u8(std::vector<std::uint32_t> dims, std::span<const std::uint8_t> values) {
  Tensor t{DType::kUInt8, std::move(dims), {values.begin(), values.end()}};
  if (t.element_count() != values.size()) throw Error(ErrorCode::DimensionMismatch, "tensor");
  return t;
}

std::vector<float> Tensor::floats() const {
  if (dtype != DType::kFloat32) throw Error(ErrorCode::SchemaViolation, "dtype", "expected float32");
  std::vector<float> out(payload.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = detail::bits_float(detail::get_u32(&payload[i * 4]));
  return out;
}

std::vector<std::uint32_t> Tensor::u32() const {
  if (dtype != DType::kUInt32) throw Error(ErrorCode::SchemaViolation, "dtype", "expected u32");
  std::vector<std::uint32_t> out(payload.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = detail::get_u32(&payload[i * 4]);
  return out;
}

std::vector<std::uint8_t> Tensor::u8() const {
  if (dtype != DType::kUInt8) throw Error(ErrorCode::SchemaViolation, "dtype", "expected u8");
  return payload;
}

std::size_t encoded_size(const Tensor& tensor) {
  return kTensorHeaderBytes + 4 * tensor.dims.size() + tensor.payload.size();
}

void encode_tensor(const Tensor& tensor, std::vector<std::uint8_t>& out) {
  if (tensor.dims.size() > kMaxTensorDims) throw Error(ErrorCode::DimOverflow, "ndim");
  if (tensor.payload.size() != tensor.element_count() * dtype_size(tensor.dtype)) {
    throw Error(ErrorCode::DimensionMismatch, "payload", "size disagrees with dims");
  }
  out.reserve(out.size() + encoded_size(tensor));
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  detail::put_u8(out, static_cast<std::uint8_t>(tensor.dtype));
  detail::put_u8(out, static_cast<std::uint8_t>(tensor.dims.size()));
  detail::put_u16(out, 0);
  for (auto d : tensor.dims) detail::put_u32(out, d);
  out.insert(out.end(), tensor.payload.begin(), tensor.payload.end());
}

Tensor decode_tensor(std::span<const std::uint8_t>& bytes) {
  if (bytes.size() < kMagic.size()) {
    throw Error(ErrorCode::TruncatedFile, "header", "shorter than the tensor header");
  }
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw Error(ErrorCode::BadMagic, "magic");
  if (bytes.size() < kTensorHeaderBytes) {
    throw Error(ErrorCode::TruncatedFile, "header", "shorter than the tensor header");
  }
  Tensor t;
  const std::uint8_t dtype = bytes[4];
  if (dtype < 1 || dtype > 3) throw Error(ErrorCode::UnsupportedDtype, "dtype", std::to_string(dtype));
  t.dtype = static_cast<DType>(dtype);
  const std::size_t ndim = bytes[5];
  if (ndim > kMaxTensorDims) throw Error(ErrorCode::DimOverflow, "ndim", std::to_string(ndim));
  const std::size_t dims_end = kTensorHeaderBytes + 4 * ndim;
  if (bytes.size() < dims_end) throw Error(ErrorCode::TruncatedFile, "dims");

  std::uint64_t payload_bytes = dtype_size(t.dtype);
  for (std::size_t k = 0; k < ndim; ++k) {
    const std::uint32_t d = detail::get_u32(bytes.data() + kTensorHeaderBytes + 4 * k);
    t.dims.push_back(d);
    payload_bytes *= d;
    if (payload_bytes > kMaxTensorPayloadBytes) throw Error(ErrorCode::DimOverflow, "dims");
  }
  if (bytes.size() - dims_end < payload_bytes) {
    throw Error(ErrorCode::TruncatedFile, "payload",
                "need " + std::to_string(payload_bytes) + " bytes, have " + std::to_string(bytes.size() - dims_end));
  }
  const auto* begin = bytes.data() + dims_end;
  t.payload.assign(begin, begin + payload_bytes);
  bytes = bytes.subspan(dims_end + static_cast<std::size_t>(payload_bytes));
  return t;
}

std::vector<Tensor> decode_tensors(std::span<const std::uint8_t> bytes) {
  std::vector<Tensor> out;
  if (bytes.empty()) throw Error(ErrorCode::TruncatedFile, "file", "empty");
  while (!bytes.empty()) out.push_back(decode_tensor(bytes));
  return out;
}

void write_tensors(const std::string& path, std::span<const Tensor> tensors) {
  std::vector<std::uint8_t> bytes;
  for (const auto& t : tensors) encode_tensor(t, bytes);
  write_file_bytes(path, bytes);
}

std::vector<Tensor> read_tensors(const std::string& path) {
  try {
    return decode_tensors(read_file_bytes(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IoError) throw;
    throw Error(e.code(), path, e.what());
  }
}

}  // namespace domescan
