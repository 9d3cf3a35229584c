#ifndef TFPROP_RECORD_IO_HPP
#define TFPROP_RECORD_IO_HPP

#include "tfprop/gabor_matrix.hpp"
#include "tfprop/stft.hpp"

#include <filesystem>
#include <string>

namespace tfprop {

// Dense little-endian record files.
//
// STFT record:   "TFPSTFT1" u32 d, then for each x axis and each eta axis
//                f64 start, f64 step, u64 count; u32 id length, id bytes;
//                body of interleaved (re, im) f64 in lattice flat order.
// Matrix record: "TFPMAT01" u32 d, f64 t, w-lattice axes, z-lattice axes (as above),
//                u32 id length, id bytes, u32 descriptor length, descriptor bytes;
//                body in (w flat, z flat) row-major order.
// Signal record: "TFPSIG01" u32 d, then per axis f64 origin, f64 dx, u64 n;
//                body of interleaved (re, im) f64 in grid flat order.

std::string encode_stft_record(const StftArray& F);
StftArray decode_stft_record(const std::string& bytes);
std::string encode_matrix_record(const GaborMatrixSample& k);
GaborMatrixSample decode_matrix_record(const std::string& bytes);
std::string encode_signal_record(const SampledSignal& f);
SampledSignal decode_signal_record(const std::string& bytes);

/// CSV with header x1..xd, eta1..etad, abs.
std::string stft_abs_csv(const StftArray& F);

std::string read_file(const std::filesystem::path& path);
/// Writes via a temporary sibling and rename so readers never see partial files.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);

}  // namespace tfprop

#endif  // TFPROP_RECORD_IO_HPP
