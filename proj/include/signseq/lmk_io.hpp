#pragma once

#include <filesystem>
#include <iosfwd>

#include "signseq/landmarks.hpp"

namespace signseq {

/// LMK1 landmark file, little-endian:
///
///   "LMK1" | u32 version=1 | u32 frame_count | u32 landmark_count=543
///   | u8 fps | u8 dominance (0=RIGHT, 1=LEFT) | u16 word_class_index
///   | u16 trial_index | u16 signer_number
///   | frame_count x 543 x (f32 x, f32 y, f32 d)
///
/// Coordinates are widened to double on read and narrowed on write, so a
/// read/write cycle is byte-exact.
inline constexpr std::size_t kLmkHeaderSize = 24;

TrialSequence read_landmarks(const std::filesystem::path& path);
TrialSequence read_landmarks(std::istream& in);

void write_landmarks(const TrialSequence& trial, const std::filesystem::path& path);
void write_landmarks(const TrialSequence& trial, std::ostream& out);

}  // namespace signseq
