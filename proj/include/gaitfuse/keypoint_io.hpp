#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "gaitfuse/skeleton.hpp"

namespace gaitfuse {

inline constexpr unsigned kKeypointFormatVersion = 1;

/// Reads the line-delimited JSON keypoint format.
///
/// `path` may name a single file or a directory, in which case every `*.jsonl`
/// file inside it is read in lexicographic order. Frames are grouped by
/// (subject_id, sequence_id) and sorted by frame_idx; the result is ordered by
/// (subject_id, sequence_id). Throws DataError with `file:line: reason` on
/// malformed input, a wrong joint count, duplicate frames or gaps.
std::vector<PoseSequence> load_sequences(const std::filesystem::path& path);

std::vector<PoseSequence> parse_sequences(std::istream& in, const std::string& source_name);

void write_sequences(std::ostream& out, std::span<const PoseSequence> sequences);
void write_sequences(const std::filesystem::path& file, std::span<const PoseSequence> sequences);

}  // namespace gaitfuse
