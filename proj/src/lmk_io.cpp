#include "signseq/lmk_io.hpp"

#include <fstream>
#include <limits>

#include "binary.hpp"
#include "signseq/errors.hpp"

namespace signseq {

TrialSequence read_landmarks(std::istream& in) {
    if (!binary::check_magic(in, "LMK1")) throw FormatError("LMK1: bad magic");
    std::uint32_t version = 0, frame_count = 0, landmark_count = 0;
    std::uint8_t fps = 0, dominance = 0;
    std::uint16_t word = 0, trial_index = 0, signer = 0;
    bool ok = binary::get(in, version) && binary::get(in, frame_count) &&
              binary::get(in, landmark_count) && binary::get(in, fps) &&
              binary::get(in, dominance) && binary::get(in, word) &&
              binary::get(in, trial_index) && binary::get(in, signer);
    if (!ok) throw FormatError("LMK1: truncated header");
    if (version != 1) throw FormatError("LMK1: unsupported version " + std::to_string(version));
    if (landmark_count != kLandmarkCount)
        throw FormatError("LMK1: landmark_count " + std::to_string(landmark_count) + " != 543");
    if (dominance > 1) throw FormatError("LMK1: dominance byte " + std::to_string(dominance));

    TrialSequence trial;
    trial.fps = fps;
    trial.dominance = dominance == 1 ? Dominance::Left : Dominance::Right;
    trial.word_class = word;
    trial.trial_index = trial_index;
    trial.signer = signer;
    trial.frames.reserve(frame_count);
    for (std::uint32_t f = 0; f < frame_count; ++f) {
        LandmarkFrame frame;
        for (auto& p : frame.points) {
            float x, y, d;
            if (!(binary::get(in, x) && binary::get(in, y) && binary::get(in, d)))
                throw TruncationError("LMK1: header declares " + std::to_string(frame_count) +
                                      " frames, data ends in frame " + std::to_string(f));
            p = {x, y, d};
        }
        trial.frames.push_back(frame);
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw FormatError("LMK1: trailing bytes after declared frames");
    return trial;
}

TrialSequence read_landmarks(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return read_landmarks(in);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    } catch (const TruncationError& e) {
        throw TruncationError(path.string() + ": " + e.what());
    }
}

void write_landmarks(const TrialSequence& trial, std::ostream& out) {
    if (trial.frames.empty()) throw InvariantError("refusing to write a trial with no frames");
    if (trial.fps <= 0 || trial.fps > 255) throw InvariantError("fps out of range");
    if (trial.word_class < 0 || trial.word_class > std::numeric_limits<std::uint16_t>::max() ||
        trial.trial_index < 0 || trial.trial_index > std::numeric_limits<std::uint16_t>::max() ||
        trial.signer < 0 || trial.signer > std::numeric_limits<std::uint16_t>::max())
        throw InvariantError("trial metadata does not fit the LMK1 header");

    binary::put_magic(out, "LMK1");
    binary::put<std::uint32_t>(out, 1);
    binary::put<std::uint32_t>(out, static_cast<std::uint32_t>(trial.frames.size()));
    binary::put<std::uint32_t>(out, kLandmarkCount);
    binary::put<std::uint8_t>(out, static_cast<std::uint8_t>(trial.fps));
    binary::put<std::uint8_t>(out, trial.dominance == Dominance::Left ? 1 : 0);
    binary::put<std::uint16_t>(out, static_cast<std::uint16_t>(trial.word_class));
    binary::put<std::uint16_t>(out, static_cast<std::uint16_t>(trial.trial_index));
    binary::put<std::uint16_t>(out, static_cast<std::uint16_t>(trial.signer));
    for (const auto& frame : trial.frames) {
        for (const auto& p : frame.points) {
            binary::put(out, static_cast<float>(p.x));
            binary::put(out, static_cast<float>(p.y));
            binary::put(out, static_cast<float>(p.d));
        }
    }
}

void write_landmarks(const TrialSequence& trial, const std::filesystem::path& path) {
    if (trial.frames.empty()) throw InvariantError("refusing to write a trial with no frames");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_landmarks(trial, out);
    out.flush();
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace signseq
