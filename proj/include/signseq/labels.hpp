#pragma once

#include <string>
#include <string_view>

namespace signseq {

inline constexpr int kClassCount = 60;

/// Word label ("W1", "W19", ...) for a class index in [0, 60).
std::string word_label(int class_index);

/// Numeric part of the word label, e.g. 19 for class 12 ("W19").
int word_number(int class_index);

/// Class index for a word label such as "W19" or a bare number "19".
/// Throws LabelError for labels outside the 60-word vocabulary.
int word_class(std::string_view label);

/// English gloss of a class, used in report headers.
std::string_view word_meaning(int class_index);

}  // namespace signseq
