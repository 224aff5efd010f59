#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ecsp {

/// Canonical text form used for every text-equality decision in the pipeline.
///
/// Trims, collapses whitespace runs (ASCII and Unicode spaces) to one ASCII
/// space, and maps typographic quotes and dashes:
///
///   U+2018 U+2019 U+201A U+201B U+2032          -> '
///   U+201C U+201D U+201E U+201F U+00AB U+00BB U+2033 -> "
///   U+2014 U+2015                               -> --
///   U+2010 U+2011 U+2012 U+2013 U+2212          -> -
///
/// Idempotent. Invalid UTF-8 bytes pass through unchanged.
std::string normalize_text(std::string_view raw);

/// normalize_text output plus, for every output byte, the byte range of the
/// input it came from. Used to map matches on normalized text back to spans.
struct NormalizedText {
  std::string text;
  std::vector<std::size_t> source_begin;
  std::vector<std::size_t> source_end;
};

NormalizedText normalize_with_offsets(std::string_view raw);

/// Lowercases ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic letters.
std::string utf8_lower(std::string_view s);

/// Decodes one code point at `pos`; returns its byte length (>= 1).
/// Invalid sequences decode as the single byte value.
std::size_t utf8_decode(std::string_view s, std::size_t pos, char32_t& cp);

void utf8_append(std::string& out, char32_t cp);

bool is_unicode_space(char32_t cp);

std::string trim(std::string_view s);

std::vector<std::string> split_whitespace(std::string_view s);

/// Length of the longest common substring (bytewise).
struct CommonSubstring {
  std::size_t length = 0;
  std::size_t pos_a = 0;
  std::size_t pos_b = 0;
};

CommonSubstring longest_common_substring(std::string_view a, std::string_view b);

}  // namespace ecsp
