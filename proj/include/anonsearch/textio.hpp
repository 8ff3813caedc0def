#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace anonsearch {

// Shortest decimal string that round-trips the double (std::to_chars).
std::string format_double(double x);

// format_double plus a trailing ".0" when the result has no '.', 'e' or 'E'.
// This is the rendering used inside seed-derivation strings, so "1" and "1.0"
// never collide with integer fields.
std::string decimal_real(double x);

std::string decimal_int(long long x);

// FNV-1a 64-bit over the bytes of the input.
// offset basis 14695981039346656037, prime 1099511628211.
std::uint64_t fnv1a64(std::string_view bytes);

// Unicode-aware lowercasing over UTF-8 input. Covers ASCII, Latin-1
// supplement, the regular Latin Extended-A case pairs, Greek and Cyrillic;
// anything else passes through unchanged. Invalid UTF-8 bytes pass through.
std::string lowercase_utf8(std::string_view text);

// True if the code point counts as alphanumeric for tokenization.
bool is_word_codepoint(char32_t cp);

// Decodes one UTF-8 code point starting at i; advances i past it. On a
// malformed sequence, consumes one byte, returns it, and clears `valid`.
char32_t decode_utf8(std::string_view s, std::size_t& i, bool& valid);

}  // namespace anonsearch
