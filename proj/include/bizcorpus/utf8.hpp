#pragma once

// UTF-8 helpers shared by every text stage. Text handed to these functions
// is assumed valid UTF-8 (ingestion rejects anything else); malformed bytes
// decode to U+FFFD and advance one byte so loops always terminate.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace bizcorpus::utf8 {

inline constexpr char32_t kReplacement = 0xFFFD;

struct Decoded {
  char32_t cp;
  std::size_t length;  // bytes consumed
};

inline Decoded decode_at(std::string_view s, std::size_t pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) return {b0, 1};

  std::size_t need = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    need = 1;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    need = 2;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    need = 3;
    cp = b0 & 0x07;
  } else {
    return {kReplacement, 1};
  }
  if (pos + need >= s.size()) return {kReplacement, 1};
  for (std::size_t i = 1; i <= need; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) return {kReplacement, 1};
    cp = (cp << 6) | (b & 0x3F);
  }
  return {cp, need + 1};
}

inline void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string encode(std::u32string_view cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) append(out, cp);
  return out;
}

inline std::u32string decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (std::size_t pos = 0; pos < s.size();) {
    const auto d = decode_at(s, pos);
    out.push_back(d.cp);
    pos += d.length;
  }
  return out;
}

/// Strict validity check (no overlongs, no surrogates, max U+10FFFF).
inline bool is_valid(std::string_view s) {
  for (std::size_t pos = 0; pos < s.size();) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) {
      ++pos;
      continue;
    }
    const auto d = decode_at(s, pos);
    if (d.cp == kReplacement && d.length == 1) return false;
    const bool overlong = (d.length == 2 && d.cp < 0x80) || (d.length == 3 && d.cp < 0x800) ||
                          (d.length == 4 && d.cp < 0x10000);
    if (overlong || d.cp > 0x10FFFF || (d.cp >= 0xD800 && d.cp <= 0xDFFF)) return false;
    pos += d.length;
  }
  return true;
}

/// Number of Unicode scalar values.
inline std::size_t length(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t pos = 0; pos < s.size(); ++n) pos += decode_at(s, pos).length;
  return n;
}

/// First `max_chars` scalar values of `s`; never splits a multi-byte sequence.
inline std::string_view prefix(std::string_view s, std::size_t max_chars) {
  std::size_t pos = 0;
  for (std::size_t n = 0; n < max_chars && pos < s.size(); ++n) pos += decode_at(s, pos).length;
  return s.substr(0, pos);
}

inline bool is_space(char32_t cp) {
  switch (cp) {
    case U' ':
    case U'\t':
    case U'\n':
    case U'\r':
    case U'\v':
    case U'\f':
    case 0x00A0:
    case 0x3000:  // ideographic space
    case 0xFEFF:
      return true;
    default:
      return (cp >= 0x2000 && cp <= 0x200B) || cp == 0x2028 || cp == 0x2029;
  }
}

inline std::string_view trim(std::string_view s) {
  std::size_t begin = 0;
  while (begin < s.size()) {
    const auto d = decode_at(s, begin);
    if (!is_space(d.cp)) break;
    begin += d.length;
  }
  std::size_t end = begin;
  for (std::size_t pos = begin; pos < s.size();) {
    const auto d = decode_at(s, pos);
    pos += d.length;
    if (!is_space(d.cp)) end = pos;
  }
  return s.substr(begin, end - begin);
}

/// Simple one-to-one lowercase mapping for the cased scripts that show up in
/// Japanese web text: ASCII, fullwidth Latin, Latin-1, Latin Extended-A,
/// Greek and Cyrillic. Uncased scripts map to themselves.
inline char32_t fold_case(char32_t cp) {
  if (cp >= U'A' && cp <= U'Z') return cp + 32;
  if (cp < 0x80) return cp;
  if (cp >= 0xFF21 && cp <= 0xFF3A) return cp + 32;  // Ａ-Ｚ
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
  if (cp >= 0x100 && cp <= 0x137 && cp % 2 == 0) return cp + 1;
  if (cp >= 0x139 && cp <= 0x148 && cp % 2 == 1) return cp + 1;
  if (cp >= 0x14A && cp <= 0x177 && cp % 2 == 0) return cp + 1;
  if (cp == 0x178) return 0xFF;
  if (cp >= 0x179 && cp <= 0x17E && cp % 2 == 1) return cp + 1;
  if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 32;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  return cp;
}

inline std::string fold_case(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t pos = 0; pos < s.size();) {
    const auto d = decode_at(s, pos);
    if (d.cp < 0x80) {
      out.push_back(static_cast<char>(fold_case(d.cp)));
    } else if (d.cp == kReplacement && d.length == 1) {
      out.push_back(s[pos]);
    } else {
      append(out, fold_case(d.cp));
    }
    pos += d.length;
  }
  return out;
}

/// Maps fullwidth ASCII variants (U+FF01..U+FF5E) and the ideographic space
/// onto plain ASCII; everything else is copied through.
inline std::string narrow_fullwidth(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t pos = 0; pos < s.size();) {
    const auto d = decode_at(s, pos);
    if (d.cp >= 0xFF01 && d.cp <= 0xFF5E) {
      out.push_back(static_cast<char>(d.cp - 0xFEE0));
    } else if (d.cp == 0x3000) {
      out.push_back(' ');
    } else {
      out.append(s.substr(pos, d.length));
    }
    pos += d.length;
  }
  return out;
}

enum class Script {
  common,  // digits, punctuation, symbols, whitespace
  latin,
  hiragana,
  katakana,
  han,
  hangul,
  thai,
  cyrillic,
  greek,
  arabic,
  hebrew,
  devanagari,
  other,
};

inline Script script_of(char32_t cp) {
  if (cp < 0x80) {
    return ((cp | 0x20) >= U'a' && (cp | 0x20) <= U'z') ? Script::latin : Script::common;
  }
  if (cp >= 0x3041 && cp <= 0x309F) return Script::hiragana;
  if ((cp >= 0x30A0 && cp <= 0x30FF && cp != 0x30FB) || (cp >= 0x31F0 && cp <= 0x31FF) ||
      (cp >= 0xFF66 && cp <= 0xFF9F)) {
    return cp == 0x30FC || cp == 0xFF70 ? Script::common : Script::katakana;
  }
  if ((cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
      (cp >= 0xF900 && cp <= 0xFAFF) || (cp >= 0x20000 && cp <= 0x2FA1F) || cp == 0x3005) {
    return Script::han;
  }
  if ((cp >= 0xAC00 && cp <= 0xD7AF) || (cp >= 0x1100 && cp <= 0x11FF) ||
      (cp >= 0x3130 && cp <= 0x318F)) {
    return Script::hangul;
  }
  if (cp >= 0x0E00 && cp <= 0x0E7F) return Script::thai;
  if (cp >= 0x0400 && cp <= 0x052F) return Script::cyrillic;
  if (cp >= 0x0370 && cp <= 0x03FF) return Script::greek;
  if (cp >= 0x0600 && cp <= 0x06FF) return Script::arabic;
  if (cp >= 0x0590 && cp <= 0x05FF) return Script::hebrew;
  if (cp >= 0x0900 && cp <= 0x097F) return Script::devanagari;
  if ((cp >= 0xC0 && cp <= 0x24F && cp != 0xD7 && cp != 0xF7) ||
      (cp >= 0xFF21 && cp <= 0xFF3A) || (cp >= 0xFF41 && cp <= 0xFF5A)) {
    return Script::latin;
  }
  if (cp < 0x2E80 || (cp >= 0x3000 && cp <= 0x303F) || (cp >= 0xFF00 && cp <= 0xFFEF)) {
    return Script::common;
  }
  return Script::other;
}

/// Characters the default tokenizer emits one token each for.
inline bool is_cjk(char32_t cp) {
  switch (script_of(cp)) {
    case Script::hiragana:
    case Script::katakana:
    case Script::han:
    case Script::hangul:
      return true;
    default:
      return (cp >= 0x3000 && cp <= 0x303F && cp != 0x3000) || cp == 0x30FC || cp == 0x30FB ||
             (cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF61 && cp <= 0xFF65);
  }
}

}  // namespace bizcorpus::utf8
