#pragma once

#include <cctype>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cwu {

enum class TokenKind { word, punct };

/// One token of the source text, referenced by byte offsets. Offsets always
/// fall on UTF-8 boundaries; tokens are non-overlapping and ascending.
struct Token {
  std::size_t begin = 0;
  std::size_t end = 0;
  TokenKind kind = TokenKind::word;
};

inline std::string_view token_text(std::string_view source, const Token& tok) {
  return source.substr(tok.begin, tok.end - tok.begin);
}

/// Identifies a tokenization rule. Same (name, version, input) always yields
/// the same token sequence; all token budgets in this library (chunk sizes,
/// context lengths, utilized counts) are expressed in these units.
struct TokenizerSpec {
  std::string name;
  std::string version;
};

inline const TokenizerSpec& default_tokenizer_spec() {
  static const TokenizerSpec spec{"word-punct", "1"};
  return spec;
}

namespace detail {

struct DecodedCp {
  std::uint32_t cp;
  std::size_t len;
};

// Decodes one UTF-8 codepoint at byte offset i. Malformed bytes are consumed
// one at a time with their raw value, so scanning always terminates.
inline DecodedCp decode_utf8(std::string_view text, std::size_t i) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  if (b0 < 0x80) return {b0, 1};
  auto cont = [&](std::size_t off) {
    return i + off < text.size() &&
           (static_cast<unsigned char>(text[i + off]) & 0xC0) == 0x80;
  };
  auto cbits = [&](std::size_t off) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(text[i + off]) & 0x3F);
  };
  if ((b0 & 0xE0) == 0xC0 && cont(1)) {
    return {(static_cast<std::uint32_t>(b0 & 0x1F) << 6) | cbits(1), 2};
  }
  if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
    return {(static_cast<std::uint32_t>(b0 & 0x0F) << 12) | (cbits(1) << 6) | cbits(2), 3};
  }
  if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
    return {(static_cast<std::uint32_t>(b0 & 0x07) << 18) | (cbits(1) << 12) |
                (cbits(2) << 6) | cbits(3),
            4};
  }
  return {b0, 1};
}

inline bool is_space_cp(std::uint32_t cp) {
  switch (cp) {
    case ' ': case '\t': case '\n': case '\r': case '\v': case '\f':
    case 0x0085: case 0x00A0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

// Non-ASCII punctuation and symbol blocks that tokenize as single characters.
// Codepoints outside these blocks (and not whitespace) count as word
// characters; a pluggable tokenizer can refine this without changing the
// interface.
inline bool is_symbol_cp(std::uint32_t cp) {
  return (cp >= 0x00A1 && cp <= 0x00BF) || cp == 0x00D7 || cp == 0x00F7 ||
         (cp >= 0x2010 && cp <= 0x205E) || (cp >= 0x20A0 && cp <= 0x20CF) ||
         (cp >= 0x2190 && cp <= 0x22FF) || (cp >= 0x3001 && cp <= 0x303F) ||
         (cp >= 0xFE50 && cp <= 0xFE6F) || (cp >= 0xFF01 && cp <= 0xFF0F) ||
         (cp >= 0xFF1A && cp <= 0xFF20) || (cp >= 0xFF3B && cp <= 0xFF40) ||
         (cp >= 0xFF5B && cp <= 0xFF65);
}

inline bool is_word_cp(std::uint32_t cp) {
  if (cp < 0x80) {
    return cp == '_' || std::isalnum(static_cast<int>(cp)) != 0;
  }
  return !is_space_cp(cp) && !is_symbol_cp(cp);
}

// Single-pass scanner shared by tokenize() and count_tokens(). A token is a
// maximal run of word codepoints or one non-whitespace, non-word codepoint.
template <typename Fn>
inline void scan_tokens(std::string_view text, Fn&& fn) {
  const std::size_t n = text.size();
  std::size_t i = 0;
  while (i < n) {
    const DecodedCp d = decode_utf8(text, i);
    if (is_space_cp(d.cp)) {
      i += d.len;
      continue;
    }
    if (is_word_cp(d.cp)) {
      const std::size_t begin = i;
      i += d.len;
      while (i < n) {
        const DecodedCp next = decode_utf8(text, i);
        if (!is_word_cp(next.cp)) break;
        i += next.len;
      }
      fn(begin, i, TokenKind::word);
    } else {
      fn(i, i + d.len, TokenKind::punct);
      i += d.len;
    }
  }
}

}  // namespace detail

inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  detail::scan_tokens(text, [&](std::size_t begin, std::size_t end, TokenKind kind) {
    tokens.push_back(Token{begin, end, kind});
  });
  return tokens;
}

inline std::size_t count_tokens(std::string_view text) {
  std::size_t count = 0;
  detail::scan_tokens(text, [&](std::size_t, std::size_t, TokenKind) { ++count; });
  return count;
}

/// Byte offset just past the max_tokens-th token, or text.size() when the
/// text has fewer tokens. Used to truncate texts at a token boundary.
inline std::size_t token_prefix_end(std::string_view text, std::size_t max_tokens) {
  if (max_tokens == 0) return 0;
  std::size_t count = 0;
  std::size_t cut = text.size();
  detail::scan_tokens(text, [&](std::size_t, std::size_t end, TokenKind) {
    if (count < max_tokens) cut = end;
    ++count;
  });
  return count <= max_tokens ? text.size() : cut;
}

}  // namespace cwu
