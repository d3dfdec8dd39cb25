#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cwu/tokenizer.hpp"

namespace cwu {

/// Byte range of one sentence. Spans are non-overlapping, ascending, and
/// together cover every non-whitespace byte of the source text.
struct SentenceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct Document {
  std::string id;  // path relative to the corpus root, '/' separators
  std::string text;
  std::vector<SentenceSpan> sentences;
};

/// A contiguous run of whole sentences from one document, the unit of
/// indexing and retrieval. token_count always equals count_tokens(text);
/// oversized marks a single sentence that alone exceeds the chunk budget.
struct Chunk {
  std::string doc_id;
  std::size_t chunk_index = 0;
  std::string text;
  std::size_t byte_begin = 0;
  std::size_t byte_end = 0;
  std::size_t first_sentence = 0;  // inclusive
  std::size_t last_sentence = 0;   // inclusive
  std::size_t token_count = 0;
  bool oversized = false;
};

namespace detail {

// Words whose trailing '.' never ends a sentence. Matched case-sensitively
// against the whitespace-delimited word ending at the candidate period,
// after stripping leading quotes/brackets.
inline bool is_guarded_abbreviation(std::string_view word) {
  static constexpr std::array<std::string_view, 12> guard = {
      "e.g.", "i.e.", "etc.", "vs.",  "Dr.",  "Mr.",
      "Mrs.", "Ms.",  "Prof.", "Fig.", "No.",  "Inc."};
  for (const auto g : guard) {
    if (word == g) return true;
  }
  // Single letter followed by '.', e.g. initials like "A."
  return word.size() == 2 && std::isalpha(static_cast<unsigned char>(word[0])) != 0;
}

inline bool is_closing_mark(std::uint32_t cp) {
  switch (cp) {
    case '"': case '\'': case ')': case ']': case '}':
    case 0x2019:  // right single quote
    case 0x201D:  // right double quote
    case 0x00BB:  // right guillemet
      return true;
    default:
      return false;
  }
}

}  // namespace detail

/// Splits text into sentence spans. Boundaries fall after '.', '!' or '?'
/// (plus any closing quotes/brackets) when followed by whitespace or end of
/// text, and at blank lines. A '.' preceded by a guarded abbreviation or a
/// single letter does not split. Text without a terminator is one sentence.
inline std::vector<SentenceSpan> split_sentences(std::string_view text) {
  std::vector<SentenceSpan> spans;
  const std::size_t n = text.size();

  std::size_t i = 0;
  bool open = false;
  std::size_t sent_begin = 0;
  std::size_t last_nonws_end = 0;
  std::size_t word_begin = 0;  // start of the current whitespace-delimited run

  auto close = [&](std::size_t end) {
    if (open && end > sent_begin) spans.push_back({sent_begin, end});
    open = false;
  };

  bool after_space = true;
  while (i < n) {
    const auto d = detail::decode_utf8(text, i);
    if (detail::is_space_cp(d.cp)) {
      // Consume the whole whitespace run; two newlines form a paragraph break.
      int newlines = 0;
      while (i < n) {
        const auto s = detail::decode_utf8(text, i);
        if (!detail::is_space_cp(s.cp)) break;
        if (s.cp == '\n') ++newlines;
        i += s.len;
      }
      if (newlines >= 2) close(last_nonws_end);
      after_space = true;
      continue;
    }

    if (!open) {
      open = true;
      sent_begin = i;
    }
    if (after_space) word_begin = i;
    after_space = false;

    if (d.cp == '.' || d.cp == '!' || d.cp == '?') {
      std::size_t j = i + d.len;
      while (j < n) {
        const auto c = detail::decode_utf8(text, j);
        if (!detail::is_closing_mark(c.cp)) break;
        j += c.len;
      }
      bool boundary = j >= n;
      if (!boundary) {
        boundary = detail::is_space_cp(detail::decode_utf8(text, j).cp);
      }
      if (boundary && d.cp == '.') {
        std::string_view word = text.substr(word_begin, i + d.len - word_begin);
        while (!word.empty() &&
               std::isalnum(static_cast<unsigned char>(word.front())) == 0) {
          word.remove_prefix(1);
        }
        if (detail::is_guarded_abbreviation(word)) boundary = false;
      }
      if (boundary) {
        close(j);
        last_nonws_end = j;
        i = j;
        after_space = true;
        continue;
      }
    }

    i += d.len;
    last_nonws_end = i;
  }
  close(last_nonws_end);
  return spans;
}

inline Document make_document(std::string id, std::string text) {
  Document doc;
  doc.id = std::move(id);
  doc.text = std::move(text);
  doc.sentences = split_sentences(doc.text);
  return doc;
}

/// Greedy packing of whole sentences into chunks of at most chunk_size
/// tokens. A single sentence over the budget becomes its own chunk, unsplit
/// and flagged oversized. Chunks never overlap and never cross documents.
inline std::vector<Chunk> pack_chunks(const Document& doc, std::size_t chunk_size) {
  if (chunk_size == 0) {
    throw std::invalid_argument("pack_chunks: chunk_size must be >= 1");
  }
  std::vector<Chunk> chunks;
  const auto& sentences = doc.sentences;

  std::size_t first = 0;
  std::size_t cur_tokens = 0;
  bool have_open = false;

  auto flush = [&](std::size_t last) {
    Chunk c;
    c.doc_id = doc.id;
    c.chunk_index = chunks.size();
    c.byte_begin = sentences[first].begin;
    c.byte_end = sentences[last].end;
    c.text = doc.text.substr(c.byte_begin, c.byte_end - c.byte_begin);
    c.first_sentence = first;
    c.last_sentence = last;
    c.token_count = cur_tokens;
    c.oversized = first == last && cur_tokens > chunk_size;
    chunks.push_back(std::move(c));
    have_open = false;
    cur_tokens = 0;
  };

  for (std::size_t s = 0; s < sentences.size(); ++s) {
    const std::size_t st = count_tokens(
        std::string_view(doc.text).substr(sentences[s].begin,
                                          sentences[s].end - sentences[s].begin));
    if (have_open && cur_tokens + st <= chunk_size) {
      cur_tokens += st;
      continue;
    }
    if (have_open) flush(s - 1);
    first = s;
    cur_tokens = st;
    have_open = true;
    if (st > chunk_size) flush(s);
  }
  if (have_open) flush(sentences.size() - 1);
  return chunks;
}

/// Loads every .txt file under dir (recursively) as one Document. Ids are
/// paths relative to dir with '/' separators; documents come back sorted by
/// id so downstream indexing order is reproducible.
inline std::vector<Document> load_corpus(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("corpus directory not found: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      files.push_back(entry.path());
    }
  }
  std::vector<Document> docs;
  docs.reserve(files.size());
  for (const auto& path : files) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read corpus file: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    docs.push_back(make_document(fs::relative(path, dir).generic_string(),
                                 std::move(text)));
  }
  std::sort(docs.begin(), docs.end(),
            [](const Document& a, const Document& b) { return a.id < b.id; });
  return docs;
}

}  // namespace cwu
