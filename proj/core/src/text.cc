#include <algorithm>
#include <cctype>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <unicode/brkiter.h>
#include <unicode/locid.h>
#include <unicode/unistr.h>

#include "echoscope/parallel.h"
#include "echoscope/topics.h"

namespace echoscope {
namespace lexicon_data {
extern const char k_stopwords_it[];
extern const char k_stopwords_en[];
extern const char k_query_terms[];
extern const char k_common_words_it[];
}  // namespace lexicon_data

namespace {

constexpr std::size_t kTokenizeChunk = 512;

std::string Lowercase(std::string_view text) {
  std::string out;
  icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())))
      .toLower(icu::Locale::getRoot())
      .toUTF8String(out);
  return out;
}

bool IsUrlChunk(std::string_view chunk) {
  std::string lower;
  for (char c : chunk) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return lower.find("://") != std::string::npos || lower.starts_with("www.");
}

// Blanks URLs, sign characters and apostrophes so the word breaker sees
// plain words. Byte-level; multi-byte apostrophes are matched explicitly.
std::string Clean(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      out += ' ';
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    const std::string_view chunk = text.substr(i, j - i);
    i = j;
    if (IsUrlChunk(chunk)) {
      out += ' ';
      continue;
    }
    for (std::size_t k = 0; k < chunk.size(); ++k) {
      const char c = chunk[k];
      if (c == '#' || c == '@' || c == '\'') {
        out += ' ';
      } else if (chunk.substr(k).starts_with("’") || chunk.substr(k).starts_with("‘")) {
        out += ' ';
        k += 2;
      } else {
        out += c;
      }
    }
  }
  return out;
}

class WordBreaker {
 public:
  WordBreaker() {
    UErrorCode status = U_ZERO_ERROR;
    iterator_.reset(icu::BreakIterator::createWordInstance(icu::Locale::getRoot(), status));
    if (U_FAILURE(status) || !iterator_) {
      throw std::runtime_error(std::string("cannot create word break iterator: ") +
                               u_errorName(status));
    }
  }

  Document Split(std::string_view text, const Lexicons& lexicons) {
    Document tokens;
    const std::string cleaned = Lowercase(Clean(text));
    const icu::UnicodeString unicode = icu::UnicodeString::fromUTF8(
        icu::StringPiece(cleaned.data(), static_cast<int32_t>(cleaned.size())));
    iterator_->setText(unicode);
    int32_t start = iterator_->first();
    for (int32_t end = iterator_->next(); end != icu::BreakIterator::DONE;
         start = end, end = iterator_->next()) {
      const int32_t status = iterator_->getRuleStatus();
      if (status < UBRK_WORD_LETTER) continue;  // spaces, punctuation, numbers
      std::string token;
      unicode.tempSubStringBetween(start, end).toUTF8String(token);
      if (lexicons.Drops(token)) continue;
      tokens.push_back(std::move(token));
    }
    return tokens;
  }

 private:
  std::unique_ptr<icu::BreakIterator> iterator_;
};

}  // namespace

bool Lexicons::Drops(const std::string& token) const {
  return stopwords.count(token) > 0 || query_terms.count(token) > 0 ||
         extra_words.count(token) > 0;
}

std::set<std::string> ParseWordList(std::string_view text) {
  std::set<std::string> words;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto last = line.find_last_not_of(" \t\r");
    words.insert(Lowercase(std::string_view(line).substr(first, last - first + 1)));
  }
  return words;
}

std::set<std::string> LoadWordList(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read word list " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return ParseWordList(buffer.str());
}

Lexicons DefaultLexicons() {
  Lexicons lexicons;
  lexicons.stopwords = ParseWordList(lexicon_data::k_stopwords_it);
  lexicons.stopwords.merge(ParseWordList(lexicon_data::k_stopwords_en));
  lexicons.query_terms = ParseWordList(lexicon_data::k_query_terms);
  lexicons.extra_words = ParseWordList(lexicon_data::k_common_words_it);
  return lexicons;
}

Document Tokenize(std::string_view text, const Lexicons& lexicons) {
  WordBreaker breaker;
  return breaker.Split(text, lexicons);
}

std::vector<Document> Preprocess(std::span<const std::string> texts, const Lexicons& lexicons,
                                 unsigned threads) {
  std::vector<Document> documents(texts.size());
  const std::size_t chunks = (texts.size() + kTokenizeChunk - 1) / kTokenizeChunk;
  ParallelFor(chunks, threads, [&](std::size_t chunk) {
    WordBreaker breaker;
    const std::size_t end = std::min(texts.size(), (chunk + 1) * kTokenizeChunk);
    for (std::size_t i = chunk * kTokenizeChunk; i < end; ++i) {
      documents[i] = breaker.Split(texts[i], lexicons);
    }
  });
  return documents;
}

double PhraseScore(std::size_t count_ab, std::size_t count_a, std::size_t count_b, double delta,
                   std::size_t total_tokens) {
  if (count_a == 0 || count_b == 0) return 0.0;
  return (static_cast<double>(count_ab) - delta) * static_cast<double>(total_tokens) /
         (static_cast<double>(count_a) * static_cast<double>(count_b));
}

std::vector<Document> ExtractPhrases(std::span<const Document> documents, double delta,
                                     double threshold, std::size_t passes) {
  if (!(delta >= 0.0)) throw std::invalid_argument("phrase delta must be >= 0");
  if (!(threshold > 0.0)) throw std::invalid_argument("phrase threshold must be > 0");
  std::vector<Document> current(documents.begin(), documents.end());
  for (std::size_t pass = 0; pass < passes; ++pass) {
    std::unordered_map<std::string, std::size_t> unigrams;
    std::unordered_map<std::string, std::size_t> bigrams;
    std::size_t total = 0;
    for (const auto& doc : current) {
      total += doc.size();
      for (std::size_t i = 0; i < doc.size(); ++i) {
        ++unigrams[doc[i]];
        if (i + 1 < doc.size()) ++bigrams[doc[i] + '\x1f' + doc[i + 1]];
      }
    }
    bool merged_any = false;
    for (auto& doc : current) {
      Document out;
      out.reserve(doc.size());
      std::size_t i = 0;
      while (i < doc.size()) {
        if (i + 1 < doc.size()) {
          const auto it = bigrams.find(doc[i] + '\x1f' + doc[i + 1]);
          if (PhraseScore(it->second, unigrams[doc[i]], unigrams[doc[i + 1]], delta, total) >=
              threshold) {
            out.push_back(doc[i] + '_' + doc[i + 1]);
            i += 2;
            merged_any = true;
            continue;
          }
        }
        out.push_back(std::move(doc[i]));
        ++i;
      }
      doc = std::move(out);
    }
    if (!merged_any) break;
  }
  return current;
}

}  // namespace echoscope
