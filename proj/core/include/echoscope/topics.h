#ifndef ECHOSCOPE_TOPICS_H_
#define ECHOSCOPE_TOPICS_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "echoscope/ingest.h"
#include "echoscope/polarization.h"

namespace echoscope {

using Document = std::vector<std::string>;
using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Word lists used for cleaning. All entries are lowercase.
struct Lexicons {
  std::set<std::string> stopwords;    // Italian and English
  std::set<std::string> query_terms;  // collection keywords
  std::set<std::string> extra_words;  // editable common-word list

  bool Drops(const std::string& token) const;
};

// One word per line; blank lines and lines starting with '#' are ignored.
// Entries are trimmed and lowercased.
std::set<std::string> ParseWordList(std::string_view text);
std::set<std::string> LoadWordList(const std::filesystem::path& path);

// The word lists compiled into the library.
Lexicons DefaultLexicons();

// Lowercases, deletes URLs, strips '#' and '@', splits elisions at
// apostrophes, breaks on Unicode word boundaries and drops pure numbers and
// every word listed in `lexicons`.
Document Tokenize(std::string_view text, const Lexicons& lexicons);

// Tokenize over many texts, in parallel.
std::vector<Document> Preprocess(std::span<const std::string> texts,
                                 const Lexicons& lexicons, unsigned threads = 0);

// (count_ab - delta) * total / (count_a * count_b).
double PhraseScore(std::size_t count_ab, std::size_t count_a, std::size_t count_b,
                   double delta, std::size_t total_tokens);

// Joins adjacent pairs scoring at least `threshold` into "a_b", greedily from
// the left within each document. Counts are taken over the whole corpus and
// recomputed before each pass.
std::vector<Document> ExtractPhrases(std::span<const Document> documents, double delta = 5.0,
                                     double threshold = 10.0, std::size_t passes = 1);

struct Vocabulary {
  std::vector<std::string> terms;              // by df descending, then term
  std::vector<std::size_t> document_frequency;  // parallel to terms

  std::size_t size() const { return terms.size(); }
  std::optional<std::size_t> Find(std::string_view term) const;
};

// Keeps terms with min_df <= df <= max_df_ratio * |documents|. Throws
// std::runtime_error when nothing survives.
Vocabulary BuildVocabulary(std::span<const Document> documents, std::size_t min_df = 10,
                           double max_df_ratio = 0.5);

struct TermDocMatrix {
  SparseRowMatrix x;              // |documents| x |vocabulary|
  std::vector<bool> empty_rows;   // documents with no vocabulary term
};

// Raw term count times ln((1 + |D|) / (1 + df)) + 1, each nonzero row scaled
// to unit Euclidean norm.
TermDocMatrix Tfidf(std::span<const Document> documents, const Vocabulary& vocabulary);

enum class NmfInit { kSvd, kRandom };

struct NmfOptions {
  std::size_t k = 20;
  std::size_t max_iter = 400;
  double tol = 1e-5;
  double epsilon = 1e-12;  // entry floor
  std::uint64_t seed = 0;
  NmfInit init = NmfInit::kSvd;
};

struct NmfResult {
  Eigen::MatrixXd w;               // documents x k
  Eigen::MatrixXd h;               // k x terms, rows of unit norm
  std::vector<double> objective;   // ||X - WH||_F^2 after each iteration
  std::size_t iterations = 0;
  bool converged = false;
  NmfInit init_used = NmfInit::kSvd;
};

// Nonnegative factorization X ~ WH by hierarchical alternating least squares.
// Starts from a nonnegative double SVD of X, or seeded uniform noise when
// that is unavailable. Stops once the relative objective decrease drops
// below tol. Rows of H are rescaled to unit norm on return, with W
// compensating. Throws std::invalid_argument on negative or non-finite
// entries or when k exceeds either dimension.
NmfResult NmfHals(const SparseRowMatrix& x, const NmfOptions& options);
NmfResult NmfHals(const Eigen::MatrixXd& x, const NmfOptions& options);

struct ProjectionResult {
  Eigen::MatrixXd w;
  std::vector<double> objective;
  std::size_t iterations = 0;
  bool converged = false;
};

// Solves for W with H held fixed, using the same updates and stopping rule.
ProjectionResult ProjectOntoBasis(const SparseRowMatrix& x, const Eigen::MatrixXd& h,
                                  const NmfOptions& options);

// Share of topic weight coming from the `hesitant` rows, corrected for group
// size: |S| sum_H w / (|H| sum_S w + |S| sum_H w). Absent when both sums are
// zero. Throws std::invalid_argument when a group is empty or they overlap.
std::vector<std::optional<double>> SideShare(const Eigen::MatrixXd& w,
                                             std::span<const std::size_t> hesitant_rows,
                                             std::span<const std::size_t> supporter_rows);

// Column sums of W normalised to sum to one. Throws on an all-zero W.
std::vector<double> TopicImportance(const Eigen::MatrixXd& w);

// Per topic, up to n terms by decreasing H weight; ties by term.
std::vector<std::vector<std::string>> TopTerms(const Eigen::MatrixXd& h,
                                               std::span<const std::string> terms,
                                               std::size_t n = 10);

enum class TopicProvenance { kAll, kHesitantBasis, kSupporterBasis };
std::string_view TopicProvenanceName(TopicProvenance provenance);

struct TopicOptions {
  std::size_t k = 20;
  std::size_t min_df = 10;
  double max_df_ratio = 0.5;
  double phrase_delta = 5.0;
  double phrase_threshold = 10.0;
  std::size_t phrase_passes = 1;
  std::size_t max_iter = 400;
  double tol = 1e-5;
  std::size_t top_terms = 10;
  unsigned threads = 0;
};

struct TopicSummary {
  std::size_t topic = 0;
  double importance = 0.0;
  std::optional<double> side_share;
  std::vector<std::string> top_terms;
};

struct TopicSet {
  TopicProvenance provenance = TopicProvenance::kAll;
  std::vector<TopicSummary> topics;
  std::size_t iterations = 0;
  bool converged = false;
};

struct TopicReport {
  std::size_t documents = 0;
  std::size_t empty_documents = 0;
  std::size_t hesitant_documents = 0;
  std::size_t supporter_documents = 0;
  std::size_t vocabulary_size = 0;
  std::vector<TopicSet> sets;  // all, hesitant-basis, supporter-basis
};

// Full topic analysis of one window. Every record is a document; rows of
// hesitant and supporter authors form the two groups. The group-specific
// bases are fitted on each group's rows and then used to project all rows.
TopicReport AnalyzeTopics(std::span<const InteractionRecord> records, const SideMap& sides,
                          const Lexicons& lexicons, const TopicOptions& options,
                          std::uint64_t seed);

}  // namespace echoscope

#endif  // ECHOSCOPE_TOPICS_H_
