#ifndef ECHOSCOPE_INGEST_H_
#define ECHOSCOPE_INGEST_H_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace echoscope {

// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerDay = 86400;

/// One post. A record is a retweet iff `retweeted_author` is set; the text of
/// the post is never parsed for "RT @" markers.
struct InteractionRecord {
  std::string post_id;
  std::string author_id;
  Timestamp timestamp = 0;
  std::string text;
  std::optional<std::string> retweeted_author;
  std::vector<std::string> mentions;
  std::vector<std::string> urls;

  bool is_retweet() const { return retweeted_author.has_value(); }
  friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

enum class RecordFormat {
  kDelimitedText,       // tab-separated with a header row
  kLineDelimitedObject  // one JSON object per line
};

// Accepts "tsv" / "delimited-text" and "jsonl" / "line-delimited-object".
RecordFormat ParseRecordFormat(std::string_view name);
std::string_view RecordFormatName(RecordFormat format);
// Chooses by file extension: .tsv/.txt are delimited text, anything else JSONL.
RecordFormat GuessRecordFormat(const std::filesystem::path& path);

struct LoadResult {
  std::vector<InteractionRecord> records;
  std::size_t rows = 0;       // non-blank data rows seen
  std::size_t malformed = 0;  // rows skipped
  std::vector<std::string> diagnostics;  // first few malformed-row messages
};

// Malformed rows are skipped and counted. Throws std::runtime_error when the
// file is unreadable or when more than half of the rows are malformed.
LoadResult LoadRecords(const std::filesystem::path& path, RecordFormat format);
LoadResult ParseRecords(std::istream& in, RecordFormat format);

void WriteRecords(std::span<const InteractionRecord> records, std::ostream& out,
                  RecordFormat format);
void WriteRecords(std::span<const InteractionRecord> records,
                  const std::filesystem::path& path, RecordFormat format);

// Parses integer epoch seconds or an ISO-8601 date-time with optional
// fractional seconds and a `Z` or `+hh:mm` offset; the result is UTC.
Timestamp ParseTimestamp(std::string_view text);
std::chrono::year_month_day ParseIsoDate(std::string_view text);
std::string FormatIsoDate(std::chrono::year_month_day date);
std::chrono::year_month_day DateOf(Timestamp t);
Timestamp StartOfDay(std::chrono::year_month_day date);

/// Calendar window, inclusive on both ends: it covers start 00:00:00 UTC
/// through end 23:59:59 UTC.
struct TimeWindow {
  std::string name;
  std::chrono::year_month_day start;
  std::chrono::year_month_day end;

  Timestamp first_second() const { return StartOfDay(start); }
  Timestamp last_second() const { return StartOfDay(end) + kSecondsPerDay - 1; }
  int days() const;
  bool Contains(Timestamp t) const {
    return t >= first_second() && t <= last_second();
  }
};

// The six periods from September 2019 to November 2021.
std::vector<TimeWindow> DefaultWindows();
// Throws std::invalid_argument unless every window has start <= end and the
// windows are ordered and non-overlapping.
void ValidateWindows(std::span<const TimeWindow> windows);
// {"windows": [{"name": ..., "start": "YYYY-MM-DD", "end": "YYYY-MM-DD"}]}
// or the bare array.
std::vector<TimeWindow> WindowsFromJson(const nlohmann::json& json);
nlohmann::json WindowsToJson(std::span<const TimeWindow> windows);
std::vector<TimeWindow> LoadWindows(const std::filesystem::path& path);

struct Segmentation {
  std::vector<std::vector<InteractionRecord>> per_window;  // parallel to windows
  std::size_t dropped = 0;
};

Segmentation Segment(std::span<const InteractionRecord> records,
                     std::span<const TimeWindow> windows);

enum class Stance { kSupporter, kHesitant, kOther, kPets };

std::string_view StanceName(Stance stance);
std::optional<Stance> ParseStance(std::string_view name);

struct StanceLabel {
  std::string user_id;
  Stance label = Stance::kOther;
  std::string annotator_id;
  friend bool operator==(const StanceLabel&, const StanceLabel&) = default;
};

// Tab-separated file with header user_id, label, annotator_id. Rows with an
// unknown label are rejected with std::runtime_error.
std::vector<StanceLabel> LoadAnnotations(const std::filesystem::path& path);
std::vector<StanceLabel> ParseAnnotations(std::istream& in);
void WriteAnnotations(std::span<const StanceLabel> labels, std::ostream& out);

// One label per user: the majority over annotators, with ties going to
// Stance::kOther.
std::map<std::string, Stance> ResolveAnnotations(std::span<const StanceLabel> labels);
// annotator -> (user -> label)
std::map<std::string, std::map<std::string, Stance>> LabelsByAnnotator(
    std::span<const StanceLabel> labels);

struct KappaResult {
  double kappa = 0.0;
  double observed_agreement = 0.0;
  double expected_agreement = 0.0;
  std::size_t items = 0;
};

// Cohen's kappa over the four stance categories. Both maps must cover the
// same users; throws std::invalid_argument otherwise.
KappaResult CohenKappa(const std::map<std::string, Stance>& labels_a,
                       const std::map<std::string, Stance>& labels_b);

struct SpanSummary {
  std::map<std::string, double> days_by_user;
  std::optional<double> mean;
  std::optional<double> median;
};

// Days between each user's first and last post. Users without posts are
// absent from the result.
SpanSummary EngagementSpan(std::span<const InteractionRecord> records,
                           const std::set<std::string>& users);

struct GroupPostingStats {
  std::size_t users = 0;
  std::size_t posts = 0;
  double mean_posts_per_user = 0.0;
  double median_posts_per_user = 0.0;
  double mean_posts_per_user_per_day = 0.0;
  double median_posts_per_user_per_day = 0.0;
  double mean_span_days = 0.0;
  double median_span_days = 0.0;
};

struct PostingStats {
  std::string window;
  int window_days = 0;
  // Absent when no labeled user of that stance posted in the window.
  std::map<Stance, std::optional<GroupPostingStats>> groups;
};

// Statistics over the labeled users that posted inside `window`; records
// outside the window are ignored.
PostingStats ComputePostingStats(std::span<const InteractionRecord> records,
                                 const std::map<std::string, Stance>& labels,
                                 const TimeWindow& window);

double Median(std::vector<double> values);

}  // namespace echoscope

#endif  // ECHOSCOPE_INGEST_H_
