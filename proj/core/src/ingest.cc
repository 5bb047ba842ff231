#include "echoscope/ingest.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "echoscope/report.h"

namespace echoscope {
namespace {

using nlohmann::json;
namespace chr = std::chrono;

constexpr std::size_t kMaxDiagnostics = 20;

const std::vector<std::string>& RecordColumns() {
  static const std::vector<std::string> columns = {
      "post_id", "author_id", "timestamp", "text",
      "retweeted_author", "mentions", "urls"};
  return columns;
}

std::vector<std::string> SplitSpaces(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ') ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

std::string JoinSpaces(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ' ';
    out += items[i];
  }
  return out;
}

int ParseFixedInt(std::string_view s, std::size_t pos, std::size_t len) {
  if (pos + len > s.size()) throw std::invalid_argument("truncated");
  int value = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("not a digit");
    value = value * 10 + (s[i] - '0');
  }
  return value;
}

// Validates the per-record invariants that make a row usable.
void CheckRecord(const InteractionRecord& r) {
  if (r.post_id.empty()) throw std::invalid_argument("missing post_id");
  if (r.author_id.empty()) throw std::invalid_argument("missing author_id");
  if (r.retweeted_author && r.retweeted_author->empty()) {
    throw std::invalid_argument("empty retweeted_author");
  }
}

InteractionRecord RecordFromJson(const json& obj) {
  if (!obj.is_object()) throw std::invalid_argument("row is not an object");
  InteractionRecord r;
  auto get_string = [&obj](const char* key) -> std::string {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return {};
    if (!it->is_string()) throw std::invalid_argument(std::string(key) + " is not a string");
    return it->get<std::string>();
  };
  auto get_list = [&obj](const char* key) {
    std::vector<std::string> out;
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return out;
    if (!it->is_array()) throw std::invalid_argument(std::string(key) + " is not a list");
    for (const auto& item : *it) {
      if (!item.is_string()) throw std::invalid_argument(std::string(key) + " item is not a string");
      out.push_back(item.get<std::string>());
    }
    return out;
  };
  r.post_id = get_string("post_id");
  r.author_id = get_string("author_id");
  const auto ts = obj.find("timestamp");
  if (ts == obj.end()) throw std::invalid_argument("missing timestamp");
  if (ts->is_number_integer()) {
    r.timestamp = ts->get<Timestamp>();
  } else if (ts->is_string()) {
    r.timestamp = ParseTimestamp(ts->get<std::string>());
  } else {
    throw std::invalid_argument("timestamp has wrong type");
  }
  r.text = get_string("text");
  if (const auto it = obj.find("retweeted_author"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw std::invalid_argument("retweeted_author is not a string");
    r.retweeted_author = it->get<std::string>();
  }
  r.mentions = get_list("mentions");
  r.urls = get_list("urls");
  CheckRecord(r);
  return r;
}

json RecordToJson(const InteractionRecord& r) {
  json obj;
  obj["post_id"] = r.post_id;
  obj["author_id"] = r.author_id;
  obj["timestamp"] = r.timestamp;
  obj["text"] = r.text;
  obj["retweeted_author"] =
      r.retweeted_author ? json(*r.retweeted_author) : json(nullptr);
  obj["mentions"] = r.mentions;
  obj["urls"] = r.urls;
  return obj;
}

class DelimitedRowParser {
 public:
  explicit DelimitedRowParser(std::string_view header_line) {
    const auto names = SplitTabs(header_line);
    for (std::size_t i = 0; i < names.size(); ++i) columns_[names[i]] = i;
    width_ = names.size();
    for (const char* required : {"post_id", "author_id", "timestamp"}) {
      if (!columns_.count(required)) {
        throw std::runtime_error(std::string("record header lacks column ") + required);
      }
    }
  }

  InteractionRecord Parse(std::string_view line) const {
    const auto fields = SplitTabs(line);
    if (fields.size() != width_) {
      throw std::invalid_argument("expected " + std::to_string(width_) +
                                  " fields, found " + std::to_string(fields.size()));
    }
    auto field = [&](const char* name) -> std::string {
      const auto it = columns_.find(name);
      return it == columns_.end() ? std::string() : UnescapeField(fields[it->second]);
    };
    InteractionRecord r;
    r.post_id = field("post_id");
    r.author_id = field("author_id");
    r.timestamp = ParseTimestamp(field("timestamp"));
    r.text = field("text");
    if (auto rt = field("retweeted_author"); !rt.empty()) r.retweeted_author = std::move(rt);
    r.mentions = SplitSpaces(field("mentions"));
    r.urls = SplitSpaces(field("urls"));
    CheckRecord(r);
    return r;
  }

 private:
  std::map<std::string, std::size_t> columns_;
  std::size_t width_ = 0;
};

}  // namespace

RecordFormat ParseRecordFormat(std::string_view name) {
  if (name == "tsv" || name == "delimited-text") return RecordFormat::kDelimitedText;
  if (name == "jsonl" || name == "line-delimited-object") {
    return RecordFormat::kLineDelimitedObject;
  }
  throw std::invalid_argument("unknown record format: " + std::string(name));
}

std::string_view RecordFormatName(RecordFormat format) {
  return format == RecordFormat::kDelimitedText ? "tsv" : "jsonl";
}

RecordFormat GuessRecordFormat(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".tsv" || ext == ".txt") return RecordFormat::kDelimitedText;
  return RecordFormat::kLineDelimitedObject;
}

LoadResult ParseRecords(std::istream& in, RecordFormat format) {
  LoadResult result;
  std::unordered_set<std::string> seen_ids;
  std::optional<DelimitedRowParser> delimited;
  std::string line;
  std::size_t line_number = 0;

  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (format == RecordFormat::kDelimitedText && !delimited) {
      delimited.emplace(line);
      continue;
    }
    ++result.rows;
    try {
      InteractionRecord record = format == RecordFormat::kDelimitedText
                                     ? delimited->Parse(line)
                                     : RecordFromJson(json::parse(line));
      if (!seen_ids.insert(record.post_id).second) {
        throw std::invalid_argument("duplicate post_id " + record.post_id);
      }
      result.records.push_back(std::move(record));
    } catch (const std::exception& e) {
      ++result.malformed;
      if (result.diagnostics.size() < kMaxDiagnostics) {
        result.diagnostics.push_back("line " + std::to_string(line_number) + ": " + e.what());
      }
    }
  }
  if (result.rows > 0 && 2 * result.malformed > result.rows) {
    std::string message = "too many malformed rows: " + std::to_string(result.malformed) +
                          " of " + std::to_string(result.rows);
    if (!result.diagnostics.empty()) message += " (first: " + result.diagnostics.front() + ")";
    throw std::runtime_error(message);
  }
  return result;
}

LoadResult LoadRecords(const std::filesystem::path& path, RecordFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read record file: " + path.string());
  return ParseRecords(in, format);
}

void WriteRecords(std::span<const InteractionRecord> records, std::ostream& out,
                  RecordFormat format) {
  if (format == RecordFormat::kLineDelimitedObject) {
    for (const auto& r : records) out << RecordToJson(r).dump() << '\n';
    return;
  }
  TsvTable table(RecordColumns());
  for (const auto& r : records) {
    table.AddRow({r.post_id, r.author_id, std::to_string(r.timestamp), r.text,
                  r.retweeted_author.value_or(""), JoinSpaces(r.mentions),
                  JoinSpaces(r.urls)});
  }
  table.Write(out);
}

void WriteRecords(std::span<const InteractionRecord> records,
                  const std::filesystem::path& path, RecordFormat format) {
  std::ostringstream out;
  WriteRecords(records, out, format);
  WriteTextFile(path, out.str());
}

chr::year_month_day ParseIsoDate(std::string_view text) {
  try {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw std::invalid_argument("");
    const chr::year_month_day date{chr::year{ParseFixedInt(text, 0, 4)},
                                   chr::month{static_cast<unsigned>(ParseFixedInt(text, 5, 2))},
                                   chr::day{static_cast<unsigned>(ParseFixedInt(text, 8, 2))}};
    if (!date.ok()) throw std::invalid_argument("");
    return date;
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("invalid ISO-8601 date: '" + std::string(text) + "'");
  }
}

std::string FormatIsoDate(chr::year_month_day date) {
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buffer;
}

Timestamp StartOfDay(chr::year_month_day date) {
  return static_cast<Timestamp>(chr::sys_days(date).time_since_epoch().count()) *
         kSecondsPerDay;
}

chr::year_month_day DateOf(Timestamp t) {
  return chr::year_month_day{chr::floor<chr::days>(chr::sys_seconds{chr::seconds{t}})};
}

Timestamp ParseTimestamp(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (text.empty()) throw std::invalid_argument("empty timestamp");

  Timestamp epoch = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), epoch);
  if (ec == std::errc() && ptr == text.data() + text.size()) return epoch;

  const std::string original(text);
  try {
    Timestamp t = StartOfDay(ParseIsoDate(text.substr(0, std::min<std::size_t>(10, text.size()))));
    std::size_t pos = 10;
    if (pos == text.size()) return t;
    if (text[pos] != 'T' && text[pos] != ' ') throw std::invalid_argument("");
    ++pos;
    const int hour = ParseFixedInt(text, pos, 2);
    if (pos + 2 >= text.size() || text[pos + 2] != ':') throw std::invalid_argument("");
    const int minute = ParseFixedInt(text, pos + 3, 2);
    pos += 5;
    int second = 0;
    if (pos < text.size() && text[pos] == ':') {
      second = ParseFixedInt(text, pos + 1, 2);
      pos += 3;
      if (pos < text.size() && text[pos] == '.') {
        ++pos;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
      }
    }
    if (hour > 23 || minute > 59 || second > 60) throw std::invalid_argument("");
    t += hour * 3600 + minute * 60 + second;
    if (pos == text.size()) return t;
    if (text[pos] == 'Z' && pos + 1 == text.size()) return t;
    if (text[pos] != '+' && text[pos] != '-') throw std::invalid_argument("");
    const int sign = text[pos] == '+' ? 1 : -1;
    const int off_hour = ParseFixedInt(text, pos + 1, 2);
    std::size_t mpos = pos + 3;
    if (mpos < text.size() && text[mpos] == ':') ++mpos;
    const int off_minute = ParseFixedInt(text, mpos, 2);
    if (mpos + 2 != text.size()) throw std::invalid_argument("");
    return t - sign * (off_hour * 3600 + off_minute * 60);
  } catch (const std::invalid_argument&) {
    throw std::invalid_argument("invalid timestamp: '" + original + "'");
  }
}

int TimeWindow::days() const {
  return static_cast<int>((chr::sys_days(end) - chr::sys_days(start)).count()) + 1;
}

std::vector<TimeWindow> DefaultWindows() {
  using chr::year;
  using chr::month;
  using chr::day;
  auto ymd = [](int y, unsigned m, unsigned d) {
    return chr::year_month_day{year{y}, month{m}, day{d}};
  };
  return {
      {"pre-Covid", ymd(2019, 9, 5), ymd(2019, 12, 31)},
      {"early-Covid", ymd(2020, 1, 1), ymd(2020, 3, 8)},
      {"pre-vaccine", ymd(2020, 3, 9), ymd(2020, 10, 31)},
      {"early-vaccine", ymd(2020, 11, 1), ymd(2021, 4, 16)},
      {"vaccine-drive", ymd(2021, 4, 17), ymd(2021, 7, 31)},
      {"late-vaccine", ymd(2021, 8, 1), ymd(2021, 11, 7)},
  };
}

void ValidateWindows(std::span<const TimeWindow> windows) {
  std::set<std::string> names;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    if (w.name.empty()) throw std::invalid_argument("window without a name");
    if (!names.insert(w.name).second) {
      throw std::invalid_argument("duplicate window name " + w.name);
    }
    if (!w.start.ok() || !w.end.ok() || w.end < w.start) {
      throw std::invalid_argument("window " + w.name + " ends before it starts");
    }
    if (i > 0 && !(windows[i - 1].end < w.start)) {
      throw std::invalid_argument("window " + w.name + " overlaps or precedes " +
                                  windows[i - 1].name);
    }
  }
}

std::vector<TimeWindow> WindowsFromJson(const json& doc) {
  const json& list = doc.is_object() ? doc.at("windows") : doc;
  if (!list.is_array()) throw std::invalid_argument("window config must be a list");
  std::vector<TimeWindow> windows;
  for (const auto& item : list) {
    windows.push_back({item.at("name").get<std::string>(),
                       ParseIsoDate(item.at("start").get<std::string>()),
                       ParseIsoDate(item.at("end").get<std::string>())});
  }
  ValidateWindows(windows);
  return windows;
}

json WindowsToJson(std::span<const TimeWindow> windows) {
  json list = json::array();
  for (const auto& w : windows) {
    list.push_back({{"name", w.name},
                    {"start", FormatIsoDate(w.start)},
                    {"end", FormatIsoDate(w.end)}});
  }
  return list;
}

std::vector<TimeWindow> LoadWindows(const std::filesystem::path& path) {
  return WindowsFromJson(json::parse(ReadTextFile(path)));
}

Segmentation Segment(std::span<const InteractionRecord> records,
                     std::span<const TimeWindow> windows) {
  ValidateWindows(windows);
  Segmentation result;
  result.per_window.resize(windows.size());
  std::vector<Timestamp> starts;
  for (const auto& w : windows) starts.push_back(w.first_second());
  for (const auto& r : records) {
    // Last window whose start is <= timestamp; windows are ordered.
    const auto it = std::upper_bound(starts.begin(), starts.end(), r.timestamp);
    if (it == starts.begin()) {
      ++result.dropped;
      continue;
    }
    const std::size_t index = static_cast<std::size_t>(it - starts.begin()) - 1;
    if (windows[index].Contains(r.timestamp)) {
      result.per_window[index].push_back(r);
    } else {
      ++result.dropped;
    }
  }
  return result;
}

std::string_view StanceName(Stance stance) {
  switch (stance) {
    case Stance::kSupporter: return "supporter";
    case Stance::kHesitant: return "hesitant";
    case Stance::kOther: return "other";
    case Stance::kPets: return "pets";
  }
  return "other";
}

std::optional<Stance> ParseStance(std::string_view name) {
  for (Stance s : {Stance::kSupporter, Stance::kHesitant, Stance::kOther, Stance::kPets}) {
    if (name == StanceName(s)) return s;
  }
  return std::nullopt;
}

std::vector<StanceLabel> ParseAnnotations(std::istream& in) {
  std::vector<StanceLabel> labels;
  std::string line;
  std::map<std::string, std::size_t> columns;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = SplitTabs(line);
    if (columns.empty()) {
      for (std::size_t i = 0; i < fields.size(); ++i) columns[fields[i]] = i;
      for (const char* name : {"user_id", "label", "annotator_id"}) {
        if (!columns.count(name)) {
          throw std::runtime_error(std::string("annotation header lacks column ") + name);
        }
      }
      continue;
    }
    auto field = [&](const char* name) -> const std::string& {
      const std::size_t i = columns.at(name);
      if (i >= fields.size()) {
        throw std::runtime_error("annotation line " + std::to_string(line_number) +
                                 " is too short");
      }
      return fields[i];
    };
    const auto label = ParseStance(field("label"));
    if (!label) {
      throw std::runtime_error("annotation line " + std::to_string(line_number) +
                               ": unknown label '" + field("label") + "'");
    }
    labels.push_back({field("user_id"), *label, field("annotator_id")});
  }
  return labels;
}

std::vector<StanceLabel> LoadAnnotations(const std::filesystem::path& path) {
  std::istringstream in(ReadTextFile(path));
  return ParseAnnotations(in);
}

void WriteAnnotations(std::span<const StanceLabel> labels, std::ostream& out) {
  TsvTable table({"user_id", "label", "annotator_id"});
  for (const auto& l : labels) {
    table.AddRow({l.user_id, std::string(StanceName(l.label)), l.annotator_id});
  }
  table.Write(out);
}

std::map<std::string, Stance> ResolveAnnotations(std::span<const StanceLabel> labels) {
  std::map<std::string, std::map<Stance, int>> votes;
  for (const auto& l : labels) ++votes[l.user_id][l.label];
  std::map<std::string, Stance> resolved;
  for (const auto& [user, counts] : votes) {
    int best = 0;
    int winners = 0;
    Stance winner = Stance::kOther;
    for (const auto& [stance, n] : counts) {
      if (n > best) {
        best = n;
        winners = 1;
        winner = stance;
      } else if (n == best) {
        ++winners;
      }
    }
    resolved[user] = winners == 1 ? winner : Stance::kOther;
  }
  return resolved;
}

std::map<std::string, std::map<std::string, Stance>> LabelsByAnnotator(
    std::span<const StanceLabel> labels) {
  std::map<std::string, std::map<std::string, Stance>> out;
  for (const auto& l : labels) out[l.annotator_id][l.user_id] = l.label;
  return out;
}

KappaResult CohenKappa(const std::map<std::string, Stance>& labels_a,
                       const std::map<std::string, Stance>& labels_b) {
  if (labels_a.empty() || labels_a.size() != labels_b.size()) {
    throw std::invalid_argument("cohen kappa needs two labelings of the same users");
  }
  constexpr int kCategories = 4;
  std::int64_t agree = 0;
  std::int64_t margin_a[kCategories] = {};
  std::int64_t margin_b[kCategories] = {};
  auto it_b = labels_b.begin();
  for (const auto& [user, label_a] : labels_a) {
    if (it_b->first != user) {
      throw std::invalid_argument("cohen kappa: user " + user +
                                  " is not labeled by both annotators");
    }
    const int a = static_cast<int>(label_a);
    const int b = static_cast<int>(it_b->second);
    ++margin_a[a];
    ++margin_b[b];
    if (a == b) ++agree;
    ++it_b;
  }
  const auto n = static_cast<std::int64_t>(labels_a.size());
  std::int64_t chance = 0;  // n^2 * p_e
  for (int c = 0; c < kCategories; ++c) chance += margin_a[c] * margin_b[c];

  KappaResult result;
  result.items = labels_a.size();
  result.observed_agreement = static_cast<double>(agree) / static_cast<double>(n);
  result.expected_agreement =
      static_cast<double>(chance) / static_cast<double>(n * n);
  // kappa = (p_o - p_e) / (1 - p_e), evaluated on integer counts so that the
  // only rounding is the final division.
  const std::int64_t numerator = agree * n - chance;
  const std::int64_t denominator = n * n - chance;
  result.kappa = denominator == 0
                     ? 1.0
                     : static_cast<double>(numerator) / static_cast<double>(denominator);
  return result;
}

double Median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of an empty sequence");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return (lower + upper) / 2.0;
}

SpanSummary EngagementSpan(std::span<const InteractionRecord> records,
                           const std::set<std::string>& users) {
  std::map<std::string, std::pair<Timestamp, Timestamp>> range;
  for (const auto& r : records) {
    if (!users.count(r.author_id)) continue;
    auto [it, inserted] = range.try_emplace(r.author_id, r.timestamp, r.timestamp);
    if (!inserted) {
      it->second.first = std::min(it->second.first, r.timestamp);
      it->second.second = std::max(it->second.second, r.timestamp);
    }
  }
  SpanSummary summary;
  std::vector<double> spans;
  double total = 0.0;
  for (const auto& [user, first_last] : range) {
    const double days = static_cast<double>(first_last.second - first_last.first) /
                        static_cast<double>(kSecondsPerDay);
    summary.days_by_user[user] = days;
    spans.push_back(days);
    total += days;
  }
  if (!spans.empty()) {
    summary.mean = total / static_cast<double>(spans.size());
    summary.median = Median(spans);
  }
  return summary;
}

PostingStats ComputePostingStats(std::span<const InteractionRecord> records,
                                 const std::map<std::string, Stance>& labels,
                                 const TimeWindow& window) {
  if (window.days() < 1) throw std::invalid_argument("window shorter than a day");
  PostingStats stats;
  stats.window = window.name;
  stats.window_days = window.days();

  std::map<Stance, std::map<std::string, std::size_t>> posts;
  std::vector<InteractionRecord> in_window;
  for (const auto& r : records) {
    if (!window.Contains(r.timestamp)) continue;
    const auto label = labels.find(r.author_id);
    if (label == labels.end()) continue;
    ++posts[label->second][r.author_id];
    in_window.push_back(r);
  }
  const double days = static_cast<double>(stats.window_days);
  for (Stance s : {Stance::kSupporter, Stance::kHesitant, Stance::kOther, Stance::kPets}) {
    const auto it = posts.find(s);
    if (it == posts.end() || it->second.empty()) {
      stats.groups[s] = std::nullopt;
      continue;
    }
    GroupPostingStats g;
    std::vector<double> counts;
    std::set<std::string> users;
    for (const auto& [user, n] : it->second) {
      counts.push_back(static_cast<double>(n));
      users.insert(user);
      g.posts += n;
    }
    g.users = counts.size();
    g.mean_posts_per_user = static_cast<double>(g.posts) / static_cast<double>(g.users);
    g.median_posts_per_user = Median(counts);
    g.mean_posts_per_user_per_day = g.mean_posts_per_user / days;
    g.median_posts_per_user_per_day = g.median_posts_per_user / days;
    const auto spans = EngagementSpan(in_window, users);
    g.mean_span_days = spans.mean.value_or(0.0);
    g.median_span_days = spans.median.value_or(0.0);
    stats.groups[s] = g;
  }
  return stats;
}

}  // namespace echoscope
