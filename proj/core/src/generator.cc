#include "echoscope/generator.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "echoscope/random.h"
#include "echoscope/report.h"
#include "echoscope/topics.h"

namespace echoscope {
namespace {

constexpr std::size_t kWordsPerTopic = 25;
constexpr double kWordExponent = 0.7;
constexpr std::uint64_t kVocabularySeed = 0x70b1c5;

const char* const kFillers[] = {"il", "la", "di", "che", "e", "non", "per", "un",
                                "una", "in", "con", "sono", "lo", "gli", "le", "del"};
const char* const kQueryWords[] = {"vaccino", "vaccini", "vaccinazione", "novax", "provax"};

class Picker {
 public:
  Picker() = default;
  explicit Picker(std::span<const double> weights) {
    double running = 0.0;
    for (double w : weights) {
      running += w;
      cumulative_.push_back(running);
    }
  }
  bool empty() const { return cumulative_.empty() || cumulative_.back() <= 0.0; }
  std::size_t Pick(Rng& rng) const {
    const double x = UniformUnit(rng) * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
    return std::min(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

template <typename T>
void Shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[UniformIndex(rng, i)]);
  }
}

// Pronounceable consonant-vowel pseudo-words, identical for every seed.
std::vector<std::string> PseudoWords(std::size_t count) {
  static const char kConsonants[] = "bcdfglmnprstvz";
  static const char kVowels[] = "aeiou";
  const Lexicons lexicons = DefaultLexicons();
  Rng rng(kVocabularySeed);
  std::set<std::string> seen;
  std::vector<std::string> words;
  while (words.size() < count) {
    std::string word;
    const std::size_t syllables = 3 + UniformIndex(rng, 2);
    for (std::size_t s = 0; s < syllables; ++s) {
      word += kConsonants[UniformIndex(rng, sizeof(kConsonants) - 1)];
      word += kVowels[UniformIndex(rng, sizeof(kVowels) - 1)];
    }
    if (lexicons.Drops(word) || !seen.insert(word).second) continue;
    words.push_back(word);
  }
  return words;
}

PlantedTopic MakeTopic(std::string name, std::vector<std::string> words) {
  PlantedTopic topic;
  topic.name = std::move(name);
  for (std::size_t j = 0; j < words.size(); ++j) {
    topic.weights.push_back(1.0 / std::pow(static_cast<double>(j + 1), kWordExponent));
  }
  topic.words = std::move(words);
  return topic;
}

void CheckProbability(double p, const std::string& name) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(name + " must lie in [0, 1]");
}

void CheckTopics(const std::vector<PlantedTopic>& topics) {
  for (const auto& t : topics) {
    if (t.words.empty() || t.words.size() != t.weights.size()) {
      throw std::invalid_argument("topic " + t.name + " needs words with matching weights");
    }
    for (double w : t.weights) {
      if (!(w > 0.0)) throw std::invalid_argument("topic " + t.name + " has a non-positive weight");
    }
  }
}

void CheckSide(const SideSpec& side, const std::string& name, std::size_t hubs) {
  if (side.users < 1) throw std::invalid_argument(name + ".users must be >= 1");
  if (hubs > side.users) throw std::invalid_argument("hubs_per_side exceeds " + name + ".users");
  if (!(side.posting_rate >= 0.0 && std::isfinite(side.posting_rate))) {
    throw std::invalid_argument(name + ".posting_rate must be >= 0");
  }
  CheckProbability(side.retweet_probability, name + ".retweet_probability");
  CheckProbability(side.cross_retweet_probability, name + ".cross_retweet_probability");
  CheckProbability(side.mention_mixing, name + ".mention_mixing");
  CheckProbability(side.switch_rate, name + ".switch_rate");
  CheckTopics(side.topics);
  for (const auto& d : side.domains) {
    if (d.domain.empty() || !(d.weight > 0.0)) {
      throw std::invalid_argument(name + " has an invalid domain entry");
    }
  }
}

nlohmann::json TopicsToJson(const std::vector<PlantedTopic>& topics) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& t : topics) {
    out.push_back({{"name", t.name}, {"words", t.words}, {"weights", t.weights}});
  }
  return out;
}

std::vector<PlantedTopic> TopicsFromJson(const nlohmann::json& json) {
  std::vector<PlantedTopic> topics;
  for (const auto& t : json) {
    PlantedTopic topic;
    topic.name = t.at("name").get<std::string>();
    topic.words = t.at("words").get<std::vector<std::string>>();
    if (t.contains("weights")) {
      topic.weights = t.at("weights").get<std::vector<double>>();
    } else {
      topic = MakeTopic(topic.name, topic.words);
    }
    topics.push_back(std::move(topic));
  }
  return topics;
}

nlohmann::json SideToJson(const SideSpec& side) {
  nlohmann::json domains = nlohmann::json::array();
  for (const auto& d : side.domains) domains.push_back({{"domain", d.domain}, {"weight", d.weight}});
  return {{"users", side.users},
          {"posting_rate", side.posting_rate},
          {"retweet_probability", side.retweet_probability},
          {"cross_retweet_probability", side.cross_retweet_probability},
          {"mention_mixing", side.mention_mixing},
          {"switch_rate", side.switch_rate},
          {"topics", TopicsToJson(side.topics)},
          {"domains", domains}};
}

SideSpec SideFromJson(const nlohmann::json& json, SideSpec side) {
  side.users = json.value("users", side.users);
  side.posting_rate = json.value("posting_rate", side.posting_rate);
  side.retweet_probability = json.value("retweet_probability", side.retweet_probability);
  side.cross_retweet_probability =
      json.value("cross_retweet_probability", side.cross_retweet_probability);
  side.mention_mixing = json.value("mention_mixing", side.mention_mixing);
  side.switch_rate = json.value("switch_rate", side.switch_rate);
  if (json.contains("topics")) side.topics = TopicsFromJson(json.at("topics"));
  if (json.contains("domains")) {
    side.domains.clear();
    for (const auto& d : json.at("domains")) {
      side.domains.push_back({d.at("domain").get<std::string>(), d.value("weight", 1.0)});
    }
  }
  return side;
}

std::string PaddedId(char prefix, std::size_t number, std::size_t width) {
  std::string digits = std::to_string(number);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

std::string UserId(std::size_t index) { return PaddedId('u', index + 1, 4); }

class PostWriter {
 public:
  PostWriter(const GeneratorSpec& spec, Rng& rng) : spec_(spec), rng_(rng) {
    for (int s = 0; s < 2; ++s) {
      const SideSpec& side = s == 0 ? spec.supporter : spec.hesitant;
      pools_[s] = spec.shared_topics;
      pools_[s].insert(pools_[s].end(), side.topics.begin(), side.topics.end());
      for (const auto& t : pools_[s]) word_pickers_[s].emplace_back(t.weights);
      std::vector<double> weights;
      for (const auto& d : side.domains) weights.push_back(d.weight);
      domain_pickers_[s] = Picker(weights);
    }
  }

  std::string Text(int side) {
    const auto& pool = pools_[side];
    if (pool.empty()) return "";
    std::vector<std::size_t> chosen(pool.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) chosen[i] = i;
    Shuffle(chosen, rng_);
    chosen.resize(std::min(spec_.topics_per_post, chosen.size()));
    const std::size_t length =
        spec_.min_words + UniformIndex(rng_, spec_.max_words - spec_.min_words + 1);
    std::vector<std::string> parts;
    for (std::size_t i = 0; i < length; ++i) {
      const std::size_t t = chosen[UniformIndex(rng_, chosen.size())];
      std::string word = pool[t].words[word_pickers_[side][t].Pick(rng_)];
      if (word.find(' ') == std::string::npos && UniformUnit(rng_) < spec_.hashtag_probability) {
        word = "#" + word;
      }
      parts.push_back(std::move(word));
      if (UniformUnit(rng_) < spec_.filler_probability) {
        parts.emplace_back(kFillers[UniformIndex(rng_, std::size(kFillers))]);
      }
    }
    if (UniformUnit(rng_) < spec_.query_probability) {
      parts.insert(parts.begin() + static_cast<std::ptrdiff_t>(UniformIndex(rng_, parts.size() + 1)),
                   kQueryWords[UniformIndex(rng_, std::size(kQueryWords))]);
    }
    if (UniformUnit(rng_) < spec_.number_probability) {
      parts.insert(parts.begin() + static_cast<std::ptrdiff_t>(UniformIndex(rng_, parts.size() + 1)),
                   std::to_string(1 + UniformIndex(rng_, 2021)));
    }
    std::string text;
    for (const auto& p : parts) {
      if (!text.empty()) text += ' ';
      text += p;
    }
    if (!text.empty() && text[0] >= 'a' && text[0] <= 'z' && UniformUnit(rng_) < 0.5) {
      text[0] = static_cast<char>(text[0] - 'a' + 'A');
    }
    static const char* const kEndings[] = {"", ".", "!", "?", "..."};
    text += kEndings[UniformIndex(rng_, std::size(kEndings))];
    return text;
  }

  std::optional<std::string> Url(int side) {
    if (domain_pickers_[side].empty()) return std::nullopt;
    const SideSpec& s = side == 0 ? spec_.supporter : spec_.hesitant;
    const std::string& domain = s.domains[domain_pickers_[side].Pick(rng_)].domain;
    static const char* const kPrefixes[] = {"https://www.", "https://", "http://www."};
    return std::string(kPrefixes[UniformIndex(rng_, std::size(kPrefixes))]) + domain + "/" +
           std::to_string(UniformIndex(rng_, 1'000'000));
  }

 private:
  const GeneratorSpec& spec_;
  Rng& rng_;
  std::array<std::vector<PlantedTopic>, 2> pools_;
  std::array<std::vector<Picker>, 2> word_pickers_;
  std::array<Picker, 2> domain_pickers_;
};

}  // namespace

GeneratorSpec DefaultGeneratorSpec() {
  GeneratorSpec spec;
  const auto words = PseudoWords(12 * kWordsPerTopic);
  auto slice = [&words](std::size_t topic) {
    return std::vector<std::string>(words.begin() + static_cast<std::ptrdiff_t>(topic * kWordsPerTopic),
                                    words.begin() + static_cast<std::ptrdiff_t>((topic + 1) * kWordsPerTopic));
  };
  for (std::size_t t = 0; t < 4; ++t) {
    auto shared = slice(t);
    if (t == 0) shared.insert(shared.begin(), "green pass");
    spec.shared_topics.push_back(MakeTopic("shared-" + std::to_string(t), shared));
    spec.supporter.topics.push_back(MakeTopic("supporter-" + std::to_string(t), slice(4 + t)));
    spec.hesitant.topics.push_back(MakeTopic("hesitant-" + std::to_string(t), slice(8 + t)));
  }
  spec.hesitant.posting_rate = 0.03;
  spec.supporter.domains = {{"ansa.it", 40},        {"repubblica.it", 30}, {"corriere.it", 22},
                            {"ilsole24ore.com", 15}, {"salute.gov.it", 10}, {"who.int", 6}};
  spec.hesitant.domains = {{"byoblu.com", 40},          {"youtube.com", 30}, {"imolaoggi.it", 22},
                           {"lantidiplomatico.it", 15}, {"telegram.me", 10}, {"rumble.com", 6}};
  return spec;
}

void ValidateGeneratorSpec(const GeneratorSpec& spec) {
  if (spec.windows.empty()) throw std::invalid_argument("generator needs at least one window");
  ValidateWindows(spec.windows);
  CheckSide(spec.supporter, "supporter", spec.hubs_per_side);
  CheckSide(spec.hesitant, "hesitant", spec.hubs_per_side);
  CheckTopics(spec.shared_topics);
  CheckProbability(spec.active_probability, "active_probability");
  CheckProbability(spec.mention_probability, "mention_probability");
  CheckProbability(spec.url_probability, "url_probability");
  CheckProbability(spec.filler_probability, "filler_probability");
  CheckProbability(spec.query_probability, "query_probability");
  CheckProbability(spec.hashtag_probability, "hashtag_probability");
  CheckProbability(spec.number_probability, "number_probability");
  CheckProbability(spec.annotator_noise, "annotator_noise");
  if (spec.followee_weights.empty() ||
      std::any_of(spec.followee_weights.begin(), spec.followee_weights.end(),
                  [](double w) { return !(w > 0.0); })) {
    throw std::invalid_argument("followee_weights must be non-empty and positive");
  }
  if (!(spec.hub_posting_rate >= 0.0 && std::isfinite(spec.hub_posting_rate))) {
    throw std::invalid_argument("hub_posting_rate must be >= 0");
  }
  if (!(spec.regular_popularity >= 0.0 && std::isfinite(spec.regular_popularity))) {
    throw std::invalid_argument("regular_popularity must be >= 0");
  }
  if (spec.min_words < 1 || spec.max_words < spec.min_words) {
    throw std::invalid_argument("need 1 <= min_words <= max_words");
  }
  if (spec.topics_per_post < 1) throw std::invalid_argument("topics_per_post must be >= 1");
}

GeneratorSpec GeneratorSpecFromJson(const nlohmann::json& json) {
  GeneratorSpec spec = DefaultGeneratorSpec();
  spec.seed = json.value("seed", spec.seed);
  if (json.contains("windows")) spec.windows = WindowsFromJson(json.at("windows"));
  if (json.contains("supporter")) spec.supporter = SideFromJson(json.at("supporter"), spec.supporter);
  if (json.contains("hesitant")) spec.hesitant = SideFromJson(json.at("hesitant"), spec.hesitant);
  if (json.contains("shared_topics")) spec.shared_topics = TopicsFromJson(json.at("shared_topics"));
  spec.active_probability = json.value("active_probability", spec.active_probability);
  spec.hubs_per_side = json.value("hubs_per_side", spec.hubs_per_side);
  spec.followee_weights = json.value("followee_weights", spec.followee_weights);
  spec.hub_posting_rate = json.value("hub_posting_rate", spec.hub_posting_rate);
  spec.hub_followees = json.value("hub_followees", spec.hub_followees);
  spec.regular_popularity = json.value("regular_popularity", spec.regular_popularity);
  spec.mention_probability = json.value("mention_probability", spec.mention_probability);
  spec.url_probability = json.value("url_probability", spec.url_probability);
  spec.topics_per_post = json.value("topics_per_post", spec.topics_per_post);
  spec.min_words = json.value("min_words", spec.min_words);
  spec.max_words = json.value("max_words", spec.max_words);
  spec.filler_probability = json.value("filler_probability", spec.filler_probability);
  spec.query_probability = json.value("query_probability", spec.query_probability);
  spec.hashtag_probability = json.value("hashtag_probability", spec.hashtag_probability);
  spec.number_probability = json.value("number_probability", spec.number_probability);
  spec.annotated_per_side = json.value("annotated_per_side", spec.annotated_per_side);
  spec.annotator_noise = json.value("annotator_noise", spec.annotator_noise);
  ValidateGeneratorSpec(spec);
  return spec;
}

nlohmann::json GeneratorSpecToJson(const GeneratorSpec& spec) {
  return {{"seed", spec.seed},
          {"windows", WindowsToJson(spec.windows)},
          {"supporter", SideToJson(spec.supporter)},
          {"hesitant", SideToJson(spec.hesitant)},
          {"shared_topics", TopicsToJson(spec.shared_topics)},
          {"active_probability", spec.active_probability},
          {"hubs_per_side", spec.hubs_per_side},
          {"followee_weights", spec.followee_weights},
          {"hub_posting_rate", spec.hub_posting_rate},
          {"hub_followees", spec.hub_followees},
          {"regular_popularity", spec.regular_popularity},
          {"mention_probability", spec.mention_probability},
          {"url_probability", spec.url_probability},
          {"topics_per_post", spec.topics_per_post},
          {"min_words", spec.min_words},
          {"max_words", spec.max_words},
          {"filler_probability", spec.filler_probability},
          {"query_probability", spec.query_probability},
          {"hashtag_probability", spec.hashtag_probability},
          {"number_probability", spec.number_probability},
          {"annotated_per_side", spec.annotated_per_side},
          {"annotator_noise", spec.annotator_noise}};
}

std::map<std::string, Side> GroundTruth::SidesInWindow(std::size_t window) const {
  std::map<std::string, Side> sides;
  for (const auto& u : users) {
    if (u.active.at(window)) sides[u.id] = u.side.at(window);
  }
  return sides;
}

nlohmann::json GroundTruthToJson(const GroundTruth& truth) {
  nlohmann::json users = nlohmann::json::array();
  for (const auto& u : truth.users) {
    std::vector<std::string> sides;
    for (Side s : u.side) sides.emplace_back(SideName(s));
    users.push_back({{"id", u.id},
                     {"hub", u.hub},
                     {"annotated", u.annotated},
                     {"side", sides},
                     {"active", std::vector<bool>(u.active.begin(), u.active.end())}});
  }
  return {{"windows", truth.window_names},
          {"users", users},
          {"switchers", truth.switchers},
          {"supporter_topics", truth.supporter_topics},
          {"hesitant_topics", truth.hesitant_topics},
          {"shared_topics", truth.shared_topics},
          {"topic_words", truth.topic_words},
          {"collocations", truth.collocations}};
}

GroundTruth GroundTruthFromJson(const nlohmann::json& json) {
  GroundTruth truth;
  truth.window_names = json.at("windows").get<std::vector<std::string>>();
  for (const auto& u : json.at("users")) {
    GroundTruthUser user;
    user.id = u.at("id").get<std::string>();
    user.hub = u.value("hub", false);
    user.annotated = u.value("annotated", false);
    for (const auto& s : u.at("side")) {
      user.side.push_back(s == "S" ? Side::kSupporter
                                   : s == "H" ? Side::kHesitant : Side::kUnassigned);
    }
    for (bool a : u.at("active").get<std::vector<bool>>()) user.active.push_back(a);
    truth.users.push_back(std::move(user));
  }
  truth.switchers = json.at("switchers").get<std::vector<std::vector<std::string>>>();
  truth.supporter_topics = json.at("supporter_topics").get<std::vector<std::string>>();
  truth.hesitant_topics = json.at("hesitant_topics").get<std::vector<std::string>>();
  truth.shared_topics = json.at("shared_topics").get<std::vector<std::string>>();
  truth.topic_words =
      json.at("topic_words").get<std::map<std::string, std::vector<std::string>>>();
  truth.collocations = json.at("collocations").get<std::vector<std::string>>();
  return truth;
}

GeneratedCorpus GenerateCorpus(const GeneratorSpec& spec) {
  ValidateGeneratorSpec(spec);
  GeneratedCorpus corpus;
  GroundTruth& truth = corpus.truth;
  const std::size_t n_windows = spec.windows.size();
  const std::size_t n_users = spec.supporter.users + spec.hesitant.users;
  const SideSpec* side_specs[2] = {&spec.supporter, &spec.hesitant};

  // Sides are dealt over a shuffled id range; popularity follows the order
  // within each side.
  Rng user_rng(DeriveSeed(spec.seed, "users"));
  std::vector<std::size_t> order(n_users);
  for (std::size_t i = 0; i < n_users; ++i) order[i] = i;
  Shuffle(order, user_rng);
  std::vector<double> popularity(n_users);
  truth.users.resize(n_users);
  std::vector<Side> side(n_users);
  for (std::size_t r = 0; r < n_users; ++r) {
    const std::size_t u = order[r];
    const bool supporter = r < spec.supporter.users;
    const std::size_t rank = supporter ? r : r - spec.supporter.users;
    side[u] = supporter ? Side::kSupporter : Side::kHesitant;
    truth.users[u].hub = rank < spec.hubs_per_side;
    popularity[u] = truth.users[u].hub ? 1.0 : spec.regular_popularity;
  }
  for (std::size_t u = 0; u < n_users; ++u) truth.users[u].id = UserId(u);

  for (const auto& w : spec.windows) truth.window_names.push_back(w.name);
  for (const auto& t : spec.shared_topics) truth.shared_topics.push_back(t.name);
  for (const auto& t : spec.supporter.topics) truth.supporter_topics.push_back(t.name);
  for (const auto& t : spec.hesitant.topics) truth.hesitant_topics.push_back(t.name);
  for (const auto* list : {&spec.shared_topics, &spec.supporter.topics, &spec.hesitant.topics}) {
    for (const auto& t : *list) {
      auto& words = truth.topic_words[t.name];
      for (const auto& w : t.words) {
        if (w.find(' ') != std::string::npos) {
          std::string joined = w;
          std::replace(joined.begin(), joined.end(), ' ', '_');
          truth.collocations.push_back(joined);
          words.push_back(joined);
        } else {
          words.push_back(w);
        }
      }
    }
  }

  std::vector<InteractionRecord> records;
  for (std::size_t w = 0; w < n_windows; ++w) {
    const TimeWindow& window = spec.windows[w];
    Rng rng(DeriveSeed(spec.seed, "window-" + std::to_string(w)));
    if (w > 0) {
      std::vector<std::string> switched;
      for (std::size_t u = 0; u < n_users; ++u) {
        const double rate = side_specs[static_cast<int>(side[u])]->switch_rate;
        if (!truth.users[u].hub && UniformUnit(rng) < rate) {
          side[u] = side[u] == Side::kSupporter ? Side::kHesitant : Side::kSupporter;
          switched.push_back(truth.users[u].id);
        }
      }
      truth.switchers.push_back(std::move(switched));
    }
    std::array<std::vector<std::size_t>, 2> members;
    for (std::size_t u = 0; u < n_users; ++u) {
      const bool active = truth.users[u].hub || UniformUnit(rng) < spec.active_probability;
      truth.users[u].active.push_back(active);
      truth.users[u].side.push_back(side[u]);
      if (active) members[static_cast<int>(side[u])].push_back(u);
    }
    std::array<Picker, 2> pickers;
    for (int s = 0; s < 2; ++s) {
      std::vector<double> weights;
      for (std::size_t u : members[s]) weights.push_back(popularity[u]);
      pickers[s] = Picker(weights);
    }
    auto pick_user = [&](int s, std::size_t self) -> std::optional<std::size_t> {
      if (pickers[s].empty()) return std::nullopt;
      for (int attempt = 0; attempt < 100; ++attempt) {
        const std::size_t u = members[s][pickers[s].Pick(rng)];
        if (u != self) return u;
      }
      return std::nullopt;
    };

    PostWriter writer(spec, rng);
    const Picker slot_picker(spec.followee_weights);
    const auto days = static_cast<std::uint64_t>(window.days());
    for (std::size_t u = 0; u < n_users; ++u) {
      if (!truth.users[u].active.back()) continue;
      const int own = static_cast<int>(side[u]);
      const SideSpec& own_spec = *side_specs[own];
      const bool hub = truth.users[u].hub;
      const std::size_t slots = hub ? spec.hub_followees : spec.followee_weights.size();
      std::vector<std::size_t> followees;
      for (std::size_t slot = 0; slot < slots; ++slot) {
        const int target_side =
            UniformUnit(rng) < own_spec.cross_retweet_probability ? 1 - own : own;
        for (int attempt = 0; attempt < 100; ++attempt) {
          const auto f = pick_user(target_side, u);
          if (!f) break;
          if (std::find(followees.begin(), followees.end(), *f) == followees.end()) {
            followees.push_back(*f);
            break;
          }
        }
      }
      std::poisson_distribution<std::size_t> posts(
          (hub ? spec.hub_posting_rate : own_spec.posting_rate) * static_cast<double>(days));
      const std::size_t count = posts(rng);
      for (std::size_t p = 0; p < count; ++p) {
        InteractionRecord record;
        record.author_id = truth.users[u].id;
        record.timestamp = window.first_second() +
                           static_cast<Timestamp>(UniformIndex(rng, days * kSecondsPerDay));
        int content_side = own;
        if (!followees.empty() && UniformUnit(rng) < own_spec.retweet_probability) {
          const std::size_t f =
              hub ? followees[UniformIndex(rng, followees.size())]
                  : followees[std::min(slot_picker.Pick(rng), followees.size() - 1)];
          record.retweeted_author = truth.users[f].id;
          content_side = static_cast<int>(side[f]);
          record.text = writer.Text(content_side);
        } else {
          record.text = writer.Text(own);
          if (UniformUnit(rng) < spec.mention_probability) {
            const int target = UniformUnit(rng) < own_spec.mention_mixing ? 1 - own : own;
            if (const auto m = pick_user(target, u)) {
              record.mentions.push_back(truth.users[*m].id);
              record.text = "@" + truth.users[*m].id + " " + record.text;
            }
          }
        }
        if (UniformUnit(rng) < spec.url_probability) {
          if (auto url = writer.Url(content_side)) {
            record.text += " " + *url;
            record.urls.push_back(std::move(*url));
          }
        }
        records.push_back(std::move(record));
      }
    }
  }

  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.timestamp, a.author_id, a.text) < std::tie(b.timestamp, b.author_id, b.text);
  });
  for (std::size_t i = 0; i < records.size(); ++i) {
    records[i].post_id = PaddedId('t', i + 1, 7);
  }
  corpus.records = std::move(records);

  // Annotators label users whose side never changes, so one label holds in
  // every window.
  Rng label_rng(DeriveSeed(spec.seed, "annotations"));
  for (int s = 0; s < 2; ++s) {
    std::vector<std::size_t> candidates;
    for (std::size_t u = 0; u < n_users; ++u) {
      const auto& sides = truth.users[u].side;
      const bool stable = std::all_of(sides.begin(), sides.end(),
                                      [s](Side x) { return static_cast<int>(x) == s; });
      const bool ever_active = std::find(truth.users[u].active.begin(),
                                         truth.users[u].active.end(), true) !=
                               truth.users[u].active.end();
      if (stable && ever_active) candidates.push_back(u);
    }
    Shuffle(candidates, label_rng);
    candidates.resize(std::min(candidates.size(), spec.annotated_per_side));
    std::sort(candidates.begin(), candidates.end());
    const Stance truth_label = s == 0 ? Stance::kSupporter : Stance::kHesitant;
    for (std::size_t u : candidates) {
      truth.users[u].annotated = true;
      for (const char* annotator : {"a1", "a2"}) {
        const Stance label =
            UniformUnit(label_rng) < spec.annotator_noise ? Stance::kOther : truth_label;
        corpus.annotations.push_back({truth.users[u].id, label, annotator});
      }
    }
  }
  std::sort(corpus.annotations.begin(), corpus.annotations.end(),
            [](const StanceLabel& a, const StanceLabel& b) {
              return std::tie(a.user_id, a.annotator_id) < std::tie(b.user_id, b.annotator_id);
            });
  return corpus;
}

void WriteCorpus(const GeneratedCorpus& corpus, const GeneratorSpec& spec,
                 const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  WriteRecords(corpus.records, directory / "records.tsv", RecordFormat::kDelimitedText);
  std::ostringstream annotations;
  WriteAnnotations(corpus.annotations, annotations);
  WriteTextFile(directory / "annotations.tsv", annotations.str());
  WriteTextFile(directory / "truth.json", GroundTruthToJson(corpus.truth).dump(2) + "\n");
  WriteTextFile(directory / "windows.json",
                nlohmann::json{{"windows", WindowsToJson(spec.windows)}}.dump(2) + "\n");
}

}  // namespace echoscope
