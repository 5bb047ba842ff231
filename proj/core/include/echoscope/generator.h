#ifndef ECHOSCOPE_GENERATOR_H_
#define ECHOSCOPE_GENERATOR_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "echoscope/ingest.h"
#include "echoscope/polarization.h"

namespace echoscope {

// A planted topic: words with relative weights. A "word" may hold a space,
// in which case it is always emitted as that exact word sequence.
struct PlantedTopic {
  std::string name;
  std::vector<std::string> words;
  std::vector<double> weights;  // parallel to words
};

struct WeightedDomain {
  std::string domain;
  double weight = 1.0;
};

struct SideSpec {
  std::size_t users = 500;
  double posting_rate = 0.02;               // posts per regular user per day
  double retweet_probability = 0.75;        // share of posts that are retweets
  double cross_retweet_probability = 0.01;  // per followee slot
  double mention_mixing = 0.3;              // share of mentions aimed at the other side
  double switch_rate = 0.02;                // per window transition, non-hubs only
  std::vector<PlantedTopic> topics;         // side-specific topics
  std::vector<WeightedDomain> domains;
};

struct GeneratorSpec {
  std::uint64_t seed = 1;
  std::vector<TimeWindow> windows = DefaultWindows();
  SideSpec supporter;
  SideSpec hesitant;
  std::vector<PlantedTopic> shared_topics;
  double active_probability = 0.85;  // per user and window
  // Hubs are the accounts most others retweet. They post at their own rate,
  // retweet each other, never switch and are always active.
  std::size_t hubs_per_side = 20;
  double hub_posting_rate = 1.0;
  std::size_t hub_followees = 19;
  // Chance weight of one regular user as a retweet target, relative to a hub.
  double regular_popularity = 0.0;
  std::vector<double> followee_weights{1.0, 1.0, 1.0};
  double mention_probability = 0.3;  // per original post
  double url_probability = 0.25;     // per post
  std::size_t topics_per_post = 2;
  std::size_t min_words = 6;
  std::size_t max_words = 10;
  double filler_probability = 0.3;   // chance of a stopword after each word
  double query_probability = 0.3;
  double hashtag_probability = 0.1;
  double number_probability = 0.1;
  std::size_t annotated_per_side = 150;
  double annotator_noise = 0.05;     // chance an annotator says "other"
};

// The polarized scenario used throughout the tests: two sides of 500 users,
// four shared and four side-specific topics, six windows.
GeneratorSpec DefaultGeneratorSpec();

// Missing keys keep their defaults. Throws std::invalid_argument on values
// outside their ranges.
GeneratorSpec GeneratorSpecFromJson(const nlohmann::json& json);
nlohmann::json GeneratorSpecToJson(const GeneratorSpec& spec);
void ValidateGeneratorSpec(const GeneratorSpec& spec);

struct GroundTruthUser {
  std::string id;
  bool hub = false;
  bool annotated = false;
  std::vector<Side> side;    // per window
  std::vector<bool> active;  // per window
};

struct GroundTruth {
  std::vector<std::string> window_names;
  std::vector<GroundTruthUser> users;
  // Per transition t -> t+1, users that changed side.
  std::vector<std::vector<std::string>> switchers;
  std::vector<std::string> supporter_topics;  // names
  std::vector<std::string> hesitant_topics;
  std::vector<std::string> shared_topics;
  std::map<std::string, std::vector<std::string>> topic_words;
  std::vector<std::string> collocations;

  std::map<std::string, Side> SidesInWindow(std::size_t window) const;
};

nlohmann::json GroundTruthToJson(const GroundTruth& truth);
GroundTruth GroundTruthFromJson(const nlohmann::json& json);

struct GeneratedCorpus {
  std::vector<InteractionRecord> records;  // sorted by time
  std::vector<StanceLabel> annotations;
  GroundTruth truth;
};

GeneratedCorpus GenerateCorpus(const GeneratorSpec& spec);

// Writes records.tsv, annotations.tsv, truth.json and windows.json.
void WriteCorpus(const GeneratedCorpus& corpus, const GeneratorSpec& spec,
                 const std::filesystem::path& directory);

}  // namespace echoscope

#endif  // ECHOSCOPE_GENERATOR_H_
