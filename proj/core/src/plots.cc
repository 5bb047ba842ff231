#include <algorithm>
#include <stdexcept>

#include "echoscope/pipeline.h"
#include "echoscope/report.h"

namespace echoscope {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct BundleWindow {
  std::string name;
  fs::path directory;
};

std::size_t Column(const TsvTable& table, std::string_view name) {
  const auto& header = table.header();
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) {
    throw std::runtime_error("table has no column '" + std::string(name) + "'");
  }
  return static_cast<std::size_t>(it - header.begin());
}

// Copies the named columns of one per-window table from every window into a
// single table led by the window name and its position.
class WindowTable {
 public:
  WindowTable(std::string file, std::vector<std::string> columns)
      : file_(std::move(file)), columns_(std::move(columns)) {}

  void Emit(std::span<const BundleWindow> windows, const fs::path& output,
            PlotManifest& manifest, const std::string& table_name) const {
    std::vector<std::string> header{"window", "window_index"};
    header.insert(header.end(), columns_.begin(), columns_.end());
    TsvTable out(header);
    std::size_t found = 0;
    std::vector<std::string> missing;
    for (std::size_t w = 0; w < windows.size(); ++w) {
      const fs::path path = windows[w].directory / file_;
      if (!fs::exists(path)) {
        missing.push_back(windows[w].name);
        continue;
      }
      ++found;
      const TsvTable in = ReadTsvFile(path);
      std::vector<std::size_t> index;
      for (const auto& c : columns_) index.push_back(Column(in, c));
      for (const auto& row : in.rows()) {
        std::vector<std::string> values{windows[w].name, std::to_string(w)};
        for (std::size_t i : index) values.push_back(row.at(i));
        out.AddRow(std::move(values));
      }
    }
    if (found == 0) {
      manifest.skipped.push_back(table_name + ": no window has " + file_);
      return;
    }
    for (const auto& name : missing) {
      manifest.skipped.push_back(table_name + ": window " + name + " has no " + file_);
    }
    out.WriteFile(output / table_name);
    manifest.tables.push_back(table_name);
  }

 private:
  std::string file_;
  std::vector<std::string> columns_;
};

}  // namespace

PlotManifest EmitPlotData(const fs::path& bundle, const fs::path& output) {
  PlotManifest manifest;
  fs::create_directories(output);

  std::vector<BundleWindow> windows;
  const fs::path bundle_manifest = bundle / "manifest.json";
  if (fs::exists(bundle_manifest)) {
    const json doc = json::parse(ReadTextFile(bundle_manifest));
    for (const auto& w : doc.value("windows", json::array())) {
      windows.push_back({w.at("name").get<std::string>(),
                         bundle / w.at("directory").get<std::string>()});
    }
  }

  if (fs::exists(bundle / "daily_volume.tsv")) {
    const TsvTable in = ReadTsvFile(bundle / "daily_volume.tsv");
    TsvTable out({"date", "posts", "retweets", "window"});
    const auto date = Column(in, "date");
    const auto posts = Column(in, "posts");
    const auto retweets = Column(in, "retweets");
    const auto window = Column(in, "window");
    for (const auto& row : in.rows()) {
      out.AddRow({row.at(date), row.at(posts), row.at(retweets), row.at(window)});
    }
    out.WriteFile(output / "daily_volume.tsv");
    manifest.tables.push_back("daily_volume.tsv");
  } else {
    manifest.skipped.push_back("daily_volume.tsv: bundle has no daily_volume.tsv");
  }

  WindowTable("rmca_histogram.tsv", {"lower", "upper", "count"})
      .Emit(windows, output, manifest, "rmca_histogram.tsv");

  if (fs::exists(bundle / "flow.tsv")) {
    const TsvTable in = ReadTsvFile(bundle / "flow.tsv");
    TsvTable out({"source", "target", "value"});
    const auto from_window = Column(in, "from_window");
    const auto to_window = Column(in, "to_window");
    const auto from_side = Column(in, "from_side");
    const auto to_side = Column(in, "to_side");
    const auto count = Column(in, "count");
    for (const auto& row : in.rows()) {
      if (row.at(count) == "0") continue;
      out.AddRow({row.at(from_window) + ":" + row.at(from_side),
                  row.at(to_window) + ":" + row.at(to_side), row.at(count)});
    }
    out.WriteFile(output / "flow_links.tsv");
    manifest.tables.push_back("flow_links.tsv");
  } else {
    manifest.skipped.push_back("flow_links.tsv: bundle has no flow.tsv");
  }

  WindowTable("rwc.tsv", {"k", "rwc", "rwc_stderr", "p_S_given_S", "p_H_given_S",
                          "p_S_given_H", "p_H_given_H"})
      .Emit(windows, output, manifest, "rwc_by_window.tsv");
  WindowTable("mention_share.tsv", {"from", "to", "weight", "share"})
      .Emit(windows, output, manifest, "mention_share.tsv");
  WindowTable("topics.tsv", {"provenance", "topic", "side_share", "importance"})
      .Emit(windows, output, manifest, "topic_scatter.tsv");

  WriteTextFile(output / "manifest.json",
                json{{"tables", manifest.tables}, {"skipped", manifest.skipped}}.dump(2) + "\n");
  return manifest;
}

}  // namespace echoscope
