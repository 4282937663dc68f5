#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualcoder/error.hpp"
#include "dualcoder/models.hpp"

namespace dualcoder {

// One dataset sample as described by the manifest.
struct UtteranceRecord {
  std::string id;
  std::string wav_path;  // resolved against the manifest's directory
  std::string transcript;
  int label = -1;  // index into kClassNames
  std::string speaker;  // optional
  std::string session;  // optional
};

inline int label_index(const std::string& name) {
  auto it = std::find(kClassNames.begin(), kClassNames.end(), name);
  if (it == kClassNames.end())
    throw ValueError("unknown label '" + name + "' (expected angry|happy|sad|neutral)");
  return static_cast<int>(it - kClassNames.begin());
}

// JSONL manifest: one record per line with fields id, wav, transcript, label
// and optional speaker/session. Paths are resolved relative to the manifest.
// The referenced WAV must exist at ingestion time.
inline std::vector<UtteranceRecord> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  const auto base = std::filesystem::path(path).parent_path();

  std::vector<UtteranceRecord> records;
  std::unordered_set<std::string> seen_ids;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("manifest is not valid JSONL: ") + e.what(), line_no);
    }
    UtteranceRecord rec;
    try {
      rec.id = j.at("id").get<std::string>();
      rec.transcript = j.at("transcript").get<std::string>();
      const auto wav = j.at("wav").get<std::string>();
      auto wav_path = std::filesystem::path(wav);
      if (wav_path.is_relative()) wav_path = base / wav_path;
      rec.wav_path = wav_path.string();
      rec.label = label_index(j.at("label").get<std::string>());
      if (j.contains("speaker")) rec.speaker = j.at("speaker").get<std::string>();
      if (j.contains("session")) rec.session = j.at("session").get<std::string>();
    } catch (const nlohmann::json::out_of_range& e) {
      throw ParseError(std::string("manifest record missing field: ") + e.what(), line_no);
    } catch (const ValueError& e) {
      throw ParseError(e.what(), line_no);
    }
    if (!seen_ids.insert(rec.id).second)
      throw ParseError("duplicate utterance id '" + rec.id + "'", line_no);
    if (!std::filesystem::exists(rec.wav_path))
      throw ParseError("wav file not found: " + rec.wav_path, line_no);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace dualcoder
