#pragma once
// Result persistence: the fixed-schema run records (CSV and JSON mirrors,
// lossless round-trip via shortest round-trip number formatting) and the run
// manifest that makes any output reproducible bit-exactly.

#include <charconv>
#include <cstdint>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "harness.hpp"

namespace pmm {

inline constexpr const char* kToolName = "pmmlab";
inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kCsvHeader =
    "scheme,N,M,Q,detector,power,snr_db,metric,value,stderr,count,seed";

// Shortest representation that round-trips exactly.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("parse_double: bad number '" + s + "'");
  return v;
}

// One sweep point of one run.
struct RunRecord {
  std::string scheme;
  int n = 0;
  int m = 0;
  int q = 0;
  std::string detector;  // "-" when not applicable
  std::string power;     // preset name or "-"
  double snr_db = 0.0;
  std::string metric;
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t count = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const RunRecord& a, const RunRecord& b) {
    return a.scheme == b.scheme && a.n == b.n && a.m == b.m && a.q == b.q &&
           a.detector == b.detector && a.power == b.power && a.snr_db == b.snr_db &&
           a.metric == b.metric && a.value == b.value && a.std_error == b.std_error &&
           a.count == b.count && a.seed == b.seed;
  }
};

inline std::string to_csv(const std::vector<RunRecord>& records) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : records) {
    out += r.scheme;
    out += ',';
    out += std::to_string(r.n);
    out += ',';
    out += std::to_string(r.m);
    out += ',';
    out += std::to_string(r.q);
    out += ',';
    out += r.detector;
    out += ',';
    out += r.power;
    out += ',';
    out += format_double(r.snr_db);
    out += ',';
    out += r.metric;
    out += ',';
    out += format_double(r.value);
    out += ',';
    out += format_double(r.std_error);
    out += ',';
    out += std::to_string(r.count);
    out += ',';
    out += std::to_string(r.seed);
    out += '\n';
  }
  return out;
}

inline std::vector<RunRecord> from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("from_csv: empty input");
  if (line != kCsvHeader) throw std::invalid_argument("from_csv: unexpected header");
  std::vector<RunRecord> records;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 12) throw std::invalid_argument("from_csv: bad row '" + line + "'");
    RunRecord r;
    r.scheme = fields[0];
    r.n = std::stoi(fields[1]);
    r.m = std::stoi(fields[2]);
    r.q = std::stoi(fields[3]);
    r.detector = fields[4];
    r.power = fields[5];
    r.snr_db = parse_double(fields[6]);
    r.metric = fields[7];
    r.value = parse_double(fields[8]);
    r.std_error = parse_double(fields[9]);
    r.count = std::stoll(fields[10]);
    r.seed = std::stoull(fields[11]);
    records.push_back(std::move(r));
  }
  return records;
}

inline nlohmann::json to_json(const std::vector<RunRecord>& records) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : records) {
    arr.push_back({{"scheme", r.scheme},
                   {"N", r.n},
                   {"M", r.m},
                   {"Q", r.q},
                   {"detector", r.detector},
                   {"power", r.power},
                   {"snr_db", r.snr_db},
                   {"metric", r.metric},
                   {"value", r.value},
                   {"stderr", r.std_error},
                   {"count", r.count},
                   {"seed", r.seed}});
  }
  return arr;
}

inline std::vector<RunRecord> from_json(const nlohmann::json& arr) {
  std::vector<RunRecord> records;
  for (const auto& j : arr) {
    RunRecord r;
    r.scheme = j.at("scheme").get<std::string>();
    r.n = j.at("N").get<int>();
    r.m = j.at("M").get<int>();
    r.q = j.at("Q").get<int>();
    r.detector = j.at("detector").get<std::string>();
    r.power = j.at("power").get<std::string>();
    r.snr_db = j.at("snr_db").get<double>();
    r.metric = j.at("metric").get<std::string>();
    r.value = j.at("value").get<double>();
    r.std_error = j.at("stderr").get<double>();
    r.count = j.at("count").get<std::int64_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    records.push_back(std::move(r));
  }
  return records;
}

inline nlohmann::json spec_to_json(const SweepSpec& s) {
  return {{"scheme", to_string(s.scheme)},
          {"N", s.n},
          {"M", s.m},
          {"Q", s.q},
          {"detector", to_string(s.detector)},
          {"power", to_string(s.power)},
          {"custom_power_fractions", s.custom_power_fractions},
          {"n_act", s.n_act},
          {"snr_start_db", s.snr.start_db},
          {"snr_stop_db", s.snr.stop_db},
          {"snr_step_db", s.snr.step_db},
          {"bits_per_point", s.bits_per_point},
          {"channels_per_point", s.channels_per_point},
          {"master_seed", s.master_seed}};
}

inline SweepSpec spec_from_json(const nlohmann::json& j) {
  SweepSpec s;
  const auto scheme = j.at("scheme").get<std::string>();
  if (scheme == "pmm") s.scheme = Scheme::pmm;
  else if (scheme == "sm") s.scheme = Scheme::sm;
  else if (scheme == "gsm") s.scheme = Scheme::gsm;
  else if (scheme == "vblast-capacity") s.scheme = Scheme::vblast_capacity;
  else throw std::invalid_argument("spec_from_json: unknown scheme");
  s.n = j.at("N").get<int>();
  s.m = j.at("M").get<int>();
  s.q = j.at("Q").get<int>();
  s.detector = j.at("detector").get<std::string>() == "ml" ? Detector::ml : Detector::zf;
  const auto power = j.at("power").get<std::string>();
  if (power == "table2") s.power = PowerPreset::table2;
  else if (power == "pa2") s.power = PowerPreset::pa2;
  else if (power == "custom") s.power = PowerPreset::custom;
  else if (power == "optimized") s.power = PowerPreset::optimized;
  else throw std::invalid_argument("spec_from_json: unknown power preset");
  s.custom_power_fractions = j.at("custom_power_fractions").get<std::vector<double>>();
  s.n_act = j.at("n_act").get<int>();
  s.snr.start_db = j.at("snr_start_db").get<double>();
  s.snr.stop_db = j.at("snr_stop_db").get<double>();
  s.snr.step_db = j.at("snr_step_db").get<double>();
  s.bits_per_point = j.at("bits_per_point").get<std::int64_t>();
  s.channels_per_point = j.at("channels_per_point").get<int>();
  s.master_seed = j.at("master_seed").get<std::uint64_t>();
  return s;
}

// Everything needed to reproduce a run bit-exactly, plus provenance.
struct RunManifest {
  std::string command;  // subcommand name
  nlohmann::json arguments;
  std::string timestamp;  // informational only; data files carry no time
  std::vector<std::string> outputs;

  nlohmann::json to_json() const {
    return {{"tool", kToolName},
            {"version", kToolVersion},
            {"command", command},
            {"arguments", arguments},
            {"timestamp", timestamp},
            {"outputs", outputs}};
  }

  static RunManifest from_json(const nlohmann::json& j) {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.arguments = j.at("arguments");
    m.timestamp = j.value("timestamp", "");
    m.outputs = j.at("outputs").get<std::vector<std::string>>();
    return m;
  }
};

}  // namespace pmm
