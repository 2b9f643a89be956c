// Command-line front end: rate / ser / optimize / complexity / codec / rerun.
// Every data-producing run writes the results file plus a <out>.manifest.json
// that reproduces it bit-exactly via `pmmlab rerun`.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pmm/pmm.hpp"

namespace {

using nlohmann::json;

struct RangeSpec {
  double start = 0.0;
  double stop = 0.0;
  double step = 1.0;
};

RangeSpec parse_range(const std::string& text) {
  RangeSpec r;
  const auto c1 = text.find(':');
  if (c1 == std::string::npos) {
    r.start = r.stop = pmm::parse_double(text);
    return r;
  }
  const auto c2 = text.find(':', c1 + 1);
  r.start = pmm::parse_double(text.substr(0, c1));
  if (c2 == std::string::npos) {
    r.stop = pmm::parse_double(text.substr(c1 + 1));
  } else {
    r.stop = pmm::parse_double(text.substr(c1 + 1, c2 - c1 - 1));
    r.step = pmm::parse_double(text.substr(c2 + 1));
  }
  return r;
}

std::string now_iso8601() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof(buf), "%FT%TZ", std::gmtime(&t));
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << content;
}

void write_manifest(const std::string& command, const json& arguments,
                    const std::string& out_path) {
  pmm::RunManifest m;
  m.command = command;
  m.arguments = arguments;
  m.timestamp = now_iso8601();
  m.outputs = {out_path};
  write_file(out_path + ".manifest.json", m.to_json().dump(2) + "\n");
}

void emit_records(const std::vector<pmm::RunRecord>& records, const std::string& out_path,
                  const std::string& format) {
  if (format == "csv")
    write_file(out_path, pmm::to_csv(records));
  else
    write_file(out_path, pmm::to_json(records).dump(2) + "\n");
}

// Shared sweep flags; each subcommand registers the subset it uses.
struct SweepArgs {
  std::string scheme = "pmm";
  int tx = 4;
  int rx = 4;
  int mod_order = 4;
  std::string detector = "ml";
  std::string power = "table2";
  int n_act = 2;
  std::string snr_db = "0:20:2";
  std::int64_t bits = 100000;
  int channels = 500;
  std::uint64_t seed = 1;
  std::string out;
  std::string format = "csv";
};

json sweep_args_to_json(const SweepArgs& a) {
  return {{"scheme", a.scheme}, {"tx", a.tx},         {"rx", a.rx},
          {"mod_order", a.mod_order}, {"detector", a.detector}, {"power", a.power},
          {"n_act", a.n_act},    {"snr_db", a.snr_db}, {"bits", a.bits},
          {"channels", a.channels}, {"seed", a.seed},  {"format", a.format}};
}

SweepArgs sweep_args_from_json(const json& j) {
  SweepArgs a;
  a.scheme = j.at("scheme").get<std::string>();
  a.tx = j.at("tx").get<int>();
  a.rx = j.at("rx").get<int>();
  a.mod_order = j.at("mod_order").get<int>();
  a.detector = j.at("detector").get<std::string>();
  a.power = j.at("power").get<std::string>();
  a.n_act = j.at("n_act").get<int>();
  a.snr_db = j.at("snr_db").get<std::string>();
  a.bits = j.at("bits").get<std::int64_t>();
  a.channels = j.at("channels").get<int>();
  a.seed = j.at("seed").get<std::uint64_t>();
  a.format = j.at("format").get<std::string>();
  return a;
}

// Custom power files: one positive fraction of rho per line; validated
// against the allocation invariants with rho = 1.
std::vector<double> load_power_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open power file: " + path);
  std::vector<double> fractions;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    fractions.push_back(pmm::parse_double(line));
  }
  pmm::PowerAllocation check(fractions, 1.0);  // throws with a clear message if invalid
  return fractions;
}

pmm::SweepSpec build_spec(const SweepArgs& a) {
  pmm::SweepSpec s;
  if (a.scheme == "pmm") s.scheme = pmm::Scheme::pmm;
  else if (a.scheme == "sm") s.scheme = pmm::Scheme::sm;
  else if (a.scheme == "gsm") s.scheme = pmm::Scheme::gsm;
  else if (a.scheme == "vblast-capacity") s.scheme = pmm::Scheme::vblast_capacity;
  else throw std::invalid_argument("unknown scheme: " + a.scheme);
  s.n = a.tx;
  s.m = a.rx;
  s.q = a.mod_order;
  s.detector = a.detector == "ml" ? pmm::Detector::ml : pmm::Detector::zf;
  if (a.detector != "ml" && a.detector != "zf")
    throw std::invalid_argument("unknown detector: " + a.detector);
  if (a.power == "table2") s.power = pmm::PowerPreset::table2;
  else if (a.power == "pa2") s.power = pmm::PowerPreset::pa2;
  else if (a.power == "optimized") s.power = pmm::PowerPreset::optimized;
  else {
    s.power = pmm::PowerPreset::custom;
    s.custom_power_fractions = load_power_file(a.power);
  }
  s.n_act = a.n_act;
  const RangeSpec r = parse_range(a.snr_db);
  s.snr = {r.start, r.stop, r.step};
  s.bits_per_point = a.bits;
  s.channels_per_point = a.channels;
  s.master_seed = a.seed;
  return s;
}

std::string power_label(const pmm::SweepSpec& s) { return pmm::to_string(s.power); }

int cmd_rate(const SweepArgs& args, bool write_manifest_file) {
  const pmm::SweepSpec spec = build_spec(args);
  const auto points = pmm::run_rate(spec);
  std::vector<pmm::RunRecord> records;
  for (const auto& p : points) {
    pmm::RunRecord r;
    r.scheme = pmm::to_string(spec.scheme);
    r.n = spec.n;
    r.m = spec.m;
    r.q = spec.q;
    r.detector = "-";
    r.power = spec.scheme == pmm::Scheme::pmm ? power_label(spec) : "-";
    r.snr_db = p.snr_db;
    r.metric = "rate";
    r.value = p.mean_bits;
    r.std_error = p.std_error;
    r.count = p.channels;
    r.seed = spec.master_seed;
    records.push_back(std::move(r));
  }
  emit_records(records, args.out, args.format);
  if (write_manifest_file) write_manifest("rate", sweep_args_to_json(args), args.out);
  return 0;
}

int cmd_ser(const SweepArgs& args, bool write_manifest_file) {
  const pmm::SweepSpec spec = build_spec(args);
  const auto points = pmm::run_ser(spec);
  std::vector<pmm::RunRecord> records;
  for (const auto& p : points) {
    pmm::RunRecord base;
    base.scheme = "pmm";
    base.n = spec.n;
    base.m = spec.m;
    base.q = spec.q;
    base.detector = pmm::to_string(spec.detector);
    base.power = power_label(spec);
    base.snr_db = p.snr_db;
    base.seed = spec.master_seed;

    pmm::RunRecord tuple = base;
    tuple.metric = "ser";
    tuple.value = p.ser;
    tuple.std_error = 0.5 * (p.wilson_hi - p.wilson_lo);
    tuple.count = p.tuples_sent;
    records.push_back(std::move(tuple));

    pmm::RunRecord sym = base;
    sym.metric = "ser_symbol";
    sym.value = p.ser_symbol;
    sym.std_error = 0.0;
    sym.count = p.symbols_sent;
    records.push_back(std::move(sym));
  }
  emit_records(records, args.out, args.format);
  if (write_manifest_file) write_manifest("ser", sweep_args_to_json(args), args.out);
  return 0;
}

int cmd_optimize(const SweepArgs& args, bool write_manifest_file) {
  const pmm::SweepSpec spec = build_spec(args);
  const auto points = pmm::run_optimize(spec);
  std::vector<pmm::RunRecord> records;
  for (const auto& p : points) {
    pmm::RunRecord base;
    base.scheme = "pmm";
    base.n = spec.n;
    base.m = spec.m;
    base.q = spec.q;
    base.detector = "-";
    base.snr_db = p.snr_db;
    base.count = p.channels;
    base.seed = spec.master_seed;

    pmm::RunRecord generic = base;
    generic.power = "table2";
    generic.metric = "rate_tight_generic";
    generic.value = p.generic_mean;
    records.push_back(std::move(generic));

    pmm::RunRecord optimized = base;
    optimized.power = "optimized";
    optimized.metric = "rate_tight_optimized";
    optimized.value = p.optimized_mean;
    records.push_back(std::move(optimized));

    pmm::RunRecord kkt = base;
    kkt.power = "optimized";
    kkt.metric = "kkt_residual_max";
    kkt.value = p.max_kkt;
    records.push_back(std::move(kkt));
  }
  emit_records(records, args.out, args.format);
  if (write_manifest_file) write_manifest("optimize", sweep_args_to_json(args), args.out);
  return 0;
}

struct ComplexityArgs {
  std::string tx = "4";
  int rx = 4;
  std::string mod_order = "4";
  std::string out;
};

json complexity_args_to_json(const ComplexityArgs& a) {
  return {{"tx", a.tx}, {"rx", a.rx}, {"mod_order", a.mod_order}};
}

// Detector cost tables: one row per swept N (fixed Q) or per swept Q
// (powers of two, fixed N). r always follows N.
int cmd_complexity(const ComplexityArgs& args, bool write_manifest_file) {
  const RangeSpec ns = parse_range(args.tx);
  const RangeSpec qs = parse_range(args.mod_order);
  std::vector<std::pair<int, int>> sweep;  // (n, q)
  if (ns.start != ns.stop && qs.start != qs.stop)
    throw std::invalid_argument("complexity: sweep either --tx or --mod-order, not both");
  if (ns.start != ns.stop) {
    for (int n = static_cast<int>(ns.start); n <= static_cast<int>(ns.stop); ++n)
      sweep.push_back({n, static_cast<int>(qs.start)});
  } else if (qs.start != qs.stop) {
    for (int q = static_cast<int>(qs.start); q <= static_cast<int>(qs.stop); q *= 2)
      sweep.push_back({static_cast<int>(ns.start), q});
  } else {
    sweep.push_back({static_cast<int>(ns.start), static_cast<int>(qs.start)});
  }

  std::string out = "n,m,q,r,ml_flops,zf_flops,zf_flops_square,ratio\n";
  for (const auto& [n, q] : sweep) {
    const auto split = pmm::split_bits(n, 2);
    const std::uint64_t r = split.usable_permutations;
    const auto ml = pmm::ml_flops(n, args.rx, q, r);
    const auto zf = pmm::zf_flops(n, args.rx, q, r);
    out += std::to_string(n) + "," + std::to_string(args.rx) + "," + std::to_string(q) + "," +
           std::to_string(r) + "," + std::to_string(ml) + "," + std::to_string(zf) + ",";
    if (n == args.rx) out += std::to_string(pmm::zf_flops_square(args.rx, q, r));
    out += "," + pmm::format_double(static_cast<double>(ml) / static_cast<double>(zf)) + "\n";
  }
  write_file(args.out, out);
  if (write_manifest_file) write_manifest("complexity", complexity_args_to_json(args), args.out);
  return 0;
}

// Prints the bits -> permutation matrix table for a given N (stdout, plus
// --out if given).
int cmd_codec(int tx, const std::string& out_path) {
  const auto split = pmm::split_bits(tx, 2);
  std::ostringstream os;
  for (std::uint64_t w = 0; w < split.usable_permutations; ++w) {
    const pmm::Permutation p = pmm::bits_to_permutation(w, tx);
    std::string bits;
    for (int b = split.index_bits - 1; b >= 0; --b) bits += ((w >> b) & 1) ? '1' : '0';
    os << "bits " << bits << " -> P_" << (w + 1) << "\n";
    const Eigen::MatrixXd m = p.to_matrix();
    for (int i = 0; i < m.rows(); ++i) {
      for (int j = 0; j < m.cols(); ++j) {
        if (j) os << ' ';
        os << static_cast<int>(m(i, j));
      }
      os << "\n";
    }
  }
  std::cout << os.str();
  if (!out_path.empty()) write_file(out_path, os.str());
  return 0;
}

int cmd_rerun(const std::string& manifest_path, const std::string& out_override) {
  std::ifstream in(manifest_path);
  if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path);
  const auto m = pmm::RunManifest::from_json(json::parse(in));
  if (m.command == "complexity") {
    ComplexityArgs a;
    a.tx = m.arguments.at("tx").get<std::string>();
    a.rx = m.arguments.at("rx").get<int>();
    a.mod_order = m.arguments.at("mod_order").get<std::string>();
    a.out = out_override.empty() ? m.outputs.at(0) : out_override;
    return cmd_complexity(a, false);
  }
  SweepArgs a = sweep_args_from_json(m.arguments);
  a.out = out_override.empty() ? m.outputs.at(0) : out_override;
  if (m.command == "rate") return cmd_rate(a, false);
  if (m.command == "ser") return cmd_ser(a, false);
  if (m.command == "optimize") return cmd_optimize(a, false);
  throw std::invalid_argument("rerun: unsupported command '" + m.command + "'");
}

void add_sweep_flags(CLI::App* cmd, SweepArgs& a, bool with_scheme, bool with_detector,
                     bool with_bits, bool with_channels) {
  if (with_scheme)
    cmd->add_option("--scheme", a.scheme, "pmm | sm | gsm | vblast-capacity");
  cmd->add_option("--tx", a.tx, "transmit antennas N");
  cmd->add_option("--rx", a.rx, "receive antennas M");
  cmd->add_option("--mod-order", a.mod_order, "constellation order Q (power of two)");
  if (with_detector) cmd->add_option("--detector", a.detector, "ml | zf");
  cmd->add_option("--power", a.power, "table2 | pa2 | optimized | <file>");
  cmd->add_option("--n-act", a.n_act, "active antennas for gsm");
  cmd->add_option("--snr-db", a.snr_db, "grid start:stop:step in dB");
  if (with_bits) cmd->add_option("--bits", a.bits, "bits fed to the encoder per SNR point");
  if (with_channels) cmd->add_option("--channels", a.channels, "channel draws per SNR point");
  cmd->add_option("--seed", a.seed, "master seed");
  cmd->add_option("--out", a.out, "output file")->required();
  cmd->add_option("--format", a.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Permutation-precoded MIMO link laboratory"};
  app.require_subcommand(1);

  SweepArgs rate_args;
  auto* rate_cmd = app.add_subcommand("rate", "ensemble achievable-rate sweep");
  add_sweep_flags(rate_cmd, rate_args, true, false, false, true);

  SweepArgs ser_args;
  auto* ser_cmd = app.add_subcommand("ser", "Monte Carlo symbol error rate sweep");
  add_sweep_flags(ser_cmd, ser_args, false, true, true, false);

  SweepArgs opt_args;
  auto* opt_cmd = app.add_subcommand("optimize", "generic vs optimized power allocation");
  add_sweep_flags(opt_cmd, opt_args, false, false, false, true);

  ComplexityArgs cx_args;
  auto* cx_cmd = app.add_subcommand("complexity", "detector flop-count tables");
  cx_cmd->add_option("--tx", cx_args.tx, "N or N-range start:stop");
  cx_cmd->add_option("--rx", cx_args.rx, "M");
  cx_cmd->add_option("--mod-order", cx_args.mod_order, "Q or Q-range (powers of two)");
  cx_cmd->add_option("--out", cx_args.out, "output csv")->required();

  int codec_tx = 3;
  std::string codec_out;
  auto* codec_cmd = app.add_subcommand("codec", "print the bits -> permutation matrix table");
  codec_cmd->add_option("--tx", codec_tx, "transmit antennas N");
  codec_cmd->add_option("--out", codec_out, "also write the table to a file");

  std::string rerun_manifest;
  std::string rerun_out;
  auto* rerun_cmd = app.add_subcommand("rerun", "reproduce a run from its manifest");
  rerun_cmd->add_option("--manifest", rerun_manifest, "manifest json")->required();
  rerun_cmd->add_option("--out", rerun_out, "override the output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (rate_cmd->parsed()) return cmd_rate(rate_args, true);
    if (ser_cmd->parsed()) {
      // Reject bad detector/antenna combinations before any work happens.
      pmm::validate_ser_spec(build_spec(ser_args));
      return cmd_ser(ser_args, true);
    }
    if (opt_cmd->parsed()) return cmd_optimize(opt_args, true);
    if (cx_cmd->parsed()) return cmd_complexity(cx_args, true);
    if (codec_cmd->parsed()) return cmd_codec(codec_tx, codec_out);
    if (rerun_cmd->parsed()) return cmd_rerun(rerun_manifest, rerun_out);
  } catch (const std::exception& e) {
    std::cerr << "pmmlab: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
