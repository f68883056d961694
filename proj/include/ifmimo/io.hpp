#pragma once
// Run configuration parsing and result emission (CSV / JSON).

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ifmimo/errors.hpp"

namespace ifmimo {

struct ResultRow {
  std::string scenario;
  std::string receiver;
  std::optional<double> snr_db;
  std::optional<double> inr_db;
  std::optional<double> rate_bits;
  std::optional<double> outage_prob;
  std::string extra;  // comma-free key=value notes (A matrix, allocation, ...)
};

inline constexpr const char* kCsvHeader =
    "scenario,receiver,snr_db,inr_db,rate_bits,outage_prob,extra";

// Floats are printed with 9 significant digits.
inline std::string format_float(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline std::string to_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << kCsvHeader << '\n';
  auto cell = [](const std::optional<double>& v) {
    return v ? format_float(*v) : std::string();
  };
  for (const ResultRow& r : rows) {
    os << r.scenario << ',' << r.receiver << ',' << cell(r.snr_db) << ','
       << cell(r.inr_db) << ',' << cell(r.rate_bits) << ','
       << cell(r.outage_prob) << ',' << r.extra << '\n';
  }
  return os.str();
}

inline nlohmann::json to_json(const std::vector<ResultRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  auto cell = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json();
  };
  for (const ResultRow& r : rows) {
    arr.push_back({{"scenario", r.scenario},
                   {"receiver", r.receiver},
                   {"snr_db", cell(r.snr_db)},
                   {"inr_db", cell(r.inr_db)},
                   {"rate_bits", cell(r.rate_bits)},
                   {"outage_prob", cell(r.outage_prob)},
                   {"extra", r.extra}});
  }
  return arr;
}

inline std::string render(const std::vector<ResultRow>& rows,
                          const std::string& format) {
  if (format == "csv") return to_csv(rows);
  if (format == "json") return to_json(rows).dump(2) + "\n";
  throw UsageError("format must be csv or json");
}

// Write rows to `path`, or to stdout when path is empty.
inline void emit(const std::vector<ResultRow>& rows, const std::string& format,
                 const std::string& path) {
  const std::string text = render(rows, format);
  if (path.empty()) {
    std::fputs(text.c_str(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open output file: " + path);
  out << text;
  if (!out) throw IoError("failed writing output file: " + path);
}

struct RunConfig {
  std::string subcommand;
  std::string scenario;
  std::string channel_file;
  std::vector<double> snr_db;
  std::optional<double> inr_db;
  std::optional<double> alpha;
  long trials = 10000;
  std::uint64_t seed = 1;
  std::optional<double> percentile;
  std::optional<double> target_rate;
  std::vector<std::string> receivers;
  double multiplexing_gain = 0.0;
  std::string output;          // empty -> stdout
  std::string format = "csv";  // csv | json
};

// Parse `ifmimo <subcommand> [flags]`. Flags given on the command line
// override values from an optional `--config <file>`; unknown flags are
// rejected.
inline RunConfig parse_config(const std::vector<std::string>& args) {
  RunConfig cfg;
  CLI::App app{"Achievable-rate calculator for MIMO receiver architectures"};
  app.require_subcommand(1);
  app.set_config("--config");

  double inr_db_value = 0.0, alpha_value = 0.0;
  double percentile_value = 0.0, target_rate_value = 0.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", cfg.scenario, "named scenario id");
    sub->add_option("--channel-file", cfg.channel_file,
                    "channel spec JSON file");
    sub->add_option("--snr-db", cfg.snr_db, "SNR grid in dB")->delimiter(',');
    sub->add_option("--inr-db", inr_db_value, "interference power in dB");
    sub->add_option("--alpha", alpha_value, "interference exponent, INR=SNR^a");
    sub->add_option("--trials", cfg.trials, "Monte Carlo trials per point");
    sub->add_option("--seed", cfg.seed, "master seed");
    sub->add_option("--percentile", percentile_value, "outage percentile");
    sub->add_option("--target-rate", target_rate_value,
                    "target sum rate in bits");
    sub->add_option("--receivers", cfg.receivers, "receiver list")
        ->delimiter(',');
    sub->add_option("--multiplexing-gain", cfg.multiplexing_gain,
                    "spatial multiplexing gain r");
    sub->add_option("--output", cfg.output, "output path (default stdout)");
    sub->add_option("--format", cfg.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    return sub;
  };

  std::vector<CLI::App*> subs;
  for (const char* name : {"rate", "search", "outage", "dmt", "gdof", "example"})
    subs.push_back(add_common(app.add_subcommand(name)));

  std::vector<const char*> argv;
  argv.push_back("ifmimo");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  CLI::App* active = nullptr;
  for (std::size_t i = 0; i < subs.size(); ++i)
    if (subs[i]->parsed()) active = subs[i];
  cfg.subcommand = active->get_name();
  if (active->count("--inr-db")) cfg.inr_db = inr_db_value;
  if (active->count("--alpha")) cfg.alpha = alpha_value;
  if (active->count("--percentile")) cfg.percentile = percentile_value;
  if (active->count("--target-rate")) cfg.target_rate = target_rate_value;

  if (cfg.trials < 1) throw UsageError("--trials must be >= 1");
  if (cfg.percentile && !(*cfg.percentile > 0.0 && *cfg.percentile <= 1.0))
    throw UsageError("--percentile must lie in (0, 1]");
  for (std::size_t i = 1; i < cfg.snr_db.size(); ++i)
    if (!(cfg.snr_db[i] > cfg.snr_db[i - 1]))
      throw UsageError("--snr-db grid must be strictly ascending");
  return cfg;
}

}  // namespace ifmimo
