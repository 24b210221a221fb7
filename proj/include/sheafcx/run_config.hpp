#pragma once

// Run configuration: defaults, then a flat key = value file, then environment, then flags.

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "sheafcx/error.hpp"
#include "sheafcx/parallel.hpp"
#include "sheafcx/sheaf_expr.hpp"

#ifndef SHEAFCX_VERSION
#define SHEAFCX_VERSION "dev"
#endif

namespace sheafcx {

inline constexpr const char* kVersion = SHEAFCX_VERSION;

enum class OutputFormat { Json, Csv, Text };

struct RunConfig {
  double max_evaluations = 1e8;
  u64 max_family = 10'000'000;
  double tolerance = 1e-6;
  double gap = 1e3;
  std::string cache_dir;  // empty: caching off
  u64 seed = 0;
  unsigned threads = 1;
  OutputFormat format = OutputFormat::Json;

  void validate() const {
    if (!(max_evaluations > 0) || max_family == 0) throw Error(Errc::BadParams, "budget caps must be positive");
    if (!(tolerance > 0) || !(gap > 1)) throw Error(Errc::BadParams, "tolerance must be positive and gap above 1");
    if (threads == 0) throw Error(Errc::BadParams, "thread count must be positive");
  }

  /// Canonical key = value listing; its hash identifies the configuration in outputs.
  /// The cache directory and thread count do not change results and are left out.
  std::string canonical() const {
    std::ostringstream os;
    os.precision(17);
    os << "format=" << format_name(format) << "\n"
       << "gap=" << gap << "\n"
       << "max_evaluations=" << max_evaluations << "\n"
       << "max_family=" << max_family << "\n"
       << "seed=" << seed << "\n"
       << "tolerance=" << tolerance << "\n";
    return os.str();
  }

  std::string hash() const {
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << fnv1a(canonical());
    return os.str();
  }

  static const char* format_name(OutputFormat f) {
    switch (f) {
      case OutputFormat::Json: return "json";
      case OutputFormat::Csv: return "csv";
      case OutputFormat::Text: return "text";
    }
    return "?";
  }

  static OutputFormat parse_format(const std::string& s) {
    if (s == "json") return OutputFormat::Json;
    if (s == "csv") return OutputFormat::Csv;
    if (s == "text") return OutputFormat::Text;
    throw Error(Errc::BadParams, "unknown output format '" + s + "'");
  }

  /// Apply one setting; unknown keys are rejected.
  void set(const std::string& key, const std::string& value) {
    try {
      if (key == "max_evaluations") max_evaluations = std::stod(value);
      else if (key == "max_family") max_family = std::stoull(value);
      else if (key == "tolerance") tolerance = std::stod(value);
      else if (key == "gap") gap = std::stod(value);
      else if (key == "cache_dir") cache_dir = value;
      else if (key == "seed") seed = std::stoull(value);
      else if (key == "threads") threads = static_cast<unsigned>(std::stoul(value));
      else if (key == "format") format = parse_format(value);
      else throw Error(Errc::BadParams, "unknown configuration key '" + key + "'");
    } catch (const std::logic_error&) {
      throw Error(Errc::BadParams, "bad value '" + value + "' for configuration key '" + key + "'");
    }
  }

  /// Lines of `key = value`; '#' starts a comment.
  void load_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw Error(Errc::BadParams, "config line " + std::to_string(lineno) + " has no '='");
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }

  void load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::Io, "cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    load_text(ss.str());
  }

  /// SHEAFCX_CACHE_DIR and SHEAFCX_THREADS.
  void load_env() {
    if (const char* d = std::getenv("SHEAFCX_CACHE_DIR")) cache_dir = d;
    if (const char* t = std::getenv("SHEAFCX_THREADS")) set("threads", t);
  }
};

}  // namespace sheafcx
