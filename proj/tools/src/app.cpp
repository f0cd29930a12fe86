#include "app.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "args.hpp"
#include "manifest.hpp"
#include "repro.hpp"
#include "sticky/channel.hpp"
#include "sticky/decoder.hpp"
#include "sticky/error.hpp"
#include "sticky/format.hpp"
#include "sticky/infotheory.hpp"
#include "sticky/montecarlo.hpp"
#include "sticky/source_model.hpp"

#ifndef STICKY_VERSION
#define STICKY_VERSION "0.0.0"
#endif

namespace sticky::cli {

namespace {

/// Problems with input files or their contents; maps to the data exit code.
class DataFailure : public Error {
 public:
  using Error::Error;
};

template <class Fn>
auto with_data(Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const DataFailure&) {
    throw;
  } catch (const ConvergenceError&) {
    throw;
  } catch (const Error& e) {
    throw DataFailure(e.what());
  }
}

struct ModelFlags {
  std::string alphabet = "01";
  std::string probs;
  std::string model = "exponential";
  double q = 0.5;
  double eps = 0.06;
  std::string matrix;
  std::size_t kmax = kDefaultMaxInputLength;
  double tail_tol = kDefaultTailTolerance;
};

void add_model_flags(CLI::App& sub, ModelFlags& f) {
  sub.add_option("--alphabet", f.alphabet, "Source alphabet, one character per symbol");
  sub.add_option("--probs", f.probs, "Comma-separated symbol probabilities, or 'uniform'");
  sub.add_option("--model", f.model, "Block-length channel")
      ->check(CLI::IsMember({"exponential", "indel", "custom", "identity"}));
  sub.add_option("--q", f.q, "Exponential model parameter, 0 < q < 1");
  sub.add_option("--eps", f.eps, "Independent-indel error rate, 0 < eps < 0.5");
  sub.add_option("--matrix", f.matrix, "Custom kernel file (text or JSON)");
  sub.add_option("--kmax", f.kmax, "Largest input block length");
  sub.add_option("--tail-tol", f.tail_tol, "Per-row tail mass allowed to be truncated");
}

SourceModel build_model(const ModelFlags& f) { return SourceModel::parse(f.alphabet, f.probs); }

ChannelMatrix build_channel(const ModelFlags& f, std::optional<double> param = {}) {
  if (f.model == "exponential") return build_exponential(param.value_or(f.q), f.kmax, f.tail_tol);
  if (f.model == "indel") {
    return build_independent_indel(param.value_or(f.eps), f.kmax, f.tail_tol);
  }
  if (f.model == "identity") return identity_channel(f.kmax);
  if (f.matrix.empty()) throw InvalidInput("--model custom requires --matrix");
  return with_data([&] { return load_channel_matrix(f.matrix); });
}

SubstitutionChannel load_substitution_file(const std::string& path) {
  return with_data([&] { return load_substitution(path); });
}

EntropyApproximation parse_approx(const std::string& s) {
  return s == "log1p" ? EntropyApproximation::log1p : EntropyApproximation::linearized;
}

class Session {
 public:
  Session(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  std::ostream& out() { return out_; }
  std::ostream& err() { return err_; }

  /// Writes to `path`, or to stdout when it is empty or "-".
  void emit(const std::string& content, const std::string& path, const std::string& flag) {
    if (path.empty() || path == "-") {
      out_ << content;
      return;
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw ResourceError("cannot write '" + path + "'");
    file << content;
    file.close();
    if (!file) throw ResourceError("failed writing '" + path + "'");
    outputs_.push_back({path, flag, sha256_hex(content)});
  }

  const std::vector<OutputFile>& outputs() const { return outputs_; }
  std::optional<std::uint64_t> seed;

 private:
  std::ostream& out_;
  std::ostream& err_;
  std::vector<OutputFile> outputs_;
};

std::string csv_field(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

// ---------------------------------------------------------------- commands

struct ChannelArgs {
  ModelFlags model;
  std::string out;
};

void cmd_channel(Session& s, const ChannelArgs& a) {
  const auto ch = build_channel(a.model);
  std::ostringstream csv;
  write_channel_csv(csv, ch);
  s.emit(csv.str(), a.out, "--out");
}

struct KlArgs {
  ModelFlags model;
  std::string window = "1..7";
  std::string rows;
  std::string cols;
  std::string substitution;
  std::string format = "csv";
  std::string out;
};

void cmd_kl(Session& s, const KlArgs& a) {
  std::string content;
  if (!a.substitution.empty()) {
    const auto sub = load_substitution_file(a.substitution);
    const auto table = substitution_divergences(sub);
    if (a.format == "json") {
      content = divergence_json(table, sub) + "\n";
    } else {
      std::ostringstream csv;
      write_divergence_csv(csv, table);
      content = csv.str();
    }
  } else {
    const auto ch = build_channel(a.model);
    const auto window = parse_window(a.window);
    const auto rows = a.rows.empty() ? window : parse_window(a.rows);
    const auto cols = a.cols.empty() ? window : parse_window(a.cols);
    const auto table = kl_table(ch, rows, cols);
    if (a.format == "json") {
      content = divergence_json(table, ch) + "\n";
    } else {
      std::ostringstream csv;
      write_divergence_csv(csv, table);
      content = csv.str();
    }
  }
  s.emit(content, a.out, "--out");
}

struct EntropyArgs {
  ModelFlags model;
  std::string mode = "multi";
  std::string c = "1..80";
  std::size_t n = 100'000;
  std::string sweep;
  std::string approx = "linearized";
  std::string substitution;
  std::string format = "csv";
  std::string out;
};

void cmd_entropy(Session& s, const EntropyArgs& a) {
  const auto model = build_model(a.model);
  std::ostringstream out;
  if (a.mode == "single") {
    if (!a.substitution.empty()) {
      throw InvalidInput("--substitution applies to multi mode only");
    }
    if (a.sweep.empty()) {
      const auto ch = build_channel(a.model);
      const auto report = conditional_entropy_single(model, ch);
      if (a.format == "json") {
        out << entropy_json(report, model, ch) << '\n';
      } else {
        write_entropy_csv(out, report);
      }
    } else {
      if (a.model.model != "exponential" && a.model.model != "indel") {
        throw InvalidInput("--sweep needs --model exponential or indel");
      }
      out << (a.model.model == "exponential" ? "q" : "eps")
          << ",h_x,conditional_rate,mutual_rate,prior_tail_mass\n";
      for (const double p : parse_real_list(a.sweep)) {
        const auto r = conditional_entropy_single(model, build_channel(a.model, p));
        out << format_number(p) << ',' << format_number(r.h_x) << ','
            << format_number(r.conditional_rate) << ',' << format_number(r.mutual_rate) << ','
            << format_number(r.prior_tail_mass) << '\n';
      }
    }
  } else {
    const auto cs = parse_index_list(a.c);
    if (std::find(cs.begin(), cs.end(), std::size_t{0}) != cs.end()) {
      throw InvalidInput("replica counts must be at least 1");
    }
    if (!a.substitution.empty()) {
      const auto sub = load_substitution_file(a.substitution);
      out << "c,entropy\n";
      for (const auto c : cs) {
        out << c << ',' << format_number(with_data([&] {
          return substitution_entropy(model, sub, c, a.n);
        })) << '\n';
      }
    } else {
      const ReplicaAnalyzer analyzer(model, build_channel(a.model));
      const auto approx = parse_approx(a.approx);
      out << "c,con1,con2\n";
      for (const auto c : cs) {
        const auto h = analyzer.entropy(c, a.n, approx);
        out << c << ',' << format_number(h.con1) << ',' << csv_field(h.con2) << '\n';
      }
    }
  }
  s.emit(out.str(), a.out, "--out");
}

struct ReplicasArgs {
  ModelFlags model;
  std::string n = "100000";
  double threshold = 1.0;
  std::string approx = "linearized";
  std::string substitution;
  std::string out;
};

void cmd_replicas(Session& s, const ReplicasArgs& a) {
  const auto model = build_model(a.model);
  const auto ns = parse_index_list(a.n);
  std::ostringstream out;
  out << "n,threshold,replicas,entropy,closed_form,d_min\n";
  if (!a.substitution.empty()) {
    const auto sub = load_substitution_file(a.substitution);
    const auto table = with_data([&] {
      if (model.alphabet() != sub.alphabet()) {
        throw ValidationError("source alphabet \"" + model.alphabet() +
                              "\" does not match substitution alphabet \"" + sub.alphabet() +
                              "\"");
      }
      return substitution_divergences(sub);
    });
    for (const auto n : ns) {
      const auto req = required_replicas_substitution(model, sub, n, a.threshold);
      out << n << ',' << format_number(a.threshold) << ',' << req.replicas << ','
          << format_number(req.entropy) << ',' << csv_field(req.closed_form) << ','
          << csv_field(table.d_min ? std::optional(table.d_min->value) : std::nullopt) << '\n';
    }
  } else {
    const ReplicaAnalyzer analyzer(model, build_channel(a.model));
    const auto& table = analyzer.divergences();
    for (const auto n : ns) {
      const auto req = analyzer.required(n, a.threshold, parse_approx(a.approx));
      out << n << ',' << format_number(a.threshold) << ',' << req.replicas << ','
          << format_number(req.entropy) << ',' << csv_field(req.closed_form) << ','
          << csv_field(table.d_min ? std::optional(table.d_min->value) : std::nullopt) << '\n';
    }
    if (!table.d_min) {
      s.err() << "note: d_min is " << to_string(table.status)
              << " over 1.." << table.rows.last << "; no closed-form estimate\n";
    }
  }
  s.emit(out.str(), a.out, "--out");
}

struct SimulateArgs {
  ModelFlags model;
  std::size_t n = 50;
  std::size_t c = 1;
  std::uint64_t trials = 100'000;
  std::uint64_t seed = 42;
  unsigned threads = 0;
  bool progress = false;
  std::string out;
  std::string per_k;
};

void cmd_simulate(Session& s, const SimulateArgs& a) {
  const auto model = build_model(a.model);
  const auto ch = build_channel(a.model);
  SimulationConfig cfg;
  cfg.model = &model;
  cfg.channel = &ch;
  cfg.n = a.n;
  cfg.c = a.c;
  cfg.trials = a.trials;
  cfg.seed = a.seed;
  cfg.threads = a.threads;
  if (a.progress) {
    cfg.progress = [&s](std::uint64_t done, std::uint64_t total) {
      s.err() << "\rtrials " << done << '/' << total << std::flush;
      if (done == total) s.err() << '\n';
    };
  }
  SimulationOutcome outcome;
  try {
    outcome = estimate_reconstruction_rate(cfg);
  } catch (const RangeError& e) {
    throw DataFailure(e.what());
  }
  s.seed = a.seed;
  s.emit(outcome_json(cfg, outcome) + "\n", a.out, "--out");
  if (!a.per_k.empty()) {
    std::ostringstream csv;
    write_outcome_csv(csv, outcome);
    s.emit(csv.str(), a.per_k, "--per-k");
  }
}

struct DecodeArgs {
  ModelFlags model;
  std::string reads;
  std::string out;
};

void cmd_decode(Session& s, const DecodeArgs& a) {
  const auto model = build_model(a.model);
  const auto ch = build_channel(a.model);
  const auto result = with_data([&] {
    const auto bundle = load_read_bundle(a.reads);
    return decode_sequence(model, ch, bundle);
  });
  std::ostringstream csv;
  write_decode_csv(csv, result);
  s.emit(csv.str(), a.out, "--out");
}

int cmd_repro(Session& s) {
  const auto items = run_repro();
  bool all = true;
  for (const auto& item : items) {
    s.out() << (item.pass ? "PASS " : "FAIL ") << item.name << ": " << item.detail << '\n';
    all = all && item.pass;
  }
  return all ? kExitOk : kExitFailure;
}

int cmd_verify(Session& s, const std::string& manifest_file) {
  const auto manifest = with_data([&] {
    std::ifstream in(manifest_file);
    if (!in) throw InvalidInput("cannot open '" + manifest_file + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw InvalidInput(std::string("malformed manifest: ") + e.what());
    }
    return manifest_from_json(j);
  });
  const auto dir = std::filesystem::temp_directory_path() /
                   ("sticky-verify-" + sha256_hex(manifest_file + utc_timestamp()).substr(0, 12));
  std::filesystem::create_directories(dir);
  auto argv = manifest.argv;
  std::vector<std::string> replay;
  for (std::size_t i = 0; i < manifest.outputs.size(); ++i) {
    const auto& o = manifest.outputs[i];
    const auto target = (dir / ("output" + std::to_string(i))).string();
    bool replaced = false;
    for (std::size_t j = 0; j + 1 < argv.size(); ++j) {
      if (argv[j] == o.flag) {
        argv[j + 1] = target;
        replaced = true;
      }
    }
    if (!replaced) throw DataFailure("manifest argv has no " + o.flag + " for " + o.path);
    replay.push_back(target);
  }
  std::ostringstream quiet_out;
  std::ostringstream quiet_err;
  const int code = run(argv, quiet_out, quiet_err);
  if (code != kExitOk) {
    s.err() << quiet_err.str();
    std::filesystem::remove_all(dir);
    return code;
  }
  bool all = true;
  for (std::size_t i = 0; i < manifest.outputs.size(); ++i) {
    const auto digest = file_sha256(replay[i]);
    const bool same = digest == manifest.outputs[i].sha256;
    all = all && same;
    s.out() << (same ? "match " : "MISMATCH ") << manifest.outputs[i].path << '\n';
  }
  std::filesystem::remove_all(dir);
  return all ? kExitOk : kExitFailure;
}

// ------------------------------------------------------------ plumbing

std::vector<std::string> expand_config(CLI::App& app, const std::vector<std::string>& args) {
  if (args.empty()) return args;
  std::optional<std::string> config;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config", 1, 0);
      config = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!config) return rest;
  CLI::App* sub = nullptr;
  try {
    sub = app.get_subcommand(rest.empty() ? std::string() : rest.front());
  } catch (const CLI::OptionNotFound&) {
    sub = nullptr;
  }
  if (sub == nullptr) throw CLI::ValidationError("--config", "needs a subcommand before it");

  std::vector<std::string> injected;
  for (const auto& e : read_config_file(*config)) {
    const auto* opt = sub->get_option_no_throw("--" + e.key);
    if (opt == nullptr) {
      throw ParseError(e.line, "unknown key '" + e.key + "' for " + sub->get_name());
    }
    if (opt->get_expected_max() == 0) {
      std::string v = e.value;
      std::transform(v.begin(), v.end(), v.begin(), ::tolower);
      if (v == "true" || v == "1" || v == "yes" || v == "on" || v.empty()) {
        injected.push_back("--" + e.key);
      } else if (v != "false" && v != "0" && v != "no" && v != "off") {
        throw ParseError(e.line, "'" + e.key + "' expects a boolean");
      }
    } else {
      injected.push_back("--" + e.key);
      injected.push_back(e.value);
    }
  }
  std::vector<std::string> out{rest.front()};
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

nlohmann::json collect_params(const CLI::App& sub) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const auto& name = opt->get_lnames().front();
    if (name == "help" || name == "config") continue;
    if (opt->count() > 0) {
      params[name] = opt->get_expected_max() == 0 ? std::string("true") : opt->results().back();
    } else if (!opt->get_default_str().empty()) {
      params[name] = opt->get_default_str();
    }
  }
  return params;
}

void write_manifest(const Session& s, const CLI::App& sub, const std::vector<std::string>& argv) {
  if (s.outputs().empty()) return;
  RunManifest m;
  m.command = sub.get_name();
  m.params = collect_params(sub);
  m.argv = argv;
  m.seed = s.seed;
  m.version = STICKY_VERSION;
  m.timestamp = utc_timestamp();
  m.outputs = s.outputs();
  const auto path = manifest_path(m.outputs.front().path);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw ResourceError("cannot write '" + path + "'");
  file << to_json(m).dump(2) << '\n';
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConvergenceError*>(&e)) return kExitConvergence;
  if (dynamic_cast<const DataFailure*>(&e) || dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const ImpossibleObservation*>(&e) ||
      dynamic_cast<const StructuralMismatch*>(&e) || dynamic_cast<const ValidationError*>(&e) ||
      dynamic_cast<const RangeError*>(&e)) {
    return kExitData;
  }
  if (dynamic_cast<const DomainError*>(&e) || dynamic_cast<const InvalidInput*>(&e) ||
      dynamic_cast<const CapacityError*>(&e)) {
    return kExitUsage;
  }
  return kExitFailure;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sticky insertion-deletion channel toolkit", "sticky"};
  app.set_version_flag("--version", STICKY_VERSION);
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)
      ->always_capture_default();
  std::string config_unused;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", config_unused, "Flat key=value file of flag defaults");
  };

  ChannelArgs channel_args;
  auto* channel = app.add_subcommand("channel", "Write the q_kl matrix as CSV");
  add_model_flags(*channel, channel_args.model);
  channel->add_option("--out", channel_args.out, "Output CSV (default stdout)");
  add_config(channel);

  KlArgs kl_args;
  auto* kl = app.add_subcommand("kl", "Pairwise KL divergences between channel rows");
  add_model_flags(*kl, kl_args.model);
  kl->add_option("--window", kl_args.window, "Row and column range a..b");
  kl->add_option("--rows", kl_args.rows, "Row range, overrides --window");
  kl->add_option("--cols", kl_args.cols, "Column range, overrides --window");
  kl->add_option("--substitution", kl_args.substitution, "Substitution matrix file instead");
  kl->add_option("--format", kl_args.format)->check(CLI::IsMember({"csv", "json"}));
  kl->add_option("--out", kl_args.out, "Output file (default stdout)");
  add_config(kl);

  EntropyArgs entropy_args;
  auto* entropy = app.add_subcommand("entropy", "Conditional entropy curves");
  add_model_flags(*entropy, entropy_args.model);
  entropy->add_option("--mode", entropy_args.mode)->check(CLI::IsMember({"single", "multi"}));
  entropy->add_option("--c", entropy_args.c, "Replica counts, e.g. 1..80 or 1,2,5");
  entropy->add_option("--n", entropy_args.n, "Sequence length in symbols");
  entropy->add_option("--sweep", entropy_args.sweep, "Single mode: channel parameters to sweep");
  entropy->add_option("--approx", entropy_args.approx)
      ->check(CLI::IsMember({"linearized", "log1p"}));
  entropy->add_option("--substitution", entropy_args.substitution, "Substitution matrix file");
  entropy->add_option("--format", entropy_args.format)->check(CLI::IsMember({"csv", "json"}));
  entropy->add_option("--out", entropy_args.out, "Output file (default stdout)");
  add_config(entropy);

  ReplicasArgs replicas_args;
  auto* replicas = app.add_subcommand("replicas", "Smallest replica count meeting a threshold");
  add_model_flags(*replicas, replicas_args.model);
  replicas->add_option("--n", replicas_args.n, "Sequence length(s), e.g. 1000,10000");
  replicas->add_option("--threshold", replicas_args.threshold, "Entropy threshold in nats");
  replicas->add_option("--approx", replicas_args.approx)
      ->check(CLI::IsMember({"linearized", "log1p"}));
  replicas->add_option("--substitution", replicas_args.substitution, "Substitution matrix file");
  replicas->add_option("--out", replicas_args.out, "Output CSV (default stdout)");
  add_config(replicas);

  SimulateArgs simulate_args;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo reconstruction rate");
  add_model_flags(*simulate, simulate_args.model);
  simulate->add_option("--n", simulate_args.n, "Sequence length in symbols");
  simulate->add_option("--c", simulate_args.c, "Replica count");
  simulate->add_option("--trials", simulate_args.trials, "Number of trials");
  simulate->add_option("--seed", simulate_args.seed, "Master seed");
  simulate->add_option("--threads", simulate_args.threads, "Worker threads, 0 = all cores");
  simulate->add_flag("--progress", simulate_args.progress, "Report progress on stderr");
  simulate->add_option("--out", simulate_args.out, "Outcome JSON (default stdout)");
  simulate->add_option("--per-k", simulate_args.per_k, "Per-k tally CSV");
  add_config(simulate);

  DecodeArgs decode_args;
  auto* decode = app.add_subcommand("decode", "MAP block lengths from a read bundle");
  add_model_flags(*decode, decode_args.model);
  decode->add_option("--reads", decode_args.reads, "Read bundle file")->required();
  decode->add_option("--out", decode_args.out, "Output CSV (default stdout)");
  add_config(decode);

  auto* repro = app.add_subcommand("repro", "Check the published tables and replica counts");

  std::string manifest_file;
  auto* verify = app.add_subcommand("verify", "Rerun a manifest and compare output digests");
  verify->add_option("manifest", manifest_file, "Manifest JSON")->required();

  std::vector<std::string> effective;
  try {
    effective = expand_config(app, args);
    std::vector<std::string> reversed(effective.rbegin(), effective.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  Session session(out, err);
  try {
    CLI::App* used = nullptr;
    if (channel->parsed()) {
      cmd_channel(session, channel_args);
      used = channel;
    } else if (kl->parsed()) {
      cmd_kl(session, kl_args);
      used = kl;
    } else if (entropy->parsed()) {
      cmd_entropy(session, entropy_args);
      used = entropy;
    } else if (replicas->parsed()) {
      cmd_replicas(session, replicas_args);
      used = replicas;
    } else if (simulate->parsed()) {
      cmd_simulate(session, simulate_args);
      used = simulate;
    } else if (decode->parsed()) {
      cmd_decode(session, decode_args);
      used = decode;
    } else if (repro->parsed()) {
      return cmd_repro(session);
    } else if (verify->parsed()) {
      return cmd_verify(session, manifest_file);
    }
    if (used != nullptr) write_manifest(session, *used, effective);
    return kExitOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
}

}  // namespace sticky::cli
