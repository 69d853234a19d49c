// pa: command-line surface for the private-authentication toolkit.
//
// Subcommands: keygen, session, simulate, audit, rates, sweep.
// Exit codes: 0 success / session ACCEPT, 1 session REJECT,
//             2 usage or configuration errors.
// All randomness flows from --seed; when absent a seed is drawn from the OS
// and printed as part of the output so every run can be reproduced.
// Logging verbosity comes from the PA_LOG_LEVEL environment variable
// (error, warn, info, debug).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pa/log.hpp"
#include "pa/simulation.hpp"

namespace fs = std::filesystem;
using pa::ordered_json;

namespace {

uint64_t resolve_seed(const std::optional<uint64_t>& flag_seed,
                      const std::optional<uint64_t>& config_seed = std::nullopt) {
  if (flag_seed) return *flag_seed;
  if (config_seed) return *config_seed;
  std::random_device rd;
  const uint64_t drawn = (static_cast<uint64_t>(rd()) << 32) ^ rd();
  pa::log::info("no --seed given; drew " + std::to_string(drawn) + " from the OS");
  return drawn;
}

ordered_json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw pa::ConfigInvalid("cannot open " + path);
  try {
    ordered_json j;
    in >> j;
    return j;
  } catch (const ordered_json::exception& e) {
    throw pa::ConfigInvalid("cannot parse " + path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw pa::ConfigInvalid("cannot write " + path);
  out << text;
  if (!out.good()) throw pa::ConfigInvalid("short write to " + path);
  pa::log::info("wrote " + path);
}

void append_transcript(const std::string& path, const std::vector<pa::TrialRecord>& records) {
  std::ofstream out(path, std::ios::app);
  if (!out) throw pa::ConfigInvalid("cannot open transcript " + path);
  pa::write_jsonl(records, out);
}

struct KeygenArgs {
  uint64_t q = 101;
  uint32_t L = 1;
  uint32_t K = 2;
  std::optional<uint64_t> seed;
  std::string out_dir = ".";
};

int cmd_keygen(const KeygenArgs& a) {
  const uint64_t master_seed = resolve_seed(a.seed);
  const pa::FieldCtx ctx = pa::FieldCtx::make(a.q, a.L);
  pa::Rng rng(master_seed);
  const pa::CaOutput ca = pa::ca_keygen(ctx, a.K, rng);

  fs::create_directories(a.out_dir);
  ordered_json files = ordered_json::array();
  const std::string vpath = (fs::path(a.out_dir) / "verifier_state.json").string();
  write_text_file(vpath, pa::verifier_state_to_json(ca).dump(2) + "\n");
  files.push_back(vpath);
  for (uint32_t k = 1; k <= a.K; ++k) {
    const std::string kpath =
        (fs::path(a.out_dir) / ("key_" + std::to_string(k) + ".json")).string();
    write_text_file(kpath, pa::user_key_to_json(pa::user_key(ca, k)).dump(2) + "\n");
    files.push_back(kpath);
  }

  ordered_json out;
  out["field"] = pa::field_to_json(ctx);
  out["K"] = a.K;
  out["master_seed"] = master_seed;
  out["rate"] = pa::finite_rate_to_json(pa::finite_key_rate(a.q, a.L, a.K));
  out["files"] = files;
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct SessionArgs {
  std::string verifier_state;
  std::string key;
  std::string attack;
  std::string attack_state;
  std::string transcript;
  bool unsafe_fresh = false;
  std::optional<uint64_t> seed;
};

int cmd_session(const SessionArgs& a) {
  if (a.key.empty() == a.attack.empty()) {
    throw pa::ConfigInvalid("a session needs exactly one of --key or --attack");
  }
  const uint64_t master_seed = resolve_seed(a.seed);
  const pa::CaOutput ca = pa::verifier_state_from_json(read_json_file(a.verifier_state));
  const pa::FiniteVerifier verifier(ca, a.unsafe_fresh);
  const pa::FieldCtx& ctx = verifier.state().ctx;

  pa::Rng rng(master_seed);
  const pa::Challenge ch = verifier.challenge(rng);

  pa::Response resp;
  std::string hypothesis;
  uint32_t prover = 0;
  if (!a.key.empty()) {
    const pa::UserKey key = pa::user_key_from_json(read_json_file(a.key));
    resp = pa::prover_respond(key, ch);
    hypothesis = "honest";
    prover = key.k_index;
  } else {
    const pa::AttackKind kind = pa::attack_from_name(a.attack);
    if (!pa::is_finite_attack(kind)) {
      throw pa::ConfigInvalid("session attacks must be finite-regime kinds");
    }
    pa::AttackStrategy strat{kind};
    if (kind == pa::AttackKind::finite_constant) {
      strat = pa::AttackStrategy::constant_finite(ctx.zero());
    }
    if (!a.attack_state.empty() && fs::exists(a.attack_state)) {
      strat = pa::attack_state_from_json(read_json_file(a.attack_state));
      if (strat.kind != kind) {
        throw pa::ConfigInvalid("attack state file holds a different strategy kind");
      }
    }
    resp = pa::Response{ch.session_id, pa::attack_finite(strat, ch, ctx, rng)};
    if (!a.attack_state.empty()) {
      write_text_file(a.attack_state, pa::attack_state_to_json(strat).dump(2) + "\n");
    }
    hypothesis = pa::attack_name(kind);
  }

  const bool accept = verifier.verify(resp);
  ordered_json out;
  out["master_seed"] = master_seed;
  out["challenge"] = pa::challenge_to_json(ctx, ch);
  out["response"] = pa::response_to_json(ctx, resp);
  out["hypothesis"] = hypothesis;
  out["decision"] = accept ? "ACCEPT" : "REJECT";
  std::cout << out.dump(2) << "\n";
  std::cout << (accept ? "ACCEPT" : "REJECT") << "\n";

  if (!a.transcript.empty()) {
    pa::TrialRecord rec{"finite", hypothesis, prover, accept,
                        verifier.secret().v, resp.s_hat.v, "", master_seed, 0};
    append_transcript(a.transcript, {rec});
  }
  return accept ? 0 : 1;
}

struct SimulateArgs {
  std::string config;
  std::string regime;
  std::optional<uint64_t> trials;
  std::optional<uint64_t> seed;
  std::optional<uint32_t> threads;
  std::string out_dir;
};

int cmd_simulate(const SimulateArgs& a) {
  pa::SimConfig cfg = pa::sim_config_from_json(read_json_file(a.config));
  if (!a.regime.empty()) {
    if (a.regime != "finite" && a.regime != "binning") {
      throw pa::ConfigInvalid("--regime must be finite or binning");
    }
    cfg.regime = a.regime;
  }
  if (a.trials) {
    if (*a.trials < 1) throw pa::ConfigInvalid("trials must be at least 1");
    cfg.trials = *a.trials;
  }
  if (a.threads) cfg.threads = *a.threads;
  const uint64_t master_seed = resolve_seed(a.seed, cfg.seed);

  std::vector<pa::TrialRecord> transcript;
  const ordered_json report = pa::run_simulation(cfg, master_seed, &transcript);
  std::cout << report.dump(2) << "\n";

  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    write_text_file((fs::path(a.out_dir) / "report.json").string(), report.dump(2) + "\n");
    std::ofstream jl(fs::path(a.out_dir) / "transcript.jsonl", std::ios::trunc);
    if (!jl) throw pa::ConfigInvalid("cannot write transcript.jsonl");
    pa::write_jsonl(transcript, jl);
    pa::log::info("wrote transcript with " + std::to_string(transcript.size()) + " records");
  }
  return 0;
}

struct AuditArgs {
  uint64_t q = 5;
  uint32_t L = 1;
  uint32_t K = 2;
  uint64_t budget = 10'000'000;
};

int cmd_audit(const AuditArgs& a) {
  const pa::FiniteAuditReport rep = pa::exact_leakage_audit(a.q, a.L, a.K, a.budget);
  std::cout << pa::audit_to_json(rep).dump(2) << "\n";
  return 0;
}

struct RatesArgs {
  std::string regime = "finite";
  uint64_t q = 101;
  uint32_t L = 1;
  uint32_t K = 2;
  std::string config;
  double xi = 0;
  double xi_prime = 0;
};

int cmd_rates(const RatesArgs& a) {
  ordered_json out;
  if (a.regime == "finite") {
    out["regime"] = "finite";
    out["field"] = {{"q", a.q}, {"L", a.L}};
    out["K"] = a.K;
    out["rate"] = pa::finite_rate_to_json(pa::finite_key_rate(a.q, a.L, a.K));
  } else if (a.regime == "binning") {
    if (a.config.empty()) {
      throw pa::ConfigInvalid("rates --regime binning needs --config <source.json>");
    }
    const pa::JointSource src = pa::source_from_json(read_json_file(a.config));
    out["regime"] = "binning";
    out["K"] = a.K;
    out["rate"] = pa::asymptotic_rate_to_json(pa::asymptotic_key_rate(src, a.K));
    if (a.xi > 0) {
      const pa::TypicalityParams typ{a.xi, a.xi_prime > 0 ? a.xi_prime : a.xi / 2,
                                     pa::TypicalityKind::entropy_ball};
      out["construction"] = pa::binning_rates_to_json(pa::rates_from_dist(src, typ));
    }
  } else {
    throw pa::ConfigInvalid("--regime must be finite or binning");
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct SweepArgs {
  std::string axis;
  std::vector<double> values;
  uint64_t q = 101;
  uint32_t L = 1;
  uint32_t K = 2;
  uint32_t n = 12;
  double xi = 0.2;
  double xi_prime = 0.1;
  uint64_t trials = 1000;
  uint32_t threads = 1;
  std::optional<uint64_t> seed;
  std::string format = "csv";
  std::string out_dir;
};

int cmd_sweep(const SweepArgs& a) {
  pa::SweepConfig cfg;
  cfg.axis = pa::sweep_axis_from_name(a.axis);
  cfg.values = a.values;
  cfg.q = a.q;
  cfg.L = a.L;
  cfg.K = a.K;
  cfg.n = a.n;
  cfg.typ = pa::TypicalityParams{a.xi, a.xi_prime, pa::TypicalityKind::entropy_ball};
  cfg.trials = a.trials;
  cfg.threads = a.threads;
  cfg.seed = resolve_seed(a.seed);
  if (a.format != "csv" && a.format != "json") {
    throw pa::ConfigInvalid("--format must be csv or json");
  }

  const auto rows = pa::run_sweep(cfg);
  std::ostringstream csv;
  pa::sweep_to_csv(rows, csv);
  ordered_json mirror;
  mirror["master_seed"] = cfg.seed;
  mirror["rows"] = pa::sweep_to_json(rows);

  if (a.format == "csv") {
    std::cout << csv.str();
    std::cerr << "master_seed " << cfg.seed << "\n";
  } else {
    std::cout << mirror.dump(2) << "\n";
  }
  if (!a.out_dir.empty()) {
    fs::create_directories(a.out_dir);
    write_text_file((fs::path(a.out_dir) / "sweep.csv").string(), csv.str());
    write_text_file((fs::path(a.out_dir) / "sweep.json").string(), mirror.dump(2) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "pa: implement, simulate, and audit two private-authentication schemes\n"
      "(a polynomial scheme over GF(q^L) and an asymptotic random-binning\n"
      "scheme). Set PA_LOG_LEVEL=error|warn|info|debug for diagnostics."};
  app.require_subcommand(1);

  KeygenArgs kg;
  auto* keygen = app.add_subcommand(
      "keygen", "Draw CA state: verifier_state.json and key_1.json..key_K.json");
  keygen->add_option("--q", kg.q, "Field characteristic (prime)")->capture_default_str();
  keygen->add_option("--L", kg.L, "Extension degree")->capture_default_str();
  keygen->add_option("--K", kg.K, "Number of users (needs q^L >= 2K+2)")->capture_default_str();
  keygen->add_option("--seed", kg.seed, "Master seed (drawn from the OS and printed if absent)");
  keygen->add_option("--out-dir", kg.out_dir, "Directory for the key files")
      ->capture_default_str();

  SessionArgs se;
  auto* session = app.add_subcommand(
      "session", "Run one challenge/respond/verify round; exits 0 ACCEPT, 1 REJECT");
  session->add_option("--verifier-state", se.verifier_state, "Verifier state JSON file")
      ->required();
  session->add_option("--key", se.key, "Honest prover key JSON file");
  session->add_option("--attack", se.attack,
                      "Attacker instead of a key: finite_uniform_guess, finite_constant, "
                      "or finite_replay_collector");
  session->add_option("--attack-state", se.attack_state,
                      "JSON file persisting attacker state across sessions");
  session->add_option("--transcript", se.transcript, "JSONL file to append the trial record to");
  session->add_flag("--unsafe-fresh-challenges", se.unsafe_fresh,
                    "Resample challenge points per session (replay hazard demonstration)");
  session->add_option("--seed", se.seed, "Master seed (drawn from the OS and printed if absent)");

  SimulateArgs si;
  auto* simulate = app.add_subcommand(
      "simulate", "Estimate completeness/soundness/privacy from a JSON config");
  simulate->add_option("--config", si.config, "Simulation config JSON file")->required();
  simulate->add_option("--regime", si.regime, "Override the config regime (finite|binning)");
  simulate->add_option("--trials", si.trials, "Override the trial count");
  simulate->add_option("--seed", si.seed,
                       "Master seed (config seed, else drawn from the OS and printed)");
  simulate->add_option("--threads", si.threads, "Override the worker thread count");
  simulate->add_option("--out-dir", si.out_dir, "Write report.json and transcript.jsonl here");

  AuditArgs au;
  auto* audit = app.add_subcommand(
      "audit", "Exhaustive exact leakage audit of the polynomial scheme");
  audit->add_option("--q", au.q, "Field characteristic (prime)")->capture_default_str();
  audit->add_option("--L", au.L, "Extension degree")->capture_default_str();
  audit->add_option("--K", au.K, "Number of users")->capture_default_str();
  audit->add_option("--budget", au.budget, "Enumeration budget (configurations)")
      ->capture_default_str();

  RatesArgs ra;
  auto* rates = app.add_subcommand("rates", "Key-rate calculators for either regime");
  rates->add_option("--regime", ra.regime, "finite or binning")->capture_default_str();
  rates->add_option("--q", ra.q, "Field characteristic (finite regime)")->capture_default_str();
  rates->add_option("--L", ra.L, "Extension degree (finite regime)")->capture_default_str();
  rates->add_option("--K", ra.K, "Number of users")->capture_default_str();
  rates->add_option("--config", ra.config, "Source distribution JSON (binning regime)");
  rates->add_option("--xi", ra.xi, "Also report construction rates at this packing slack");
  rates->add_option("--xi-prime", ra.xi_prime, "Covering slack (default xi/2)");

  SweepArgs sw;
  auto* sweep = app.add_subcommand("sweep", "Metric sweep along one axis, CSV or JSON");
  sweep->add_option("--axis", sw.axis, "n, qL, K, or xi")->required();
  sweep->add_option("--values", sw.values, "Axis values (comma separated)")
      ->required()
      ->delimiter(',');
  sweep->add_option("--q", sw.q, "Field characteristic (axis K)")->capture_default_str();
  sweep->add_option("--L", sw.L, "Extension degree (axis K)")->capture_default_str();
  sweep->add_option("--K", sw.K, "Users (axis qL)")->capture_default_str();
  sweep->add_option("--n", sw.n, "Block length (axis xi)")->capture_default_str();
  sweep->add_option("--xi", sw.xi, "Packing slack (axis n)")->capture_default_str();
  sweep->add_option("--xi-prime", sw.xi_prime, "Covering slack (axis n)")->capture_default_str();
  sweep->add_option("--trials", sw.trials, "Trials per row")->capture_default_str();
  sweep->add_option("--threads", sw.threads, "Worker threads")->capture_default_str();
  sweep->add_option("--seed", sw.seed, "Master seed (drawn from the OS and printed if absent)");
  sweep->add_option("--format", sw.format, "csv or json")->capture_default_str();
  sweep->add_option("--out-dir", sw.out_dir, "Also write sweep.csv and sweep.json here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the usage message
    return 2;
  }

  try {
    if (app.got_subcommand(keygen)) return cmd_keygen(kg);
    if (app.got_subcommand(session)) return cmd_session(se);
    if (app.got_subcommand(simulate)) return cmd_simulate(si);
    if (app.got_subcommand(audit)) return cmd_audit(au);
    if (app.got_subcommand(rates)) return cmd_rates(ra);
    if (app.got_subcommand(sweep)) return cmd_sweep(sw);
  } catch (const pa::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
