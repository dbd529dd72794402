// Command-line front end: benchmarks, single handshakes, the standalone
// KMS pair, and the public-key cost probe.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nwulab/bench/bench.hpp"
#include "nwulab/handshake/runner.hpp"
#include "nwulab/keys/auth.hpp"
#include "nwulab/kms/http_server.hpp"
#include "nwulab/kms/store.hpp"

using json = nlohmann::json;
using namespace nwulab;

namespace {

std::atomic<bool> g_stop{false};
void handle_signal(int) { g_stop.store(true); }

handshake::Mode parse_mode(const std::string& name) {
  if (name == "dh-psk") return handshake::Mode::DhPsk;
  if (name == "dh-cert") return handshake::Mode::DhCert;
  if (name == "qkd") return handshake::Mode::Qkd;
  throw CLI::ValidationError("--mode", "unknown mode '" + name + "'");
}

/// Optional JSON file with the same knobs as the flags; explicit flags win.
void apply_config_file(const std::string& path, bench::BenchOptions& options) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  json j = json::parse(in);
  if (j.contains("iterations")) options.iterations = j["iterations"].get<size_t>();
  if (j.contains("seed")) options.seed = j["seed"].get<uint64_t>();
  if (j.contains("udp")) options.use_udp = j["udp"].get<bool>();
  if (j.contains("output_dir")) options.output_dir = j["output_dir"].get<std::string>();
  if (j.contains("modes")) {
    options.modes.clear();
    for (const auto& m : j["modes"]) options.modes.push_back(parse_mode(m.get<std::string>()));
  }
  if (j.contains("child_sa_count")) {
    options.base_config.sa_plan.child_sa_count = j["child_sa_count"].get<size_t>();
  }
}

void ensure_certs(handshake::HandshakeConfig& config, std::optional<uint64_t> seed) {
  if (!config.initiator_cert.private_key.empty()) return;
  auto rng = make_rng(seed ? std::optional<uint64_t>(*seed ^ 0xC0DE) : std::nullopt);
  config.initiator_cert = keys::make_cert_identity(config.identities.initiator, 1250, *rng);
  config.responder_cert = keys::make_cert_identity(config.identities.responder, 1250, *rng);
}

int cmd_handshake(const std::string& mode_name, std::optional<uint64_t> seed, bool udp,
                  size_t children, bool as_json) {
  handshake::HandshakeConfig config;
  config.mode = parse_mode(mode_name);
  config.sa_plan.child_sa_count = children;
  if (config.mode == handshake::Mode::DhCert) ensure_certs(config, seed);

  std::unique_ptr<kms::KmsSystem> kms;
  handshake::RunOptions run;
  run.seed = seed;
  run.use_udp = udp;
  if (config.mode == handshake::Mode::Qkd) {
    kms::KmsConfig kc;
    kc.seed = seed;
    kms = std::make_unique<kms::KmsSystem>(kc);
    kms->replenish(64);
    run.kms = kms.get();
  }

  handshake::HandshakeResult result = run_full_handshake(config, run);

  if (as_json) {
    json j;
    j["mode"] = to_string(result.mode);
    j["success"] = result.success;
    j["error"] = result.error;
    j["keys_match"] = result.keys_match;
    j["probes_ok"] = result.probes_ok;
    j["key_fingerprint"] = result.key_fingerprint;
    j["message_count"] = result.message_count;
    j["modexp_count"] = result.modexp_count;
    j["prf_plus_count"] = result.prf_plus_count;
    j["init_ms"] = result.init_ms();
    j["auth_ms"] = result.auth_ms();
    j["child_ms"] = result.child_ms();
    j["total_ms"] = result.total_ms();
    json msgs = json::array();
    size_t total_bytes = 0;
    for (const auto* trace : {&result.initiator_trace, &result.responder_trace}) {
      for (const auto& rec : *trace) {
        if (rec.direction != transport::WireRecord::Direction::Send) continue;
        msgs.push_back({{"label", rec.label}, {"bytes", rec.bytes_on_wire}});
        total_bytes += rec.bytes_on_wire;
      }
    }
    j["messages"] = msgs;
    j["handshake_bytes"] = total_bytes;
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "mode:          " << to_string(result.mode) << "\n"
              << "established:   " << (result.success ? "yes" : "no") << "\n";
    if (!result.error.empty()) std::cout << "error:         " << result.error << "\n";
    std::cout << "keys match:    " << (result.keys_match ? "yes" : "no") << "\n"
              << "sa probes:     " << (result.probes_ok ? "ok" : "failed") << "\n"
              << "fingerprint:   " << result.key_fingerprint << "\n"
              << "messages:      " << result.message_count << "\n"
              << "modexp:        " << result.modexp_count << "\n"
              << "prf+ runs:     " << result.prf_plus_count << "\n"
              << "init/auth/child/total ms: " << result.init_ms() << " / "
              << result.auth_ms() << " / " << result.child_ms() << " / "
              << result.total_ms() << "\n";
  }
  return result.success && result.keys_match && result.probes_ok ? 0 : 1;
}

int cmd_kms_serve(const std::string& host, int port_a, int port_b, size_t pool,
                  std::optional<uint64_t> seed, const std::vector<std::string>& sae_a,
                  const std::vector<std::string>& sae_b) {
  kms::KmsConfig kc;
  kc.seed = seed;
  kc.capacity = std::max(kc.capacity, pool);
  kms::KmsSystem system(kc);
  if (pool) system.replenish(pool);

  handshake::QkdSettings defaults;
  system.register_sae(defaults.initiator_sae, 'a');
  system.register_sae(defaults.responder_sae, 'b');
  for (const std::string& s : sae_a) system.register_sae(kms::SaeId{s}, 'a');
  for (const std::string& s : sae_b) system.register_sae(kms::SaeId{s}, 'b');

  kms::KmsHttpServer server_a(system.kme_a(), host, port_a);
  kms::KmsHttpServer server_b(system.kme_b(), host, port_b);
  server_a.start();
  server_b.start();
  std::cout << "access-side KME:  http://" << host << ":" << server_a.port() << "\n"
            << "core-side KME:    http://" << host << ":" << server_b.port() << "\n"
            << "pooled keys:      " << pool << "\n"
            << "stop with SIGINT/SIGTERM\n";

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server_a.stop();
  server_b.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum-vs-classical IKEv2 handshake laboratory"};
  app.require_subcommand(1);

  // --- bench ---------------------------------------------------------------
  auto* bench_cmd = app.add_subcommand("bench", "Benchmark the three handshake modes");
  bench::BenchOptions bench_options;
  std::string config_path;
  std::vector<std::string> bench_mode_names;
  uint64_t bench_seed = 0;
  bench_cmd->add_option("--config", config_path, "JSON config file (flags override it)");
  auto* iter_opt =
      bench_cmd->add_option("--iterations", bench_options.iterations, "Runs per mode");
  auto* seed_opt = bench_cmd->add_option("--seed", bench_seed, "Deterministic seed");
  auto* udp_opt = bench_cmd->add_flag("--udp", "Loopback UDP instead of the memory link");
  auto* out_opt =
      bench_cmd->add_option("--out", bench_options.output_dir, "Report output directory");
  auto* modes_opt = bench_cmd->add_option("--modes", bench_mode_names,
                                          "Subset of: dh-psk dh-cert qkd");
  auto* children_opt = bench_cmd->add_option(
      "--children", bench_options.base_config.sa_plan.child_sa_count, "Child SAs per run");

  // --- handshake -----------------------------------------------------------
  auto* hs_cmd = app.add_subcommand("handshake", "Run one handshake and report it");
  std::string hs_mode = "dh-psk";
  uint64_t hs_seed = 0;
  bool hs_udp = false, hs_json = false;
  size_t hs_children = 2;
  hs_cmd->add_option("--mode", hs_mode, "dh-psk | dh-cert | qkd");
  auto* hs_seed_opt = hs_cmd->add_option("--seed", hs_seed, "Deterministic seed");
  hs_cmd->add_flag("--udp", hs_udp, "Loopback UDP instead of the memory link");
  hs_cmd->add_flag("--json", hs_json, "Machine-readable output");
  hs_cmd->add_option("--children", hs_children, "Child SAs to establish");

  // --- kms-serve -----------------------------------------------------------
  auto* kms_cmd = app.add_subcommand("kms-serve", "Serve the simulated KMS pair over HTTP");
  std::string kms_host = "127.0.0.1";
  int port_a = 8010, port_b = 8011;
  size_t pool = 1024;
  uint64_t kms_seed = 0;
  std::vector<std::string> sae_a, sae_b;
  kms_cmd->add_option("--host", kms_host, "Bind address");
  kms_cmd->add_option("--port-a", port_a, "Access-side KME port (0 = ephemeral)");
  kms_cmd->add_option("--port-b", port_b, "Core-side KME port (0 = ephemeral)");
  kms_cmd->add_option("--pool", pool, "Keys to preload");
  auto* kms_seed_opt = kms_cmd->add_option("--seed", kms_seed, "Deterministic key material");
  kms_cmd->add_option("--sae-a", sae_a, "Extra SAE ids on the access side");
  kms_cmd->add_option("--sae-b", sae_b, "Extra SAE ids on the core side");

  // --- dh-cost ---------------------------------------------------------------
  auto* dh_cmd = app.add_subcommand("dh-cost", "Time the classical exchange's key steps");
  size_t dh_samples = 32;
  uint64_t dh_seed = 0;
  dh_cmd->add_option("--samples", dh_samples, "Measurement repetitions");
  auto* dh_seed_opt = dh_cmd->add_option("--seed", dh_seed, "Deterministic seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (bench_cmd->parsed()) {
      bench::BenchOptions options;  // defaults
      if (!config_path.empty()) apply_config_file(config_path, options);
      if (iter_opt->count()) options.iterations = bench_options.iterations;
      if (seed_opt->count()) options.seed = bench_seed;
      if (udp_opt->count()) options.use_udp = true;
      if (out_opt->count()) options.output_dir = bench_options.output_dir;
      if (children_opt->count()) {
        options.base_config.sa_plan.child_sa_count =
            bench_options.base_config.sa_plan.child_sa_count;
      }
      if (modes_opt->count()) {
        options.modes.clear();
        for (const std::string& name : bench_mode_names)
          options.modes.push_back(parse_mode(name));
      }
      bench::BenchReport report = bench::run_bench(options);
      std::cout << report.markdown;
      for (const bench::ModeBench& mb : report.modes) {
        std::cout << to_string(mb.mode) << ": " << (mb.iterations - mb.failures) << "/"
                  << mb.iterations << " clean, " << mb.message_count << " messages, "
                  << mb.handshake_bytes << " IKE bytes (" << mb.wire_bytes
                  << " with framing)\n";
        if (!mb.first_error.empty()) {
          std::cout << "  first failure: " << mb.first_error << "\n";
        }
      }
      if (!options.output_dir.empty()) {
        std::cout << "reports under " << options.output_dir << "\n";
      }
      return report.all_ok ? 0 : 1;
    }
    if (hs_cmd->parsed()) {
      return cmd_handshake(hs_mode, hs_seed_opt->count() ? std::optional(hs_seed) : std::nullopt,
                           hs_udp, hs_children, hs_json);
    }
    if (kms_cmd->parsed()) {
      return cmd_kms_serve(kms_host, port_a, port_b, pool,
                           kms_seed_opt->count() ? std::optional(kms_seed) : std::nullopt,
                           sae_a, sae_b);
    }
    if (dh_cmd->parsed()) {
      bench::DhCostEstimate est = bench::measure_dh_cost(
          dh_samples, dh_seed_opt->count() ? std::optional(dh_seed) : std::nullopt);
      std::cout << "keypair_ms: " << est.keypair_ms << "\n"
                << "shared_ms:  " << est.shared_ms << "\n"
                << "samples:    " << est.samples << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
