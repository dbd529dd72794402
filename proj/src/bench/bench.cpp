#include "nwulab/bench/bench.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nwulab/keys/auth.hpp"
#include "nwulab/keys/dh.hpp"
#include "nwulab/kms/store.hpp"

namespace nwulab::bench {

using namespace std::chrono;
namespace fs = std::filesystem;
using handshake::HandshakeConfig;
using handshake::HandshakeResult;
using handshake::Mode;

namespace {

/// Merges both ends' send records into wire order.
std::vector<OverheadRow> overhead_rows(const HandshakeResult& result) {
  std::vector<transport::WireRecord> sends;
  for (const auto* trace : {&result.initiator_trace, &result.responder_trace}) {
    for (const auto& rec : *trace) {
      if (rec.direction == transport::WireRecord::Direction::Send) sends.push_back(rec);
    }
  }
  std::stable_sort(sends.begin(), sends.end(),
                   [](const auto& a, const auto& b) { return a.timestamp_ns < b.timestamp_ns; });
  std::vector<OverheadRow> rows;
  rows.reserve(sends.size());
  for (const auto& rec : sends) {
    rows.push_back(OverheadRow{to_string(result.mode), rec.label, rec.bytes_on_wire,
                               rec.bytes_on_wire + kDatagramFraming});
  }
  return rows;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

size_t qkd_slots_needed(const HandshakeConfig& config) {
  return 4 + 4 * config.sa_plan.child_sa_count + 1;
}

}  // namespace

BenchReport run_bench(const BenchOptions& options) {
  BenchReport report;
  report.all_ok = true;

  // Certificate identities are fixtures, identical across iterations.
  HandshakeConfig base = options.base_config;
  bool needs_certs =
      std::count(options.modes.begin(), options.modes.end(), Mode::DhCert) > 0;
  if (needs_certs &&
      (base.initiator_cert.private_key.empty() || base.responder_cert.private_key.empty())) {
    auto cert_rng = make_rng(options.seed ? std::optional<uint64_t>(*options.seed ^ 0xC0DE)
                                          : std::nullopt);
    base.initiator_cert = keys::make_cert_identity(base.identities.initiator, 1250, *cert_rng);
    base.responder_cert = keys::make_cert_identity(base.identities.responder, 1250, *cert_rng);
  }

  std::ostringstream raw_csv_all;
  raw_csv_all << "mode,iteration,init_ms,auth_ms,child_ms,total_ms,success\n";

  for (Mode mode : options.modes) {
    ModeBench mb;
    mb.mode = mode;
    mb.iterations = options.iterations;

    std::unique_ptr<kms::KmsSystem> kms;
    if (mode == Mode::Qkd) {
      kms::KmsConfig kc;
      kc.kme_a_id = base.qkd.source_kme_id;
      kc.kme_b_id = base.qkd.target_kme_id;
      kc.key_size_bits = base.qkd.key_size_bits;
      kc.seed = options.seed;
      size_t per_run = std::max(qkd_slots_needed(base), base.qkd.key_count_override);
      kc.capacity = std::max<size_t>(kc.capacity, per_run * options.iterations + 64);
      kms = std::make_unique<kms::KmsSystem>(kc);
      kms->replenish(per_run * options.iterations + 64);
    }

    HandshakeConfig config = base;
    config.mode = mode;

    for (size_t iter = 0; iter < options.iterations; ++iter) {
      handshake::RunOptions run;
      if (options.seed) run.seed = *options.seed + iter * 7919 + 1;
      run.use_udp = options.use_udp;
      run.kms = kms.get();

      HandshakeResult result = run_full_handshake(config, run);
      bool ok = result.success && result.keys_match && result.probes_ok;
      if (!ok) {
        ++mb.failures;
        report.all_ok = false;
        if (mb.first_error.empty()) {
          mb.first_error = result.error.empty() ? "keys mismatched or probes failed"
                                                : result.error;
        }
      } else {
        mb.init_ms.push_back(result.init_ms());
        mb.auth_ms.push_back(result.auth_ms());
        mb.child_ms.push_back(result.child_ms());
        mb.total_ms.push_back(result.total_ms());
        if (mb.overhead.empty()) {
          mb.overhead = overhead_rows(result);
          mb.message_count = result.message_count;
          mb.modexp_per_run = result.modexp_count;
          mb.prf_plus_per_run = result.prf_plus_count;
          for (const OverheadRow& row : mb.overhead) {
            mb.handshake_bytes += row.ike_bytes;
            mb.wire_bytes += row.wire_bytes;
          }
        }
      }
      raw_csv_all << to_string(mode) << ',' << iter << ',' << result.init_ms() << ','
                  << result.auth_ms() << ',' << result.child_ms() << ','
                  << result.total_ms() << ',' << (ok ? 1 : 0) << "\n";
    }

    report.phases.push_back(PhaseStats{to_string(mode), "IKE_SA_INIT", summarize(mb.init_ms)});
    report.phases.push_back(PhaseStats{to_string(mode), "IKE_AUTH", summarize(mb.auth_ms)});
    report.phases.push_back(
        PhaseStats{to_string(mode), "CREATE_CHILD_SA", summarize(mb.child_ms)});
    report.modes.push_back(std::move(mb));
  }

  report.markdown = render_markdown_table(report.phases);

  if (!options.output_dir.empty()) {
    fs::path dir(options.output_dir);
    fs::create_directories(dir);
    std::vector<OverheadRow> all_overhead;
    std::ostringstream md;
    md << "# Handshake timing\n\n" << report.markdown << "\n";
    md << "# Handshake overhead (bytes, framing included)\n\n";
    md << "| Mode | Messages | IKE bytes | Wire bytes |\n";
    md << "|------|----------|-----------|------------|\n";
    for (const ModeBench& mb : report.modes) {
      all_overhead.insert(all_overhead.end(), mb.overhead.begin(), mb.overhead.end());
      md << "| " << to_string(mb.mode) << " | " << mb.message_count << " | "
         << mb.handshake_bytes << " | " << mb.wire_bytes << " |\n";
    }
    write_file(dir / "report.md", md.str());
    write_file(dir / "phase_stats.csv", render_phase_csv(report.phases));
    write_file(dir / "overhead.csv", render_overhead_csv(all_overhead));
    write_file(dir / "raw_runs.csv", raw_csv_all.str());
  }
  return report;
}

DhCostEstimate measure_dh_cost(size_t samples, std::optional<uint64_t> seed) {
  DhCostEstimate est;
  est.samples = samples;
  if (samples == 0) return est;

  auto rng = make_rng(seed);
  auto group = keys::modp2048();

  // Warm-up, and a fixed peer for the shared-secret half.
  keys::DhKeyPair peer = keys::dh_keypair(*group, *rng);
  (void)keys::dh_shared_secret(*group, peer.private_key, peer.public_key);

  double keypair_total = 0.0;
  double shared_total = 0.0;
  for (size_t i = 0; i < samples; ++i) {
    auto t0 = steady_clock::now();
    keys::DhKeyPair pair = keys::dh_keypair(*group, *rng);
    auto t1 = steady_clock::now();
    Bytes shared = keys::dh_shared_secret(*group, pair.private_key, peer.public_key);
    auto t2 = steady_clock::now();
    keypair_total += duration<double, std::milli>(t1 - t0).count();
    shared_total += duration<double, std::milli>(t2 - t1).count();
    if (shared.empty()) throw std::runtime_error("empty shared secret");
  }
  est.keypair_ms = keypair_total / double(samples);
  est.shared_ms = shared_total / double(samples);
  return est;
}

}  // namespace nwulab::bench
