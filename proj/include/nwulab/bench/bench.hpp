#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nwulab/bench/report.hpp"
#include "nwulab/handshake/runner.hpp"

namespace nwulab::bench {

struct BenchOptions {
  size_t iterations = 30;
  /// Seeds the whole bench (per-iteration seeds derive from it);
  /// unset runs on system randomness.
  std::optional<uint64_t> seed;
  bool use_udp = false;
  std::vector<handshake::Mode> modes = {handshake::Mode::DhPsk, handshake::Mode::DhCert,
                                        handshake::Mode::Qkd};
  /// Where to drop report.md, phase_stats.csv, overhead.csv, and the
  /// raw per-iteration CSVs; empty writes nothing.
  std::string output_dir;
  handshake::HandshakeConfig base_config;
};

/// One mode's aggregate across the iterations.
struct ModeBench {
  handshake::Mode mode = handshake::Mode::DhPsk;
  size_t iterations = 0;
  size_t failures = 0;  // any run not established with matching, usable keys
  std::vector<double> init_ms, auth_ms, child_ms, total_ms;
  std::vector<OverheadRow> overhead;  // per-datagram sizes, first clean run
  size_t handshake_bytes = 0;         // IKE bytes, whole handshake
  size_t wire_bytes = 0;              // with per-datagram framing
  size_t message_count = 0;
  uint64_t modexp_per_run = 0;
  uint64_t prf_plus_per_run = 0;
  std::string first_error;
};

struct BenchReport {
  std::vector<ModeBench> modes;
  std::vector<PhaseStats> phases;
  std::string markdown;
  bool all_ok = false;
};

BenchReport run_bench(const BenchOptions& options);

/// Cost of the classical exchange's two public-key steps, measured in
/// isolation: one keypair derivation and one shared-secret computation.
struct DhCostEstimate {
  double keypair_ms = 0.0;
  double shared_ms = 0.0;
  size_t samples = 0;
};

DhCostEstimate measure_dh_cost(size_t samples = 32,
                               std::optional<uint64_t> seed = std::nullopt);

}  // namespace nwulab::bench
