#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "nwulab/bench/stats.hpp"

namespace nwulab::bench {

/// Duration statistics for one handshake phase under one mode.
struct PhaseStats {
  std::string mode;   // "dh-psk", "dh-cert", "qkd"
  std::string phase;  // "IKE_SA_INIT", "IKE_AUTH", "CREATE_CHILD_SA"
  Summary ms;

  bool operator==(const PhaseStats&) const = default;
};

/// One datagram's contribution to handshake overhead.
struct OverheadRow {
  std::string mode;
  std::string label;      // wire_label of the datagram
  size_t ike_bytes = 0;   // the IKE message itself
  size_t wire_bytes = 0;  // plus per-datagram framing

  bool operator==(const OverheadRow&) const = default;
};

/// Ethernet (14) + IPv4 (20) + UDP (8) framing around each datagram,
/// the accounting a loopback capture would show per packet.
inline constexpr size_t kDatagramFraming = 42;

/// Mean/SD grid: one mode per block, one column per phase, plus a TOTAL
/// column summing the phase means.
std::string render_markdown_table(const std::vector<PhaseStats>& rows);

std::string render_phase_csv(const std::vector<PhaseStats>& rows);
std::vector<PhaseStats> parse_phase_csv(const std::string& csv);

std::string render_overhead_csv(const std::vector<OverheadRow>& rows);
std::vector<OverheadRow> parse_overhead_csv(const std::string& csv);

}  // namespace nwulab::bench
