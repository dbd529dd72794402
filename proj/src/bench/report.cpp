#include "nwulab/bench/report.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace nwulab::bench {

namespace {

std::string fmt(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

const char* const kPhaseOrder[] = {"IKE_SA_INIT", "IKE_AUTH", "CREATE_CHILD_SA"};

const PhaseStats* find_row(const std::vector<PhaseStats>& rows, const std::string& mode,
                           const std::string& phase) {
  for (const PhaseStats& r : rows) {
    if (r.mode == mode && r.phase == phase) return &r;
  }
  return nullptr;
}

std::vector<std::string> modes_in_order(const std::vector<PhaseStats>& rows) {
  std::vector<std::string> modes;
  for (const PhaseStats& r : rows) {
    bool seen = false;
    for (const std::string& m : modes) seen = seen || m == r.mode;
    if (!seen) modes.push_back(r.mode);
  }
  return modes;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

constexpr const char* kPhaseHeader =
    "mode,phase,count,mean_ms,sd_ms,min_ms,q1_ms,median_ms,q3_ms,max_ms,outliers";
constexpr const char* kOverheadHeader = "mode,label,ike_bytes,wire_bytes";

}  // namespace

std::string render_markdown_table(const std::vector<PhaseStats>& rows) {
  std::ostringstream out;
  out << "| Mode | Stat | IKE_SA_INIT (ms) | IKE_AUTH (ms) | CREATE_CHILD_SA (ms) | "
         "TOTAL (ms) |\n";
  out << "|------|------|------------------|---------------|----------------------|"
         "------------|\n";
  for (const std::string& mode : modes_in_order(rows)) {
    double total = 0.0;
    bool complete = true;
    std::string mean_cells, sd_cells;
    for (const char* phase : kPhaseOrder) {
      const PhaseStats* r = find_row(rows, mode, phase);
      if (r) {
        total += r->ms.mean;
        mean_cells += " " + fmt(r->ms.mean, 3) + " |";
        sd_cells += " " + fmt(r->ms.stddev, 3) + " |";
      } else {
        complete = false;
        mean_cells += " |";
        sd_cells += " |";
      }
    }
    out << "| " << mode << " | M: |" << mean_cells << " "
        << (complete ? fmt(total, 3) : std::string()) << " |\n";
    out << "| " << mode << " | SD: |" << sd_cells << " |\n";
  }
  return out.str();
}

std::string render_phase_csv(const std::vector<PhaseStats>& rows) {
  std::ostringstream out;
  out << kPhaseHeader << "\n";
  for (const PhaseStats& r : rows) {
    out << r.mode << ',' << r.phase << ',' << r.ms.count << ',' << fmt(r.ms.mean) << ','
        << fmt(r.ms.stddev) << ',' << fmt(r.ms.min) << ',' << fmt(r.ms.q1) << ','
        << fmt(r.ms.median) << ',' << fmt(r.ms.q3) << ',' << fmt(r.ms.max) << ','
        << r.ms.outliers << "\n";
  }
  return out.str();
}

std::vector<PhaseStats> parse_phase_csv(const std::string& csv) {
  std::stringstream ss(csv);
  std::string line;
  if (!std::getline(ss, line) || line != kPhaseHeader) {
    throw std::invalid_argument("unexpected phase CSV header");
  }
  std::vector<PhaseStats> rows;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 11) throw std::invalid_argument("phase CSV row has wrong arity");
    PhaseStats r;
    r.mode = f[0];
    r.phase = f[1];
    r.ms.count = std::stoul(f[2]);
    r.ms.mean = std::stod(f[3]);
    r.ms.stddev = std::stod(f[4]);
    r.ms.min = std::stod(f[5]);
    r.ms.q1 = std::stod(f[6]);
    r.ms.median = std::stod(f[7]);
    r.ms.q3 = std::stod(f[8]);
    r.ms.max = std::stod(f[9]);
    r.ms.outliers = std::stoul(f[10]);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string render_overhead_csv(const std::vector<OverheadRow>& rows) {
  std::ostringstream out;
  out << kOverheadHeader << "\n";
  for (const OverheadRow& r : rows) {
    out << r.mode << ',' << r.label << ',' << r.ike_bytes << ',' << r.wire_bytes << "\n";
  }
  return out.str();
}

std::vector<OverheadRow> parse_overhead_csv(const std::string& csv) {
  std::stringstream ss(csv);
  std::string line;
  if (!std::getline(ss, line) || line != kOverheadHeader) {
    throw std::invalid_argument("unexpected overhead CSV header");
  }
  std::vector<OverheadRow> rows;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 4) throw std::invalid_argument("overhead CSV row has wrong arity");
    OverheadRow r;
    r.mode = f[0];
    r.label = f[1];
    r.ike_bytes = std::stoul(f[2]);
    r.wire_bytes = std::stoul(f[3]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace nwulab::bench
