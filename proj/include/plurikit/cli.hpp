#pragma once

// Config-driven experiment runner: config parsing and defaulting, the
// command implementations, and the CSV / manifest / summary writers.

#include <filesystem>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "plurikit/asymptotics.hpp"
#include "plurikit/envelope.hpp"
#include "plurikit/hilbert.hpp"

namespace plurikit {

inline constexpr std::string_view tool_version = "0.1.0";

inline constexpr std::string_view commands[] = {"envelope", "bergman", "converge", "volume",
                                               "expansion", "capacity", "offdiag"};

struct TzcConfig {
  Vec2 lo{2.0, 2.0};
  Vec2 hi{3.0, 3.0};
  std::size_t nodes = 11;   // per axis
  std::vector<long> k_list; // empty: the dyadic tail of the main k list
};

struct OffdiagConfig {
  TestFunction on{0.6, 0.0, 1.3, 0.0};
  TestFunction off_f{0.6, 0.0, 1.0, 1.0};
  TestFunction off_g{0.6, 3.141592653589793, 1.0, 1.0};
  std::size_t reproducing_points = 8;
};

/// Acceptance thresholds; negative values disable a gate.
struct Gates {
  double mass_identity = 1e-6;
  double volume_rel = 0.01;
  double off_contact_fraction = 0.01;
  double l1_last = -1.0;
  double volume_cdf = -1.0;
  long metric_fit_levels = 2;
  double tzc_spread = 0.1;
  double tchebishev_rel = 0.05;
  double decay_mid_rel = 0.05;
  long decay_k = 0;  // 0: largest k
  double offdiag_disjoint = 0.05;
  double offdiag_on_rel = 0.1;
  double reproducing = 1e-6;
};

struct RunConfig {
  std::string name = "run";
  int workers = 1;
  std::string weight_kind;
  WeightSpec weight = WeightSpec::fs_chart();
  GridDomain envelope_grid;
  GridDomain eval_grid;
  std::vector<long> k_list;
  QuadratureOptions quad;
  EnvelopeOptions envelope;
  TzcConfig tzc;
  OffdiagConfig offdiag;
  Gates gates;
  std::vector<std::string> warnings;
};

/// Parses a JSON config and fills every default. Throws ConfigError naming
/// the first offending key.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// The fully defaulted config with derived quantities and warnings (JSON).
std::string echo_config(const RunConfig& config);

/// One CSV table: a `# schema=plurikit.<table>.v1` line, a header, then rows.
/// Reals are printed with %.17g.
class CsvTable {
 public:
  struct Cell {
    enum class Kind { Real, Integer, Text } kind;
    double real = 0.0;
    long long integer = 0;
    std::string text;

    Cell(double v) : kind(Kind::Real), real(v) {}
    Cell(int v) : kind(Kind::Integer), integer(v) {}
    Cell(long v) : kind(Kind::Integer), integer(v) {}
    Cell(long long v) : kind(Kind::Integer), integer(v) {}
    Cell(unsigned long v) : kind(Kind::Integer), integer(static_cast<long long>(v)) {}
    Cell(const char* v) : kind(Kind::Text), text(v) {}
    Cell(std::string v) : kind(Kind::Text), text(std::move(v)) {}
  };

  CsvTable(std::string table, std::vector<std::string> columns);

  void row(std::initializer_list<Cell> cells);
  void row(const std::vector<Cell>& cells);
  const std::string& name() const noexcept { return table_; }
  std::string str() const;
  void write(const std::filesystem::path& dir) const;

 private:
  std::string table_;
  std::vector<std::string> columns_;
  std::string body_;
};

struct GateResult {
  std::string name;
  bool pass = false;
  double value = 0.0;
  std::string relation;
  double threshold = 0.0;
};

std::string format_gate(const GateResult& gate);

struct RunResult {
  std::vector<CsvTable> tables;
  std::vector<GateResult> gates;
};

/// Computes one command without touching the file system. Throws
/// ConfigError when the command does not apply to the configured weight.
RunResult execute(const std::string& command, const RunConfig& config);

/// execute() plus the artifacts in `out`: CSV tables, summary.txt and
/// manifest.json. Returns the process exit code (0 pass, 1 gate failure,
/// 2 config error, 3 numerical error); diagnostics go to `log`.
int run(const std::string& command, const std::filesystem::path& config_path, const std::filesystem::path& out,
        int workers, std::ostream& log);

}  // namespace plurikit
