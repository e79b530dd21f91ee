#ifndef THEMBED_WALKER_HPP
#define THEMBED_WALKER_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thembed/graph.hpp"
#include "thembed/rng.hpp"
#include "thembed/types.hpp"

namespace thembed {

// Position of a walk in flight. n counts consecutive hops at the current
// timestamp, m consecutive hops at the current node type; both start at 1
// and reset to 1 when the timestamp advances / the type changes.
struct WalkState {
  NodeIndex current;
  Timestamp time;
  TypeIndex type;
  int n = 1;
  int m = 1;
};

struct Walk {
  std::vector<NodeIndex> nodes;
  std::vector<Timestamp> times;  // length == nodes.size() - 1
  NodeIndex origin = -1;         // start node at creation
  std::uint32_t epoch = 0;       // incremental-update round that created it
};

struct WalkCorpus {
  std::vector<Walk> walks;
  std::uint32_t update_epoch = 0;
  std::size_t total_hops() const {
    std::size_t n = 0;
    for (const Walk& w : walks) n += w.times.size();
    return n;
  }
};

struct WalkConfig {
  double alpha = 0.9;              // initial type staying probability
  double beta = 0.3;               // initial timestamp staying probability
  int walks_per_node = 10;
  int max_walk_length = 80;        // node count bound per walk
  bool temporal_constraint = true;   // off: ignore timestamps entirely
  bool heterogeneous_constraint = true;  // off: ignore node types
  std::uint64_t seed = 1;
  int threads = 1;
};

struct UpdateConfig {
  // staleness horizon for removing early walk prefixes; <0 derives
  // horizon = horizon_fraction * (max_time - min_time)
  Timestamp horizon = -1;
  double horizon_fraction = 0.25;
  int reversed_per_node = -1;  // <0: walks_per_node
};

struct UpdateSummary {
  std::size_t preserved = 0;
  std::size_t truncated = 0;
  std::size_t continued = 0;
  std::size_t reversed_added = 0;
  std::size_t removed = 0;
};

struct TimeDecision {
  enum Kind { Stop, Stay, Advance } kind;
  Timestamp time;  // the chosen hop timestamp for Stay/Advance
};

enum class TypeDecision { SameType, OtherType };

// Timestamp rule: Stop when no incident edge at/after the current time;
// staying at the current time costs beta^n when strictly later timestamps
// also exist, and is certain when they do not; advancing picks uniformly
// among the distinct later timestamps.
TimeDecision timestamp_decision(const TemporalHIN& g, const WalkState& s,
                                double beta, Rng& rng);

// Mirror image used to grow reversed walks: time runs backward, staying
// still costs beta^n, advancing moves to strictly earlier timestamps.
TimeDecision timestamp_decision_reverse(const TemporalHIN& g, const WalkState& s,
                                        double beta, Rng& rng);

// Type rule at the chosen hop timestamp: forced when all (or none) of the
// neighbors there share the current type, alpha^m otherwise. Precondition:
// neighbors_exactly_at(current, chosen_time) is nonempty.
TypeDecision type_decision(const TemporalHIN& g, const WalkState& s,
                           Timestamp chosen_time, double alpha, Rng& rng);

struct Hop {
  NodeIndex node;
  Timestamp time;
};

// One hop of the double-constrained walk; updates the state counters.
// A disabled constraint is replaced by uniform sampling over the entries
// it would otherwise have filtered.
std::optional<Hop> step(const TemporalHIN& g, WalkState& s, const WalkConfig& cfg,
                        Rng& rng);
std::optional<Hop> step_reverse(const TemporalHIN& g, WalkState& s,
                                const WalkConfig& cfg, Rng& rng);

// walks_per_node walks per non-isolated node. Each walk starts by drawing
// one incident edge uniformly, which fixes the initial time/type and n=m=1.
// Deterministic for a fixed seed regardless of thread count.
WalkCorpus generate_corpus(const TemporalHIN& g, const WalkConfig& cfg);

// Incremental maintenance for an append-only edge delta. Extends the graph,
// then: uninvolved walks are returned untouched; involved walks lose hops
// older than (new max time - horizon) from their front; involved walks
// ending at an involved node are continued; each involved node receives
// reversed walks grown backward from the new timestamps and flipped so that
// stored times stay non-decreasing.
UpdateSummary update_corpus(TemporalHIN& g, WalkCorpus& corpus,
                            std::span<const TemporalEdge> new_edges,
                            const WalkConfig& cfg, const UpdateConfig& ucfg = {});

// Corpus files: one walk per line of node ids; sidecar carries hop times.
void save_corpus(const WalkCorpus& corpus, const TemporalHIN& g,
                 const std::string& path, bool with_times,
                 const std::string& header_comment = {});
WalkCorpus load_corpus(const std::string& path, const TemporalHIN& g,
                       bool with_times);

// Validation helper: edge existence always; time ordering unless the
// temporal constraint was disabled. Returns an error description or empty.
std::string validate_corpus(const WalkCorpus& corpus, const TemporalHIN& g,
                            const WalkConfig& cfg);

}  // namespace thembed

#endif
