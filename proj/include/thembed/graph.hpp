#ifndef THEMBED_GRAPH_HPP
#define THEMBED_GRAPH_HPP

#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "thembed/types.hpp"

namespace thembed {

// One directed half of an undirected temporal edge, stored in the adjacency
// of its source endpoint. Lists are kept sorted by timestamp.
struct AdjEntry {
  NodeIndex neighbor;
  TypeIndex neighbor_type;
  Timestamp time;
};

struct TemporalEdge {
  NodeIndex src;
  NodeIndex dst;
  Timestamp time;
  TypeIndex edge_type = kNoEdgeType;
};

struct LoadOptions {
  bool directed = false;     // reserved; walk constraints assume undirected
  double time_scale = 0.0;   // >0: accept fractional timestamps, scale+round
};

// Typed, timestamped multigraph indexed for the walk constraints' queries:
// "neighbors of v at/after t", "neighbors of v exactly at t", and the
// distinct incident timestamps after t. Immutable after load except through
// append_edges, which requires exclusive ownership.
class TemporalHIN {
 public:
  TemporalHIN() = default;

  // --- construction ---
  NodeIndex ensure_node(std::string_view id, std::string_view type_name);
  TypeIndex ensure_edge_type(std::string_view name);
  void add_edge(NodeIndex src, NodeIndex dst, Timestamp t,
                TypeIndex edge_type = kNoEdgeType);
  void finalize();  // sorts adjacency, builds the per-node timestamp runs

  // Append-only stream extension: every timestamp must be >= max_time().
  void append_edges(std::span<const TemporalEdge> batch);

  static TemporalHIN load_edge_stream(const std::string& path,
                                      const LoadOptions& opts = {});

  // --- queries (valid after finalize) ---
  std::span<const AdjEntry> adjacency(NodeIndex v) const;
  std::span<const AdjEntry> neighbors_at_or_after(NodeIndex v, Timestamp t) const;
  std::span<const AdjEntry> neighbors_exactly_at(NodeIndex v, Timestamp t) const;
  std::span<const Timestamp> distinct_timestamps_after(NodeIndex v, Timestamp t) const;
  bool has_incident_at(NodeIndex v, Timestamp t) const;

  NodeIndex node_count() const { return static_cast<NodeIndex>(ids_.size()); }
  std::size_t edge_count() const { return edges_.size(); }
  TypeIndex type_count() const { return static_cast<TypeIndex>(type_names_.size()); }
  TypeIndex edge_type_count() const {
    return static_cast<TypeIndex>(edge_type_names_.size());
  }
  std::size_t distinct_timestamp_count() const { return all_timestamps_.size(); }
  Timestamp min_time() const { return min_time_; }
  Timestamp max_time() const { return max_time_; }

  const std::string& node_id(NodeIndex v) const { return ids_[v]; }
  TypeIndex node_type(NodeIndex v) const { return node_types_[v]; }
  const std::string& type_name(TypeIndex l) const { return type_names_[l]; }
  const std::string& edge_type_name(TypeIndex l) const { return edge_type_names_[l]; }
  NodeIndex find_node(std::string_view id) const;  // -1 if absent
  const std::vector<TemporalEdge>& edges() const { return edges_; }
  bool finalized() const { return finalized_; }

  // New graph over the same node universe with exactly the given edges.
  TemporalHIN with_edges(std::span<const TemporalEdge> subset) const;

  // --- persistence: binary cache plus <path>.nodes.tsv id mapping ---
  // metadata is an opaque string (seed/config provenance) carried verbatim
  void save(const std::string& path, const std::string& metadata = {}) const;
  static TemporalHIN load(const std::string& path);
  const std::string& metadata() const { return metadata_; }

 private:
  std::size_t run_of(NodeIndex v, Timestamp t) const;  // index into run arrays

  std::vector<std::string> ids_;
  std::vector<TypeIndex> node_types_;
  std::vector<std::string> type_names_;
  std::vector<std::string> edge_type_names_;
  std::unordered_map<std::string, NodeIndex> id_to_index_;
  std::unordered_map<std::string, TypeIndex> type_to_index_;
  std::unordered_map<std::string, TypeIndex> edge_type_to_index_;

  std::vector<TemporalEdge> edges_;
  std::vector<std::vector<AdjEntry>> adjacency_;
  // per node: distinct incident timestamps ascending, and the offset of each
  // run inside the adjacency list (one trailing sentinel offset)
  std::vector<std::vector<Timestamp>> run_times_;
  std::vector<std::vector<std::uint32_t>> run_starts_;

  std::set<Timestamp> all_timestamps_;
  std::string metadata_;
  Timestamp min_time_ = 0;
  Timestamp max_time_ = 0;
  bool directed_ = false;
  bool finalized_ = false;
};

}  // namespace thembed

#endif
