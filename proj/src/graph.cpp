#include "thembed/graph.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace thembed {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

Timestamp parse_timestamp(std::string_view field, double time_scale, bool& ok) {
  std::string buf(field);
  char* end = nullptr;
  errno = 0;
  if (time_scale > 0.0) {
    const double v = std::strtod(buf.c_str(), &end);
    ok = end == buf.c_str() + buf.size() && errno == 0;
    return static_cast<Timestamp>(std::llround(v * time_scale));
  }
  const long long v = std::strtoll(buf.c_str(), &end, 10);
  ok = end == buf.c_str() + buf.size() && errno == 0;
  return v;
}

}  // namespace

NodeIndex TemporalHIN::ensure_node(std::string_view id, std::string_view type_name) {
  TypeIndex type;
  if (auto it = type_to_index_.find(std::string(type_name)); it != type_to_index_.end()) {
    type = it->second;
  } else {
    type = static_cast<TypeIndex>(type_names_.size());
    type_names_.emplace_back(type_name);
    type_to_index_.emplace(type_name, type);
  }
  if (auto it = id_to_index_.find(std::string(id)); it != id_to_index_.end()) {
    const NodeIndex v = it->second;
    if (node_types_[v] != type)
      throw std::runtime_error("node \"" + std::string(id) + "\" redeclared with type " +
                               std::string(type_name) + " != " +
                               type_names_[node_types_[v]]);
    return v;
  }
  const NodeIndex v = static_cast<NodeIndex>(ids_.size());
  ids_.emplace_back(id);
  node_types_.push_back(type);
  id_to_index_.emplace(id, v);
  adjacency_.emplace_back();
  run_times_.emplace_back();
  run_starts_.push_back({0});  // sentinel; finalize() rebuilds, append relies on it
  return v;
}

// Edge types are stored for round-tripping; the walk constraints never
// consult them.
TypeIndex TemporalHIN::ensure_edge_type(std::string_view name) {
  const std::string key(name);
  if (auto it = edge_type_to_index_.find(key); it != edge_type_to_index_.end())
    return it->second;
  const TypeIndex t = static_cast<TypeIndex>(edge_type_names_.size());
  edge_type_names_.push_back(key);
  edge_type_to_index_.emplace(key, t);
  return t;
}

void TemporalHIN::add_edge(NodeIndex src, NodeIndex dst, Timestamp t, TypeIndex edge_type) {
  if (src < 0 || src >= node_count() || dst < 0 || dst >= node_count())
    throw std::out_of_range("add_edge: endpoint not ingested");
  if (edges_.empty()) {
    min_time_ = max_time_ = t;
  } else {
    min_time_ = std::min(min_time_, t);
    max_time_ = std::max(max_time_, t);
  }
  edges_.push_back({src, dst, t, edge_type});
  all_timestamps_.insert(t);
  adjacency_[src].push_back({dst, node_types_[dst], t});
  if (!directed_) adjacency_[dst].push_back({src, node_types_[src], t});
  finalized_ = false;
}

void TemporalHIN::finalize() {
  for (NodeIndex v = 0; v < node_count(); ++v) {
    auto& adj = adjacency_[v];
    std::stable_sort(adj.begin(), adj.end(),
                     [](const AdjEntry& a, const AdjEntry& b) { return a.time < b.time; });
    auto& rt = run_times_[v];
    auto& rs = run_starts_[v];
    rt.clear();
    rs.clear();
    for (std::uint32_t i = 0; i < adj.size(); ++i) {
      if (rt.empty() || adj[i].time != rt.back()) {
        rt.push_back(adj[i].time);
        rs.push_back(i);
      }
    }
    rs.push_back(static_cast<std::uint32_t>(adj.size()));
  }
  finalized_ = true;
}

void TemporalHIN::append_edges(std::span<const TemporalEdge> batch) {
  if (!finalized_) throw std::logic_error("append_edges: graph not finalized");
  const Timestamp floor = edges_.empty() ? std::numeric_limits<Timestamp>::min() : max_time_;
  for (const TemporalEdge& e : batch) {
    if (e.time < floor)
      throw std::runtime_error("append_edges: out-of-order timestamp " +
                               std::to_string(e.time) + " < " + std::to_string(floor));
    if (e.src < 0 || e.src >= node_count() || e.dst < 0 || e.dst >= node_count())
      throw std::out_of_range("append_edges: endpoint not ingested");
  }
  for (const TemporalEdge& e : batch) {
    // timestamps are >= every stored one, so plain appends keep lists sorted
    edges_.push_back(e);
    all_timestamps_.insert(e.time);
    if (edges_.size() == 1) min_time_ = e.time;
    max_time_ = std::max(max_time_, e.time);
    const auto push = [&](NodeIndex from, NodeIndex to) {
      auto& adj = adjacency_[from];
      auto& rt = run_times_[from];
      auto& rs = run_starts_[from];
      adj.push_back({to, node_types_[to], e.time});
      if (rt.empty() || rt.back() != e.time) {
        // the old sentinel becomes the new run's start offset
        rt.push_back(e.time);
        rs.push_back(static_cast<std::uint32_t>(adj.size()));
      } else {
        rs.back() = static_cast<std::uint32_t>(adj.size());
      }
    };
    push(e.src, e.dst);
    if (!directed_) push(e.dst, e.src);
  }
}

TemporalHIN TemporalHIN::load_edge_stream(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge file: " + path);
  TemporalHIN g;
  g.directed_ = opts.directed;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_fields(line);
    if (fields.size() < 5 || fields.size() > 6)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": expected 5 or 6 fields, got " +
                               std::to_string(fields.size()));
    bool ok = false;
    const Timestamp t = parse_timestamp(fields[4], opts.time_scale, ok);
    if (!ok)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": bad timestamp \"" + std::string(fields[4]) + "\"" +
                               (opts.time_scale > 0.0
                                    ? ""
                                    : " (integers required; set a time scale for fractional input)"));
    NodeIndex src, dst;
    try {
      src = g.ensure_node(fields[0], fields[2]);
      dst = g.ensure_node(fields[1], fields[3]);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    const TypeIndex edge_type =
        fields.size() == 6 ? g.ensure_edge_type(fields[5]) : kNoEdgeType;
    g.add_edge(src, dst, t, edge_type);
  }
  if (g.edges_.empty()) throw std::runtime_error(path + ": no edges (empty edge file)");
  g.finalize();
  return g;
}

std::span<const AdjEntry> TemporalHIN::adjacency(NodeIndex v) const {
  return {adjacency_[v].data(), adjacency_[v].size()};
}

std::size_t TemporalHIN::run_of(NodeIndex v, Timestamp t) const {
  const auto& rt = run_times_[v];
  const auto it = std::lower_bound(rt.begin(), rt.end(), t);
  if (it == rt.end() || *it != t) return rt.size();  // not found
  return static_cast<std::size_t>(it - rt.begin());
}

std::span<const AdjEntry> TemporalHIN::neighbors_at_or_after(NodeIndex v, Timestamp t) const {
  const auto& rt = run_times_[v];
  const auto it = std::lower_bound(rt.begin(), rt.end(), t);
  if (it == rt.end()) return {};
  const std::uint32_t start = run_starts_[v][static_cast<std::size_t>(it - rt.begin())];
  return {adjacency_[v].data() + start, adjacency_[v].size() - start};
}

std::span<const AdjEntry> TemporalHIN::neighbors_exactly_at(NodeIndex v, Timestamp t) const {
  const std::size_t r = run_of(v, t);
  if (r == run_times_[v].size()) return {};
  const std::uint32_t start = run_starts_[v][r];
  const std::uint32_t stop = run_starts_[v][r + 1];
  return {adjacency_[v].data() + start, static_cast<std::size_t>(stop - start)};
}

std::span<const Timestamp> TemporalHIN::distinct_timestamps_after(NodeIndex v, Timestamp t) const {
  const auto& rt = run_times_[v];
  const auto it = std::upper_bound(rt.begin(), rt.end(), t);
  return {rt.data() + (it - rt.begin()), static_cast<std::size_t>(rt.end() - it)};
}

bool TemporalHIN::has_incident_at(NodeIndex v, Timestamp t) const {
  return run_of(v, t) != run_times_[v].size();
}

NodeIndex TemporalHIN::find_node(std::string_view id) const {
  const auto it = id_to_index_.find(std::string(id));
  return it == id_to_index_.end() ? -1 : it->second;
}

TemporalHIN TemporalHIN::with_edges(std::span<const TemporalEdge> subset) const {
  TemporalHIN g;
  g.directed_ = directed_;
  g.ids_ = ids_;
  g.node_types_ = node_types_;
  g.type_names_ = type_names_;
  g.edge_type_names_ = edge_type_names_;
  g.id_to_index_ = id_to_index_;
  g.type_to_index_ = type_to_index_;
  g.edge_type_to_index_ = edge_type_to_index_;
  g.adjacency_.resize(ids_.size());
  g.run_times_.resize(ids_.size());
  g.run_starts_.resize(ids_.size());
  for (const TemporalEdge& e : subset) g.add_edge(e.src, e.dst, e.time, e.edge_type);
  g.finalize();
  return g;
}

namespace {

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t read_u64(std::ifstream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void write_str(std::ofstream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_str(std::ifstream& in) {
  std::string s(read_u64(in), '\0');
  in.read(s.data(), static_cast<std::streamsize>(s.size()));
  return s;
}

constexpr char kMagic[8] = {'T', 'H', 'I', 'N', 'G', 'R', '0', '2'};

}  // namespace

void TemporalHIN::save(const std::string& path, const std::string& metadata) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write index: " + path);
  out.write(kMagic, sizeof kMagic);
  write_str(out, metadata);
  write_u64(out, directed_ ? 1 : 0);
  write_u64(out, type_names_.size());
  for (const auto& t : type_names_) write_str(out, t);
  write_u64(out, edge_type_names_.size());
  for (const auto& t : edge_type_names_) write_str(out, t);
  write_u64(out, ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    write_str(out, ids_[i]);
    write_u64(out, static_cast<std::uint64_t>(node_types_[i]));
  }
  write_u64(out, edges_.size());
  for (const TemporalEdge& e : edges_) {
    write_u64(out, static_cast<std::uint64_t>(e.src));
    write_u64(out, static_cast<std::uint64_t>(e.dst));
    write_u64(out, static_cast<std::uint64_t>(e.time));
    write_u64(out, static_cast<std::uint64_t>(static_cast<std::int64_t>(e.edge_type)));
  }
  if (!out) throw std::runtime_error("write failed: " + path);

  std::ofstream map(path + ".nodes.tsv");
  if (!map) throw std::runtime_error("cannot write node map: " + path + ".nodes.tsv");
  for (std::size_t i = 0; i < ids_.size(); ++i)
    map << ids_[i] << '\t' << i << '\t' << type_names_[node_types_[i]] << '\n';
}

TemporalHIN TemporalHIN::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open index: " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw std::runtime_error("not a graph index file: " + path);
  TemporalHIN g;
  g.metadata_ = read_str(in);
  g.directed_ = read_u64(in) != 0;
  const std::uint64_t ntypes = read_u64(in);
  for (std::uint64_t i = 0; i < ntypes; ++i) {
    g.type_names_.push_back(read_str(in));
    g.type_to_index_.emplace(g.type_names_.back(), static_cast<TypeIndex>(i));
  }
  const std::uint64_t netypes = read_u64(in);
  for (std::uint64_t i = 0; i < netypes; ++i) {
    g.edge_type_names_.push_back(read_str(in));
    g.edge_type_to_index_.emplace(g.edge_type_names_.back(), static_cast<TypeIndex>(i));
  }
  const std::uint64_t nnodes = read_u64(in);
  for (std::uint64_t i = 0; i < nnodes; ++i) {
    g.ids_.push_back(read_str(in));
    g.node_types_.push_back(static_cast<TypeIndex>(read_u64(in)));
    g.id_to_index_.emplace(g.ids_.back(), static_cast<NodeIndex>(i));
    g.adjacency_.emplace_back();
    g.run_times_.emplace_back();
    g.run_starts_.emplace_back();
  }
  const std::uint64_t nedges = read_u64(in);
  for (std::uint64_t i = 0; i < nedges; ++i) {
    const auto src = static_cast<NodeIndex>(read_u64(in));
    const auto dst = static_cast<NodeIndex>(read_u64(in));
    const auto t = static_cast<Timestamp>(read_u64(in));
    const auto et = static_cast<TypeIndex>(static_cast<std::int64_t>(read_u64(in)));
    g.add_edge(src, dst, t, et);
  }
  if (!in) throw std::runtime_error("truncated index file: " + path);
  g.finalize();
  return g;
}

}  // namespace thembed
