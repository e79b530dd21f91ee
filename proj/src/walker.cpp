#include "thembed/walker.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

namespace thembed {

namespace {

double pow_int(double base, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

// Uniform draw over the entries of `pool` whose type matches (or differs
// from) the current type; two passes, no allocation.
const AdjEntry* pick_by_type(std::span<const AdjEntry> pool, TypeIndex type,
                             bool same, Rng& rng) {
  std::size_t count = 0;
  for (const AdjEntry& e : pool)
    if ((e.neighbor_type == type) == same) ++count;
  if (count == 0) return nullptr;
  std::size_t k = rng.index(count);
  for (const AdjEntry& e : pool)
    if ((e.neighbor_type == type) == same && k-- == 0) return &e;
  return nullptr;
}

std::size_t count_by_type(std::span<const AdjEntry> pool, TypeIndex type, bool same) {
  std::size_t count = 0;
  for (const AdjEntry& e : pool)
    if ((e.neighbor_type == type) == same) ++count;
  return count;
}

}  // namespace

TimeDecision timestamp_decision(const TemporalHIN& g, const WalkState& s,
                                double beta, Rng& rng) {
  const auto future = g.neighbors_at_or_after(s.current, s.time);
  if (future.empty()) return {TimeDecision::Stop, 0};
  const bool can_stay = g.has_incident_at(s.current, s.time);
  const auto later = g.distinct_timestamps_after(s.current, s.time);
  if (!can_stay) {
    // no edge exactly at the current time; the hop must advance
    return {TimeDecision::Advance, later[rng.index(later.size())]};
  }
  if (later.empty()) return {TimeDecision::Stay, s.time};
  if (rng.bernoulli(pow_int(beta, s.n))) return {TimeDecision::Stay, s.time};
  return {TimeDecision::Advance, later[rng.index(later.size())]};
}

TimeDecision timestamp_decision_reverse(const TemporalHIN& g, const WalkState& s,
                                        double beta, Rng& rng) {
  const auto all = g.adjacency(s.current);
  // past = entries with time <= s.time; adjacency is time-sorted so these
  // form a prefix, but we only need existence and the distinct earlier times
  const bool can_stay = g.has_incident_at(s.current, s.time);
  // distinct strictly-earlier timestamps
  std::size_t n_earlier = 0;
  Timestamp last = 0;
  bool have_last = false;
  for (const AdjEntry& e : all) {
    if (e.time >= s.time) break;
    if (!have_last || e.time != last) {
      ++n_earlier;
      last = e.time;
      have_last = true;
    }
  }
  if (!can_stay && n_earlier == 0) return {TimeDecision::Stop, 0};
  const bool stay = can_stay && (n_earlier == 0 || rng.bernoulli(pow_int(beta, s.n)));
  if (stay) return {TimeDecision::Stay, s.time};
  std::size_t k = rng.index(n_earlier);
  have_last = false;
  for (const AdjEntry& e : all) {
    if (e.time >= s.time) break;
    if (!have_last || e.time != last) {
      last = e.time;
      have_last = true;
      if (k-- == 0) return {TimeDecision::Advance, e.time};
    }
  }
  return {TimeDecision::Stop, 0};  // unreachable
}

TypeDecision type_decision(const TemporalHIN& g, const WalkState& s,
                           Timestamp chosen_time, double alpha, Rng& rng) {
  const auto pool = g.neighbors_exactly_at(s.current, chosen_time);
  if (pool.empty())
    throw std::logic_error("type_decision: no neighbors at the chosen timestamp");
  const std::size_t same = count_by_type(pool, s.type, true);
  if (same == 0) return TypeDecision::OtherType;
  if (same == pool.size()) return TypeDecision::SameType;
  return rng.bernoulli(pow_int(alpha, s.m)) ? TypeDecision::SameType
                                            : TypeDecision::OtherType;
}

namespace {

void advance_state(WalkState& s, const AdjEntry& e, Timestamp hop_time) {
  s.n = hop_time == s.time ? s.n + 1 : 1;
  s.m = e.neighbor_type == s.type ? s.m + 1 : 1;
  s.current = e.neighbor;
  s.time = hop_time;
  s.type = e.neighbor_type;
}

template <typename TimeDecider>
std::optional<Hop> step_impl(const TemporalHIN& g, WalkState& s,
                             const WalkConfig& cfg, Rng& rng,
                             TimeDecider&& decide_time) {
  const AdjEntry* chosen = nullptr;
  Timestamp hop_time = 0;

  if (!cfg.temporal_constraint) {
    // ablation: every adjacency entry is eligible regardless of timestamp
    const auto pool = g.adjacency(s.current);
    if (pool.empty()) return std::nullopt;
    if (cfg.heterogeneous_constraint) {
      const std::size_t same = count_by_type(pool, s.type, true);
      bool pick_same;
      if (same == 0) pick_same = false;
      else if (same == pool.size()) pick_same = true;
      else pick_same = rng.bernoulli(pow_int(cfg.alpha, s.m));
      chosen = pick_by_type(pool, s.type, pick_same, rng);
    } else {
      chosen = &pool[rng.index(pool.size())];
    }
    hop_time = chosen->time;
  } else {
    const TimeDecision td = decide_time(g, s, cfg.beta, rng);
    if (td.kind == TimeDecision::Stop) return std::nullopt;
    hop_time = td.time;
    const auto pool = g.neighbors_exactly_at(s.current, hop_time);
    assert(!pool.empty());
    if (cfg.heterogeneous_constraint) {
      const std::size_t same = count_by_type(pool, s.type, true);
      bool pick_same;
      if (same == 0) pick_same = false;
      else if (same == pool.size()) pick_same = true;
      else pick_same = rng.bernoulli(pow_int(cfg.alpha, s.m));
      chosen = pick_by_type(pool, s.type, pick_same, rng);
    } else {
      chosen = &pool[rng.index(pool.size())];
    }
  }
  advance_state(s, *chosen, hop_time);
  return Hop{s.current, hop_time};
}

}  // namespace

std::optional<Hop> step(const TemporalHIN& g, WalkState& s, const WalkConfig& cfg,
                        Rng& rng) {
  return step_impl(g, s, cfg, rng,
                   [](const TemporalHIN& gg, const WalkState& ss, double beta,
                      Rng& r) { return timestamp_decision(gg, ss, beta, r); });
}

std::optional<Hop> step_reverse(const TemporalHIN& g, WalkState& s,
                                const WalkConfig& cfg, Rng& rng) {
  return step_impl(g, s, cfg, rng,
                   [](const TemporalHIN& gg, const WalkState& ss, double beta,
                      Rng& r) { return timestamp_decision_reverse(gg, ss, beta, r); });
}

namespace {

void check_config(const WalkConfig& cfg) {
  if (cfg.alpha < 0.0 || cfg.alpha > 1.0 || cfg.beta < 0.0 || cfg.beta > 1.0)
    throw std::invalid_argument("walk config: alpha and beta must lie in [0, 1]");
  if (cfg.walks_per_node < 1 || cfg.max_walk_length < 2)
    throw std::invalid_argument("walk config: walks_per_node >= 1 and max_walk_length >= 2 required");
}

Walk start_walk(const TemporalHIN& g, NodeIndex v, const WalkConfig& cfg, Rng& rng,
                std::uint32_t epoch) {
  Walk w;
  const auto adj = g.adjacency(v);
  if (adj.empty()) return w;  // isolated node contributes nothing
  const AdjEntry& first = adj[rng.index(adj.size())];
  w.nodes = {v, first.neighbor};
  w.times = {first.time};
  w.origin = v;
  w.epoch = epoch;
  WalkState s{first.neighbor, first.time, first.neighbor_type, 1, 1};
  while (static_cast<int>(w.nodes.size()) < cfg.max_walk_length) {
    const auto hop = step(g, s, cfg, rng);
    if (!hop) break;
    w.nodes.push_back(hop->node);
    w.times.push_back(hop->time);
  }
  return w;
}

}  // namespace

WalkCorpus generate_corpus(const TemporalHIN& g, const WalkConfig& cfg) {
  check_config(cfg);
  const NodeIndex n = g.node_count();
  std::vector<std::vector<Walk>> per_node(static_cast<std::size_t>(n));
  const int threads = std::max(1, cfg.threads);

  const auto worker = [&](NodeIndex begin, NodeIndex end) {
    for (NodeIndex v = begin; v < end; ++v) {
      if (g.adjacency(v).empty()) continue;
      auto& slot = per_node[static_cast<std::size_t>(v)];
      slot.reserve(static_cast<std::size_t>(cfg.walks_per_node));
      for (int k = 0; k < cfg.walks_per_node; ++k) {
        // per-(node,walk) streams keep output independent of the partition
        Rng rng(derive_seed(cfg.seed, "walker", static_cast<std::uint64_t>(v),
                            static_cast<std::uint64_t>(k)));
        Walk w = start_walk(g, v, cfg, rng, 0);
        if (w.nodes.size() >= 2) slot.push_back(std::move(w));
      }
    }
  };

  if (threads == 1 || n < 2 * threads) {
    worker(0, n);
  } else {
    std::vector<std::thread> pool;
    const NodeIndex chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const NodeIndex b = std::min<NodeIndex>(n, t * chunk);
      const NodeIndex e = std::min<NodeIndex>(n, b + chunk);
      if (b < e) pool.emplace_back(worker, b, e);
    }
    for (auto& th : pool) th.join();
  }

  WalkCorpus corpus;
  for (auto& slot : per_node)
    for (auto& w : slot) corpus.walks.push_back(std::move(w));
  return corpus;
}

namespace {

// Recover the staying counters from a stored walk tail: n spans the maximal
// constant suffix of hop times, m the maximal same-type node suffix (the
// start node is excluded; the first hop initialized both counters to 1).
void derive_tail_counters(const TemporalHIN& g, const Walk& w, int& n, int& m) {
  const std::size_t hops = w.times.size();
  n = 1;
  for (std::size_t i = hops - 1; i > 0; --i) {
    if (w.times[i - 1] == w.times[hops - 1]) ++n;
    else break;
  }
  const TypeIndex tail_type = g.node_type(w.nodes.back());
  m = 1;
  for (std::size_t i = w.nodes.size() - 1; i > 1; --i) {
    if (g.node_type(w.nodes[i - 1]) == tail_type) ++m;
    else break;
  }
}

}  // namespace

UpdateSummary update_corpus(TemporalHIN& g, WalkCorpus& corpus,
                            std::span<const TemporalEdge> new_edges,
                            const WalkConfig& cfg, const UpdateConfig& ucfg) {
  check_config(cfg);
  UpdateSummary summary;
  if (new_edges.empty()) {
    // rule 1 applies to every walk; graph and corpus stay untouched
    summary.preserved = corpus.walks.size();
    return summary;
  }

  g.append_edges(new_edges);  // validates the append-only precondition
  const std::uint32_t epoch = ++corpus.update_epoch;

  std::vector<char> involved(static_cast<std::size_t>(g.node_count()), 0);
  for (const TemporalEdge& e : new_edges) {
    involved[static_cast<std::size_t>(e.src)] = 1;
    involved[static_cast<std::size_t>(e.dst)] = 1;
  }

  const Timestamp span = g.max_time() - g.min_time();
  const Timestamp horizon =
      ucfg.horizon >= 0
          ? ucfg.horizon
          : static_cast<Timestamp>(std::llround(ucfg.horizon_fraction *
                                                static_cast<double>(span)));
  const Timestamp threshold = g.max_time() - horizon;

  std::vector<Walk> next;
  next.reserve(corpus.walks.size());
  for (std::size_t wi = 0; wi < corpus.walks.size(); ++wi) {
    Walk& w = corpus.walks[wi];
    const bool touched = std::any_of(w.nodes.begin(), w.nodes.end(), [&](NodeIndex v) {
      return involved[static_cast<std::size_t>(v)] != 0;
    });
    if (!touched) {
      ++summary.preserved;
      next.push_back(std::move(w));
      continue;
    }
    // rule 2: drop the stale prefix (hops strictly older than the horizon)
    std::size_t first_valid = 0;
    while (first_valid < w.times.size() && w.times[first_valid] < threshold)
      ++first_valid;
    if (first_valid == w.times.size()) {
      ++summary.removed;  // nothing valid survives
      continue;
    }
    if (first_valid > 0) {
      w.nodes.erase(w.nodes.begin(), w.nodes.begin() + static_cast<std::ptrdiff_t>(first_valid));
      w.times.erase(w.times.begin(), w.times.begin() + static_cast<std::ptrdiff_t>(first_valid));
      ++summary.truncated;
    }
    // rule 3: continue walks whose last node is involved
    if (involved[static_cast<std::size_t>(w.nodes.back())] != 0 &&
        static_cast<int>(w.nodes.size()) < cfg.max_walk_length) {
      WalkState s{w.nodes.back(), w.times.back(), g.node_type(w.nodes.back()), 1, 1};
      derive_tail_counters(g, w, s.n, s.m);
      Rng rng(derive_seed(cfg.seed, "continue", static_cast<std::uint64_t>(wi),
                          static_cast<std::uint64_t>(epoch)));
      bool extended = false;
      while (static_cast<int>(w.nodes.size()) < cfg.max_walk_length) {
        const auto hop = step(g, s, cfg, rng);
        if (!hop) break;
        w.nodes.push_back(hop->node);
        w.times.push_back(hop->time);
        extended = true;
      }
      if (extended) ++summary.continued;
    }
    next.push_back(std::move(w));
  }

  // rule 4: reversed walks from the new timestamps, one batch per involved
  // node, grown backward then flipped so stored times are non-decreasing
  const int reversed_count =
      ucfg.reversed_per_node >= 0 ? ucfg.reversed_per_node : cfg.walks_per_node;
  for (NodeIndex v = 0; v < g.node_count(); ++v) {
    if (!involved[static_cast<std::size_t>(v)]) continue;
    // the new edges incident to v seed the backward growth
    std::vector<const TemporalEdge*> seeds;
    for (const TemporalEdge& e : new_edges)
      if (e.src == v || e.dst == v) seeds.push_back(&e);
    for (int k = 0; k < reversed_count; ++k) {
      Rng rng(derive_seed(cfg.seed, "reverse",
                          static_cast<std::uint64_t>(v) * 1000003ull +
                              static_cast<std::uint64_t>(k),
                          epoch));
      const TemporalEdge& e = *seeds[rng.index(seeds.size())];
      if (e.time < threshold) continue;  // seed already outside the horizon
      const NodeIndex u = e.src == v ? e.dst : e.src;
      Walk w;
      w.nodes = {v, u};
      w.times = {e.time};
      w.origin = v;
      w.epoch = epoch;
      WalkState s{u, e.time, g.node_type(u), 1, 1};
      while (static_cast<int>(w.nodes.size()) < cfg.max_walk_length) {
        const auto hop = step_reverse(g, s, cfg, rng);
        if (!hop) break;
        if (hop->time < threshold) break;  // stay inside the validity horizon
        w.nodes.push_back(hop->node);
        w.times.push_back(hop->time);
      }
      std::reverse(w.nodes.begin(), w.nodes.end());
      std::reverse(w.times.begin(), w.times.end());
      next.push_back(std::move(w));
      ++summary.reversed_added;
    }
  }

  corpus.walks = std::move(next);
  return summary;
}

void save_corpus(const WalkCorpus& corpus, const TemporalHIN& g,
                 const std::string& path, bool with_times,
                 const std::string& header_comment) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus: " + path);
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  for (const Walk& w : corpus.walks) {
    for (std::size_t i = 0; i < w.nodes.size(); ++i) {
      if (i) out << ' ';
      out << g.node_id(w.nodes[i]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
  if (with_times) {
    std::ofstream ts(path + ".times");
    if (!ts) throw std::runtime_error("cannot write sidecar: " + path + ".times");
    if (!header_comment.empty()) ts << "# " << header_comment << '\n';
    for (const Walk& w : corpus.walks) {
      for (std::size_t i = 0; i < w.times.size(); ++i) {
        if (i) ts << ' ';
        ts << w.times[i];
      }
      ts << '\n';
    }
  }
}

WalkCorpus load_corpus(const std::string& path, const TemporalHIN& g,
                       bool with_times) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open corpus: " + path);
  WalkCorpus corpus;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    Walk w;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
      const NodeIndex v = g.find_node(tok);
      if (v < 0) throw std::runtime_error("corpus references unknown node: " + tok);
      w.nodes.push_back(v);
    }
    if (w.nodes.size() < 2)
      throw std::runtime_error("malformed corpus line (fewer than 2 nodes): " + path);
    w.origin = w.nodes.front();
    corpus.walks.push_back(std::move(w));
  }
  if (with_times) {
    std::ifstream ts(path + ".times");
    if (!ts) throw std::runtime_error("cannot open sidecar: " + path + ".times");
    std::size_t wi = 0;
    while (std::getline(ts, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (wi >= corpus.walks.size())
        throw std::runtime_error("sidecar has more lines than corpus: " + path);
      Walk& w = corpus.walks[wi++];
      std::istringstream ss(line);
      Timestamp t;
      while (ss >> t) w.times.push_back(t);
      if (w.times.size() + 1 != w.nodes.size())
        throw std::runtime_error("sidecar hop count mismatch on walk " +
                                 std::to_string(wi));
    }
    if (wi != corpus.walks.size())
      throw std::runtime_error("sidecar has fewer lines than corpus: " + path);
  }
  return corpus;
}

std::string validate_corpus(const WalkCorpus& corpus, const TemporalHIN& g,
                            const WalkConfig& cfg) {
  for (std::size_t wi = 0; wi < corpus.walks.size(); ++wi) {
    const Walk& w = corpus.walks[wi];
    if (w.nodes.size() < 2 || static_cast<int>(w.nodes.size()) > cfg.max_walk_length)
      return "walk " + std::to_string(wi) + ": length out of bounds";
    if (w.times.size() + 1 != w.nodes.size())
      return "walk " + std::to_string(wi) + ": time/node count mismatch";
    for (std::size_t i = 0; i + 1 < w.nodes.size(); ++i) {
      if (cfg.temporal_constraint && i + 1 < w.times.size() &&
          w.times[i] > w.times[i + 1])
        return "walk " + std::to_string(wi) + ": decreasing hop times";
      const auto pool = g.neighbors_exactly_at(w.nodes[i], w.times[i]);
      const bool found = std::any_of(pool.begin(), pool.end(), [&](const AdjEntry& e) {
        return e.neighbor == w.nodes[i + 1];
      });
      if (!found)
        return "walk " + std::to_string(wi) + ": hop " + std::to_string(i) +
               " is not an edge at its recorded time";
    }
  }
  return {};
}

}  // namespace thembed
