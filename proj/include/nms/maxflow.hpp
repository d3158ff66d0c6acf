#pragma once

#include <cstdint>
#include <vector>

namespace nms {

/// Dinic max-flow on integer capacities. Edges are added before solving;
/// the arc arrays are packed once, so the graph is immutable after solve().
class MaxFlow {
public:
    explicit MaxFlow(int nodes);

    void add_edge(int u, int v, std::int64_t cap, std::int64_t rev_cap = 0);
    std::int64_t solve(int source, int sink);

    /// Nodes reachable from the source in the residual graph: the minimal
    /// source side among all minimum cuts.
    std::vector<std::uint8_t> source_side() const;

    int nodes() const { return n_; }

private:
    struct Arc {
        int to;
        std::int64_t cap;
    };
    bool bfs();
    std::int64_t dfs(int u, std::int64_t f);
    void pack();

    int n_, s_ = 0, t_ = 0;
    std::vector<int> eu_, ev_;
    std::vector<std::int64_t> ec_, er_;
    std::vector<int> start_, rev_, level_, it_;
    std::vector<Arc> arcs_;
    bool packed_ = false;
};

} // namespace nms
