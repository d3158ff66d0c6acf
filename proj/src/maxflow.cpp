#include "nms/maxflow.hpp"

#include <algorithm>
#include <limits>

#include "nms/errors.hpp"

namespace nms {

MaxFlow::MaxFlow(int nodes) : n_(nodes) {
    if (nodes < 2) throw ParameterError("max-flow graph needs at least two nodes");
}

void MaxFlow::add_edge(int u, int v, std::int64_t cap, std::int64_t rev_cap) {
    if (packed_) throw UsageError("edges cannot be added after solve()");
    if (cap < 0 || rev_cap < 0) throw NumericError("negative capacity");
    if (cap == 0 && rev_cap == 0) return;
    eu_.push_back(u);
    ev_.push_back(v);
    ec_.push_back(cap);
    er_.push_back(rev_cap);
}

// CSR layout: arc 2k and its partner are placed in the adjacency of their tails.
void MaxFlow::pack() {
    std::vector<int> deg(n_ + 1, 0);
    for (std::size_t k = 0; k < eu_.size(); ++k) {
        ++deg[eu_[k]];
        ++deg[ev_[k]];
    }
    start_.assign(n_ + 1, 0);
    for (int i = 0; i < n_; ++i) start_[i + 1] = start_[i] + deg[i];
    std::vector<int> pos(start_.begin(), start_.end() - 1);
    arcs_.resize(start_[n_]);
    rev_.resize(start_[n_]);
    for (std::size_t k = 0; k < eu_.size(); ++k) {
        const int a = pos[eu_[k]]++, b = pos[ev_[k]]++;
        arcs_[a] = {ev_[k], ec_[k]};
        arcs_[b] = {eu_[k], er_[k]};
        rev_[a] = b;
        rev_[b] = a;
    }
    eu_.clear();
    ev_.clear();
    ec_.clear();
    er_.clear();
    eu_.shrink_to_fit();
    ev_.shrink_to_fit();
    ec_.shrink_to_fit();
    er_.shrink_to_fit();
    packed_ = true;
}

bool MaxFlow::bfs() {
    level_.assign(n_, -1);
    std::vector<int> q;
    q.reserve(n_);
    q.push_back(s_);
    level_[s_] = 0;
    for (std::size_t h = 0; h < q.size(); ++h) {
        const int u = q[h];
        for (int a = start_[u]; a < start_[u + 1]; ++a)
            if (arcs_[a].cap > 0 && level_[arcs_[a].to] < 0) {
                level_[arcs_[a].to] = level_[u] + 1;
                q.push_back(arcs_[a].to);
            }
    }
    return level_[t_] >= 0;
}

std::int64_t MaxFlow::dfs(int u, std::int64_t f) {
    if (u == t_) return f;
    for (int& a = it_[u]; a < start_[u + 1]; ++a) {
        Arc& e = arcs_[a];
        if (e.cap <= 0 || level_[e.to] != level_[u] + 1) continue;
        const std::int64_t d = dfs(e.to, std::min(f, e.cap));
        if (d > 0) {
            e.cap -= d;
            arcs_[rev_[a]].cap += d;
            return d;
        }
    }
    return 0;
}

std::int64_t MaxFlow::solve(int source, int sink) {
    if (!packed_) pack();
    s_ = source;
    t_ = sink;
    std::int64_t flow = 0;
    constexpr std::int64_t kBig = std::numeric_limits<std::int64_t>::max();
    while (bfs()) {
        it_.assign(start_.begin(), start_.end() - 1);
        while (const std::int64_t f = dfs(s_, kBig)) {
            if (flow > kBig - f) throw NumericError("max-flow value overflows int64");
            flow += f;
        }
    }
    return flow;
}

std::vector<std::uint8_t> MaxFlow::source_side() const {
    std::vector<std::uint8_t> seen(n_, 0);
    std::vector<int> q{s_};
    seen[s_] = 1;
    for (std::size_t h = 0; h < q.size(); ++h) {
        const int u = q[h];
        for (int a = start_[u]; a < start_[u + 1]; ++a)
            if (arcs_[a].cap > 0 && !seen[arcs_[a].to]) {
                seen[arcs_[a].to] = 1;
                q.push_back(arcs_[a].to);
            }
    }
    return seen;
}

} // namespace nms
