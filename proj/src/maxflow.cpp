#include "retex/maxflow.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include "retex/errors.hpp"

namespace retex {

FlowNetwork::FlowNetwork(int node_count, int source, int sink)
    : n_(node_count), source_(source), sink_(sink), head_(node_count, -1) {}

void FlowNetwork::add_arc(int from, int to, double cap) {
    require(from >= 0 && from < n_ && to >= 0 && to < n_, "add_arc: node out of range");
    to_.push_back(to);
    cap_.push_back(cap);
    next_.push_back(head_[from]);
    head_[from] = static_cast<int>(to_.size()) - 1;
    to_.push_back(from);
    cap_.push_back(0.0);
    next_.push_back(head_[to]);
    head_[to] = static_cast<int>(to_.size()) - 1;
}

bool FlowNetwork::bfs_levels() {
    level_.assign(n_, -1);
    std::deque<int> queue;
    level_[source_] = 0;
    queue.push_back(source_);
    while (!queue.empty()) {
        int v = queue.front();
        queue.pop_front();
        for (int e = head_[v]; e != -1; e = next_[e]) {
            if (cap_[e] > 0.0 && level_[to_[e]] < 0) {
                level_[to_[e]] = level_[v] + 1;
                queue.push_back(to_[e]);
            }
        }
    }
    return level_[sink_] >= 0;
}

double FlowNetwork::dfs_push(int v, double limit) {
    if (v == sink_) return limit;
    double pushed = 0.0;
    for (int& e = iter_[v]; e != -1; e = next_[e]) {
        int u = to_[e];
        if (cap_[e] > 0.0 && level_[u] == level_[v] + 1) {
            double got = dfs_push(u, std::min(limit - pushed, cap_[e]));
            if (got > 0.0) {
                cap_[e] -= got;
                cap_[e ^ 1] += got;
                pushed += got;
                if (pushed >= limit) return pushed;
            } else {
                level_[u] = -1; // dead end for this phase
            }
        }
    }
    return pushed;
}

double FlowNetwork::max_flow() {
    double flow = 0.0;
    const double inf = std::numeric_limits<double>::infinity();
    while (bfs_levels()) {
        iter_ = head_;
        double got = dfs_push(source_, inf);
        if (got <= 0.0) break;
        flow += got;
    }
    // Final residual reachability defines the cut sides.
    bfs_levels();
    return flow;
}

bool FlowNetwork::source_side(int node) const { return level_[node] >= 0; }

BinaryMrf::BinaryMrf(int node_count)
    : n_(node_count), cost0_(node_count, 0.0), cost1_(node_count, 0.0) {}

void BinaryMrf::set_data_cost(int node, double cost_label0, double cost_label1) {
    cost0_[node] = cost_label0;
    cost1_[node] = cost_label1;
}

void BinaryMrf::add_pairwise(int a, int b, double w) {
    require(w >= 0.0, "add_pairwise: Potts weight must be nonnegative");
    pairs_.push_back({a, b, w});
}

std::vector<uint8_t> BinaryMrf::solve() const {
    // label 0 <=> source side. Cutting p->sink pays cost0 (p kept with the
    // source), cutting source->p pays cost1.
    const int source = n_;
    const int sink = n_ + 1;
    FlowNetwork net(n_ + 2, source, sink);
    for (int p = 0; p < n_; ++p) {
        // Shifting both data costs by their min leaves the argmin unchanged
        // and keeps all capacities nonnegative.
        const double shift = std::min(cost0_[p], cost1_[p]);
        const double c0 = cost0_[p] - shift;
        const double c1 = cost1_[p] - shift;
        if (c1 > 0.0) net.add_arc(source, p, c1);
        if (c0 > 0.0) net.add_arc(p, sink, c0);
    }
    for (const PairTerm& t : pairs_) {
        if (t.w > 0.0) {
            net.add_arc(t.a, t.b, t.w);
            net.add_arc(t.b, t.a, t.w);
        }
    }
    net.max_flow();
    std::vector<uint8_t> labels(n_, 0);
    for (int p = 0; p < n_; ++p) labels[p] = net.source_side(p) ? 0 : 1;
    return labels;
}

double BinaryMrf::energy(const std::vector<uint8_t>& labels) const {
    require(static_cast<int>(labels.size()) == n_, "energy: label count mismatch");
    double e = 0.0;
    for (int p = 0; p < n_; ++p) e += labels[p] ? cost1_[p] : cost0_[p];
    for (const PairTerm& t : pairs_)
        if (labels[t.a] != labels[t.b]) e += t.w;
    return e;
}

} // namespace retex
