#pragma once

#include <cstdint>
#include <vector>

namespace retex {

// Exact minimizer for two-label energies of the form
//   E(L) = sum_p data(p, L_p) + sum_{(p,q)} w_pq * [L_p != L_q],  w_pq >= 0,
// solved as an s-t min cut (Dinic). The Potts weights make the energy
// submodular, so the returned labeling attains the global minimum.
class BinaryMrf {
public:
    explicit BinaryMrf(int node_count);

    void set_data_cost(int node, double cost_label0, double cost_label1);
    void add_pairwise(int a, int b, double w);

    // Returns one global minimizer. Ties between minimizers resolve
    // deterministically (source-side reachability of the computed flow).
    std::vector<uint8_t> solve() const;

    double energy(const std::vector<uint8_t>& labels) const;

private:
    int n_;
    std::vector<double> cost0_, cost1_;
    struct PairTerm {
        int a, b;
        double w;
    };
    std::vector<PairTerm> pairs_;
};

// Plain max-flow network used by BinaryMrf; exposed for reuse/testing.
class FlowNetwork {
public:
    FlowNetwork(int node_count, int source, int sink);

    // Adds a directed arc with the given capacity plus its zero-capacity
    // reverse; returns nothing, the graph is consumed by max_flow().
    void add_arc(int from, int to, double cap);

    double max_flow();

    // Valid after max_flow(): true when the node is on the source side of
    // the minimum cut (reachable in the residual graph).
    bool source_side(int node) const;

private:
    bool bfs_levels();
    double dfs_push(int v, double limit);

    int n_, source_, sink_;
    std::vector<int> head_, next_, to_;
    std::vector<double> cap_;
    std::vector<int> level_, iter_;
};

} // namespace retex
