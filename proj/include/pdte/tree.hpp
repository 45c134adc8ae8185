#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pdte/errors.hpp"

namespace pdte {

enum class NodeKind : uint8_t { Decision, Leaf };

// One tree node, addressed by its BFS index. Decision nodes carry the
// threshold and attribute index; leaves carry the classification label.
// mdag is the precomputed dependency stack used by the DAG path aggregation
// (ancestor ids, in push order).
struct Node {
    int id = -1;
    NodeKind kind = NodeKind::Leaf;
    uint64_t thr = 0;
    int attr = -1;
    int parent = -1;
    int left = -1;
    int right = -1;
    uint64_t label = 0;
    std::vector<int> mdag;

    bool is_leaf() const { return kind == NodeKind::Leaf; }
};

using AttributeVector = std::vector<uint64_t>;

class TreeModel {
public:
    uint32_t bits = 0;        // mu, attribute bit length
    uint32_t attributes = 0;  // n
    uint64_t labels = 0;      // k, labels range over [0, k-1]
    std::vector<Node> nodes;  // indexed by BFS id, root at 0
    std::vector<std::vector<int>> levels;  // levels[i] = ids at depth i

    int depth() const { return static_cast<int>(levels.size()) - 1; }
    size_t total_count() const { return nodes.size(); }
    size_t decision_count() const;
    size_t leaf_count() const { return nodes.size() - decision_count(); }
    std::vector<int> leaf_ids() const;

    // Validates structural invariants and rebuilds levels. Throws ParseError
    // naming the offending node.
    void validate_and_index();
};

// Plaintext classification: iterated decisions [x_attr >= thr], 0 left /
// 1 right, per the model's node links. The test oracle for every encrypted
// evaluation path.
uint64_t classify_plain(const TreeModel& model, const AttributeVector& x);

// Canonical model text: header object plus one node object per line, fixed
// key order, so serialized bytes are stable and hashable.
std::string save_model(const TreeModel& model);
TreeModel load_model(const std::string& text);

// Complete tree of depth d: node v has children 2v+1, 2v+2; the 2^d leaves
// carry labels 0..2^d-1 left to right. Thresholds and attribute indices are
// drawn from rng.
TreeModel complete_tree(int depth, uint32_t bits, uint32_t attributes, std::mt19937_64& rng);

// Random tree with exactly `decision_nodes` decision nodes and exact depth
// `depth`; requires decision_nodes >= depth. Leaves are labeled 0..m in BFS
// order.
TreeModel random_tree(int depth, uint32_t decision_nodes, uint32_t bits, uint32_t attributes,
                      std::mt19937_64& rng);

// Fills every node's mdag dependency stack from the level structure. Pure
// plaintext precomputation; called by the model builders.
void build_multiplication_dag(TreeModel& model);

}  // namespace pdte
