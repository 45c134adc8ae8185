#include "pdte/tree.hpp"

#include <algorithm>
#include <deque>
#include <sstream>

#include "json.hpp"
#include "pdte/he.hpp"

namespace pdte {

size_t TreeModel::decision_count() const {
    size_t m = 0;
    for (const Node& v : nodes)
        if (!v.is_leaf()) ++m;
    return m;
}

std::vector<int> TreeModel::leaf_ids() const {
    std::vector<int> out;
    for (const Node& v : nodes)
        if (v.is_leaf()) out.push_back(v.id);
    return out;
}

void TreeModel::validate_and_index() {
    if (nodes.empty()) throw ParseError("model has no nodes");
    if (attributes == 0) throw ParseError("model declares zero attributes");
    if (labels == 0) throw ParseError("model declares zero labels");
    if (bits == 0 || bits > 62) throw ParseError("attribute bit length out of range");

    const int M = static_cast<int>(nodes.size());
    for (int i = 0; i < M; ++i) {
        const Node& v = nodes[i];
        if (v.id != i) throw ParseError("node " + std::to_string(i) + ": id out of BFS order");
        if (v.is_leaf()) {
            if (v.left != -1 || v.right != -1)
                throw ParseError("node " + std::to_string(i) + ": leaf with children");
            if (v.label >= labels)
                throw ParseError("node " + std::to_string(i) + ": label out of range");
        } else {
            if (v.left < 0 || v.left >= M || v.right < 0 || v.right >= M)
                throw ParseError("node " + std::to_string(i) + ": dangling child reference");
            if (v.left <= i || v.right <= i)
                throw ParseError("node " + std::to_string(i) + ": child precedes parent");
            if (v.attr < 0 || static_cast<uint32_t>(v.attr) >= attributes)
                throw ParseError("node " + std::to_string(i) + ": attribute index out of range");
            if (bits < 64 && v.thr >= (uint64_t(1) << bits))
                throw ParseError("node " + std::to_string(i) + ": threshold exceeds bit length");
        }
    }

    // Rebuild parent links and levels by BFS from the root; the visit order
    // must reproduce the id sequence 0,1,2,...
    for (Node& v : nodes) v.parent = -1;
    std::vector<int> depth_of(M, -1);
    std::deque<int> queue{0};
    depth_of[0] = 0;
    int visited = 0;
    levels.clear();
    while (!queue.empty()) {
        int id = queue.front();
        queue.pop_front();
        if (id != visited)
            throw ParseError("node " + std::to_string(id) + ": ids are not in BFS order");
        ++visited;
        if (static_cast<size_t>(depth_of[id]) >= levels.size()) levels.emplace_back();
        levels[depth_of[id]].push_back(id);
        const Node& v = nodes[id];
        if (!v.is_leaf()) {
            for (int child : {v.left, v.right}) {
                if (nodes[child].parent != -1)
                    throw ParseError("node " + std::to_string(child) + ": multiple parents");
                nodes[child].parent = id;
                depth_of[child] = depth_of[id] + 1;
                queue.push_back(child);
            }
        }
    }
    if (visited != M) throw ParseError("model contains unreachable nodes");
    if (nodes[0].is_leaf()) throw ParseError("node 0: root must be a decision node");
}

uint64_t classify_plain(const TreeModel& model, const AttributeVector& x) {
    if (x.size() != model.attributes)
        throw std::invalid_argument("attribute vector length does not match model");
    const Node* v = &model.nodes[0];
    while (!v->is_leaf()) {
        bool right = x[v->attr] >= v->thr;
        v = &model.nodes[right ? v->right : v->left];
    }
    return v->label;
}

std::string save_model(const TreeModel& model) {
    std::ostringstream os;
    os << "{\"bits\": " << model.bits << ", \"attributes\": " << model.attributes
       << ", \"labels\": " << model.labels << ", \"nodes\": [\n";
    for (size_t i = 0; i < model.nodes.size(); ++i) {
        const Node& v = model.nodes[i];
        os << "{\"id\": " << v.id << ", \"kind\": \"" << (v.is_leaf() ? "leaf" : "decision")
           << "\"";
        if (v.is_leaf()) {
            os << ", \"label\": " << v.label;
        } else {
            os << ", \"attr\": " << v.attr << ", \"thr\": " << v.thr << ", \"left\": " << v.left
               << ", \"right\": " << v.right;
        }
        os << "}" << (i + 1 < model.nodes.size() ? "," : "") << "\n";
    }
    os << "]}\n";
    return os.str();
}

TreeModel load_model(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad model file: ") + e.what());
    }
    TreeModel model;
    try {
        model.bits = j.at("bits").get<uint32_t>();
        model.attributes = j.at("attributes").get<uint32_t>();
        model.labels = j.at("labels").get<uint64_t>();
        for (const auto& nj : j.at("nodes")) {
            Node v;
            v.id = nj.at("id").get<int>();
            std::string kind = nj.at("kind").get<std::string>();
            if (kind == "leaf") {
                v.kind = NodeKind::Leaf;
                v.label = nj.at("label").get<uint64_t>();
            } else if (kind == "decision") {
                v.kind = NodeKind::Decision;
                v.attr = nj.at("attr").get<int>();
                v.thr = nj.at("thr").get<uint64_t>();
                v.left = nj.at("left").get<int>();
                v.right = nj.at("right").get<int>();
            } else {
                throw ParseError("node " + std::to_string(v.id) + ": unknown kind '" + kind + "'");
            }
            model.nodes.push_back(v);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad model file: ") + e.what());
    }
    model.validate_and_index();
    build_multiplication_dag(model);
    return model;
}

TreeModel complete_tree(int depth, uint32_t bits, uint32_t attributes, std::mt19937_64& rng) {
    if (depth < 1) throw std::invalid_argument("tree depth must be at least 1");
    TreeModel model;
    model.bits = bits;
    model.attributes = attributes;
    const int M = (1 << (depth + 1)) - 1;
    const int m = (1 << depth) - 1;
    model.labels = uint64_t(1) << depth;
    model.nodes.resize(M);
    for (int v = 0; v < M; ++v) {
        Node& node = model.nodes[v];
        node.id = v;
        if (v < m) {
            node.kind = NodeKind::Decision;
            node.left = 2 * v + 1;
            node.right = 2 * v + 2;
            node.thr = uniform_below(rng, uint64_t(1) << bits);
            node.attr = static_cast<int>(uniform_below(rng, attributes));
        } else {
            node.kind = NodeKind::Leaf;
            node.label = static_cast<uint64_t>(v - m);
        }
    }
    model.validate_and_index();
    build_multiplication_dag(model);
    return model;
}

namespace {

// Unindexed scratch node used while growing random shapes.
struct ProtoNode {
    bool leaf = true;
    int depth = 0;
    int left = -1, right = -1;
};

}  // namespace

TreeModel random_tree(int depth, uint32_t decision_nodes, uint32_t bits, uint32_t attributes,
                      std::mt19937_64& rng) {
    if (depth < 1) throw std::invalid_argument("tree depth must be at least 1");
    if (decision_nodes < static_cast<uint32_t>(depth))
        throw std::invalid_argument("need at least `depth` decision nodes to reach the depth");

    // Grow a spine to the exact depth first, then split random shallow
    // leaves until the decision-node budget is used up.
    std::vector<ProtoNode> proto(1);
    uint32_t made = 0;
    int spine = 0;
    for (int level = 0; level < depth; ++level) {
        proto[spine].leaf = false;
        proto[spine].left = static_cast<int>(proto.size());
        proto[spine].right = static_cast<int>(proto.size()) + 1;
        proto.push_back({true, level + 1, -1, -1});
        proto.push_back({true, level + 1, -1, -1});
        ++made;
        bool go_right = uniform_below(rng, 2) == 1;
        spine = go_right ? proto[spine].right : proto[spine].left;
    }
    while (made < decision_nodes) {
        std::vector<int> expandable;
        for (size_t i = 0; i < proto.size(); ++i)
            if (proto[i].leaf && proto[i].depth < depth) expandable.push_back(static_cast<int>(i));
        int pick = expandable[uniform_below(rng, expandable.size())];
        proto[pick].leaf = false;
        proto[pick].left = static_cast<int>(proto.size());
        proto[pick].right = static_cast<int>(proto.size()) + 1;
        proto.push_back({true, proto[pick].depth + 1, -1, -1});
        proto.push_back({true, proto[pick].depth + 1, -1, -1});
        ++made;
    }

    // Re-index in BFS order.
    std::vector<int> bfs_of(proto.size(), -1);
    std::deque<int> queue{0};
    std::vector<int> order;
    while (!queue.empty()) {
        int p = queue.front();
        queue.pop_front();
        bfs_of[p] = static_cast<int>(order.size());
        order.push_back(p);
        if (!proto[p].leaf) {
            queue.push_back(proto[p].left);
            queue.push_back(proto[p].right);
        }
    }

    TreeModel model;
    model.bits = bits;
    model.attributes = attributes;
    model.labels = decision_nodes + 1;  // one label per leaf
    model.nodes.resize(order.size());
    uint64_t next_label = 0;
    for (size_t i = 0; i < order.size(); ++i) {
        const ProtoNode& p = proto[order[i]];
        Node& v = model.nodes[i];
        v.id = static_cast<int>(i);
        if (p.leaf) {
            v.kind = NodeKind::Leaf;
            v.label = next_label++;
        } else {
            v.kind = NodeKind::Decision;
            v.left = bfs_of[p.left];
            v.right = bfs_of[p.right];
            v.thr = uniform_below(rng, uint64_t(1) << bits);
            v.attr = static_cast<int>(uniform_below(rng, attributes));
        }
    }
    model.validate_and_index();
    build_multiplication_dag(model);
    return model;
}

namespace {

void dag_add_edge(TreeModel& model, int v, int curr_level, int dest_level) {
    int w = v;
    while (curr_level > dest_level) {
        w = model.nodes[w].parent;
        --curr_level;
    }
    model.nodes[v].mdag.push_back(w);
}

// Recursive splitting over the level range [up, low]; the left part takes
// the largest power of two below the range length, mirroring the log-depth
// product recursion.
void dag_recurse(TreeModel& model, int up, int low) {
    if (up >= low) return;
    const int len = low - up + 1;
    const int mid = (1 << (bit_length(static_cast<uint64_t>(len - 1)) - 1)) - 1 + up;
    for (int v : model.levels[low]) dag_add_edge(model, v, low, mid);
    for (int i = mid + 1; i <= low - 1; ++i)
        for (int v : model.levels[i])
            if (model.nodes[v].is_leaf()) dag_add_edge(model, v, i, mid);
    dag_recurse(model, up, mid);
    dag_recurse(model, mid + 1, low);
}

}  // namespace

void build_multiplication_dag(TreeModel& model) {
    for (Node& v : model.nodes) v.mdag.clear();
    if (model.depth() >= 1) dag_recurse(model, 1, model.depth());
}

}  // namespace pdte
