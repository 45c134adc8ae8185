#include "pdte/pdte_bin.hpp"

#include <algorithm>

namespace pdte::bin {

PackingMode packing_from_name(const std::string& name) {
    if (name == "none") return PackingMode::None;
    if (name == "label") return PackingMode::Label;
    if (name == "attr") return PackingMode::Attribute;
    if (name == "thresh") return PackingMode::Threshold;
    throw std::invalid_argument("unknown packing mode '" + name + "'");
}

std::string packing_name(PackingMode mode) {
    switch (mode) {
        case PackingMode::None: return "none";
        case PackingMode::Label: return "label";
        case PackingMode::Attribute: return "attr";
        case PackingMode::Threshold: return "thresh";
    }
    return "?";
}

PathAlg path_alg_from_name(const std::string& name) {
    if (name == "naive") return PathAlg::Naive;
    if (name == "logdepth") return PathAlg::LogDepth;
    if (name == "dag") return PathAlg::Dag;
    throw std::invalid_argument("unknown path algorithm '" + name + "'");
}

std::string path_alg_name(PathAlg alg) {
    switch (alg) {
        case PathAlg::Naive: return "naive";
        case PathAlg::LogDepth: return "logdepth";
        case PathAlg::Dag: return "dag";
    }
    return "?";
}

uint32_t label_bits(uint64_t k) { return std::max<uint32_t>(1, bit_length(k - 1)); }

EncryptedInputBin encrypt_input_bin(const PublicKey& pk,
                                    const std::vector<AttributeVector>& batch, uint32_t bits,
                                    PackingMode packing) {
    if (batch.empty()) throw std::invalid_argument("empty input batch");
    const size_t n = batch[0].size();
    for (const AttributeVector& x : batch) {
        if (x.size() != n) throw std::invalid_argument("ragged input batch");
        for (uint64_t v : x)
            if (bits < 64 && v >= (uint64_t(1) << bits))
                throw std::invalid_argument("attribute value exceeds bit length");
    }
    if (packing != PackingMode::Attribute && batch.size() != 1)
        throw std::invalid_argument("batching requires attribute packing");
    if (packing == PackingMode::Attribute && batch.size() > pk.context().slots())
        throw std::invalid_argument("batch exceeds slot count");

    EncryptedInputBin input;
    input.packing = packing;
    input.bits = bits;
    input.batch = static_cast<uint32_t>(batch.size());
    input.attrs.resize(n);
    for (size_t i = 0; i < n; ++i) {
        input.attrs[i].reserve(bits);
        for (uint32_t b = 0; b < bits; ++b) {
            SlotVector slots(batch.size());
            for (size_t sigma = 0; sigma < batch.size(); ++sigma)
                slots[sigma] = (batch[sigma][i] >> b) & 1;
            if (packing == PackingMode::Attribute)
                input.attrs[i].push_back(pk.encrypt_packed(slots));
            else
                input.attrs[i].push_back(pk.encrypt(slots[0]));
        }
    }
    return input;
}

namespace {

#if defined(_OPENMP)
#define PDTE_PRAGMA(x) _Pragma(#x)
#else
#define PDTE_PRAGMA(x)
#endif

void check_input(const EvalKey& ek, const TreeModel& model, const EncryptedInputBin& input) {
    if (ek.context().mode() != SchemeMode::Binary)
        throw std::invalid_argument("binary evaluation requires the binary backend");
    if (input.bits != model.bits || input.attrs.size() != model.attributes)
        throw std::invalid_argument("encrypted input does not match the model");
    for (const auto& bits : input.attrs)
        if (bits.size() != model.bits) throw std::invalid_argument("bit vector length mismatch");
}

// Decision bits with one comparison per decision node; thresholds are
// transparently encrypted server-side and automatically replicate to all
// slots.
void decision_bits_per_node(const EvalKey& ek, const TreeModel& model,
                            const EncryptedInputBin& input, EvalScratch& scratch, bool parallel) {
    std::vector<int> decisions;
    for (const Node& v : model.nodes)
        if (!v.is_leaf()) decisions.push_back(v.id);
    const int count = static_cast<int>(decisions.size());
    (void)parallel;
    PDTE_PRAGMA(omp parallel for schedule(dynamic) if (parallel))
    for (int i = 0; i < count; ++i) {
        const Node& v = model.nodes[decisions[i]];
        BitCiphertextVector thr = trivial_bits(ek, v.thr, model.bits);
        CompareResult cmp = she_compare(ek, input.attrs[v.attr], thr);
        // b = [x >= thr] = NOT [thr > x]
        scratch.cmp[v.right] = ek.add(cmp.lt, ek.encrypt_trivial(1));
        scratch.cmp[v.left] = cmp.lt;
    }
}

// Threshold packing: all thresholds compared against the same attribute are
// packed into ceil(m_i/s) ciphertexts and compared at once; each node's bit
// is then shifted into slot 0. Slots past 0 carry unrelated comparisons and
// are ignored downstream.
void decision_bits_threshold_packed(const EvalKey& ek, const TreeModel& model,
                                    const EncryptedInputBin& input, EvalScratch& scratch,
                                    bool parallel) {
    const uint32_t s = ek.context().slots();
    std::vector<std::vector<int>> by_attr(model.attributes);
    for (const Node& v : model.nodes)
        if (!v.is_leaf()) by_attr[v.attr].push_back(v.id);

    struct Block {
        int attr;
        size_t first;  // index into by_attr[attr]
        size_t count;
    };
    std::vector<Block> blocks;
    for (uint32_t a = 0; a < model.attributes; ++a)
        for (size_t first = 0; first < by_attr[a].size(); first += s)
            blocks.push_back({static_cast<int>(a), first,
                              std::min<size_t>(s, by_attr[a].size() - first)});

    const int nblocks = static_cast<int>(blocks.size());
    (void)parallel;
    PDTE_PRAGMA(omp parallel for schedule(dynamic) if (parallel))
    for (int bi = 0; bi < nblocks; ++bi) {
        const Block& blk = blocks[bi];
        BitCiphertextVector thr_packed;
        thr_packed.reserve(model.bits);
        for (uint32_t b = 0; b < model.bits; ++b) {
            SlotVector slots(blk.count);
            for (size_t t = 0; t < blk.count; ++t) {
                const Node& v = model.nodes[by_attr[blk.attr][blk.first + t]];
                slots[t] = (v.thr >> b) & 1;
            }
            thr_packed.push_back(ek.encrypt_trivial_packed(slots));
        }
        CompareResult cmp = she_compare(ek, input.attrs[blk.attr], thr_packed);
        Ciphertext not_lt = ek.add(cmp.lt, ek.encrypt_trivial(1));
        for (size_t t = 0; t < blk.count; ++t) {
            const Node& v = model.nodes[by_attr[blk.attr][blk.first + t]];
            scratch.cmp[v.right] = ek.shift_left(not_lt, static_cast<uint32_t>(t));
            scratch.cmp[v.left] = ek.shift_left(cmp.lt, static_cast<uint32_t>(t));
        }
    }
}

}  // namespace

void compute_decision_bits(const EvalKey& ek, const TreeModel& model,
                           const EncryptedInputBin& input, EvalScratch& scratch,
                           const EvalOptions& opts) {
    check_input(ek, model, input);
    scratch.cmp.assign(model.total_count(), Ciphertext());
    scratch.cmp[0] = ek.encrypt_trivial(1);
    if (input.packing == PackingMode::Threshold)
        decision_bits_threshold_packed(ek, model, input, scratch, opts.parallel);
    else
        decision_bits_per_node(ek, model, input, scratch, opts.parallel);
}

void aggregate_paths_naive(const EvalKey& ek, const TreeModel& model, EvalScratch& scratch,
                           const EvalOptions& opts) {
    // Top-down, one level at a time: children multiply in the parent's
    // accumulated bit. Depth grows linearly with the tree depth.
    for (size_t level = 0; level + 1 < model.levels.size(); ++level) {
        const auto& ids = model.levels[level];
        const int count = static_cast<int>(ids.size());
        const bool parallel = opts.parallel;
        (void)parallel;
        PDTE_PRAGMA(omp parallel for schedule(dynamic) if (parallel))
        for (int i = 0; i < count; ++i) {
            const Node& v = model.nodes[ids[i]];
            if (v.is_leaf()) continue;
            scratch.cmp[v.left] = ek.mul(scratch.cmp[v.left], scratch.cmp[v.id]);
            scratch.cmp[v.right] = ek.mul(scratch.cmp[v.right], scratch.cmp[v.id]);
        }
    }
}

void aggregate_paths_log_depth(const EvalKey& ek, const TreeModel& model, EvalScratch& scratch,
                               const EvalOptions& opts) {
    const std::vector<int> leaves = model.leaf_ids();
    const int count = static_cast<int>(leaves.size());
    const bool parallel = opts.parallel;
    (void)parallel;
    PDTE_PRAGMA(omp parallel for schedule(dynamic) if (parallel))
    for (int i = 0; i < count; ++i) {
        // Collect the path bits root-side first (the root's own transparent
        // 1 is excluded), then take the log-depth product.
        std::vector<Ciphertext> path;
        for (int w = leaves[i]; w != 0; w = model.nodes[w].parent) path.push_back(scratch.cmp[w]);
        std::reverse(path.begin(), path.end());
        scratch.cmp[leaves[i]] = log_depth_product(ek, path);
    }
}

void aggregate_paths_dag(const EvalKey& ek, const TreeModel& model, EvalScratch& scratch,
                         const EvalOptions& opts) {
    // Level barrier between iterations: a node's dependency stack only
    // references ancestors whose accumulation finished in earlier levels.
    for (size_t level = 1; level < model.levels.size(); ++level) {
        const auto& ids = model.levels[level];
        const int count = static_cast<int>(ids.size());
        const bool parallel = opts.parallel;
        (void)parallel;
        PDTE_PRAGMA(omp parallel for schedule(dynamic) if (parallel))
        for (int i = 0; i < count; ++i) {
            const Node& v = model.nodes[ids[i]];
            for (auto it = v.mdag.rbegin(); it != v.mdag.rend(); ++it)
                scratch.cmp[v.id] = ek.mul(scratch.cmp[v.id], scratch.cmp[*it]);
        }
    }
}

namespace {

// Parallel map over leaves followed by a serial fold, so operation counts
// are identical in serial and parallel runs.
Ciphertext sum_over_leaves(const EvalKey& ek, const std::vector<Ciphertext>& terms) {
    Ciphertext acc = terms[0];
    for (size_t i = 1; i < terms.size(); ++i) acc = ek.add(acc, terms[i]);
    return acc;
}

}  // namespace

std::vector<Ciphertext> finalize_labels(const EvalKey& ek, const TreeModel& model,
                                        const EvalScratch& scratch, PackingMode packing,
                                        const EvalOptions& opts) {
    const std::vector<int> leaves = model.leaf_ids();
    const int count = static_cast<int>(leaves.size());
    const uint32_t lb = label_bits(model.labels);
    const bool parallel = opts.parallel;
    (void)parallel;

    if (packing == PackingMode::Label) {
        // One packed output: sum over leaves of cmp_v * [c_lb | .. | c_1 | 0..]
        std::vector<Ciphertext> terms(count);
        PDTE_PRAGMA(omp parallel for schedule(static) if (parallel))
        for (int i = 0; i < count; ++i) {
            const Node& v = model.nodes[leaves[i]];
            SlotVector packed(lb);
            for (uint32_t b = 0; b < lb; ++b) packed[b] = (v.label >> (lb - 1 - b)) & 1;
            terms[i] = ek.mul(scratch.cmp[v.id], ek.encrypt_trivial_packed(packed));
        }
        return {sum_over_leaves(ek, terms)};
    }

    if (packing == PackingMode::Threshold) {
        // Zero-padded label constants clear the junk slots of the packed
        // decision bits, and shifts assemble one output with the label bits
        // at slots 0..lb-1, most significant first.
        std::vector<Ciphertext> per_bit(lb);
        for (uint32_t b = 0; b < lb; ++b) {
            std::vector<Ciphertext> terms(count);
            PDTE_PRAGMA(omp parallel for schedule(static) if (parallel))
            for (int i = 0; i < count; ++i) {
                const Node& v = model.nodes[leaves[i]];
                SlotVector bit_slot0{(v.label >> b) & 1};
                terms[i] = ek.mul(scratch.cmp[v.id], ek.encrypt_trivial_packed(bit_slot0));
            }
            per_bit[b] = sum_over_leaves(ek, terms);
        }
        Ciphertext out = ek.shift_right(per_bit[lb - 1], 0);
        for (uint32_t b = 0; b + 1 < lb; ++b)
            out = ek.add(out, ek.shift_right(per_bit[b], lb - 1 - b));
        return {out};
    }

    // None / Attribute: one output per label bit, LSB first.
    std::vector<Ciphertext> outputs(lb);
    for (uint32_t b = 0; b < lb; ++b) {
        std::vector<Ciphertext> terms(count);
        PDTE_PRAGMA(omp parallel for schedule(static) if (parallel))
        for (int i = 0; i < count; ++i) {
            const Node& v = model.nodes[leaves[i]];
            terms[i] = ek.mul(scratch.cmp[v.id], ek.encrypt_trivial((v.label >> b) & 1));
        }
        outputs[b] = sum_over_leaves(ek, terms);
    }
    return outputs;
}

RunResult run(const EvalKey& ek, const TreeModel& model, const EncryptedInputBin& input,
              const EvalOptions& opts) {
    RunResult result;
    CostCounters& counters = ek.context().counters();

    const uint64_t muls0 = counters.mul_count();
    EvalScratch scratch;
    compute_decision_bits(ek, model, input, scratch, opts);
    const uint64_t muls1 = counters.mul_count();

    switch (opts.path_alg) {
        case PathAlg::Naive: aggregate_paths_naive(ek, model, scratch, opts); break;
        case PathAlg::LogDepth: aggregate_paths_log_depth(ek, model, scratch, opts); break;
        case PathAlg::Dag: aggregate_paths_dag(ek, model, scratch, opts); break;
    }
    const uint64_t muls2 = counters.mul_count();

    result.outputs = finalize_labels(ek, model, scratch, input.packing, opts);
    const uint64_t muls3 = counters.mul_count();

    result.stats.node_mults = muls1 - muls0;
    result.stats.path_mults = muls2 - muls1;
    result.stats.leaf_mults = muls3 - muls2;
    return result;
}

uint64_t decode_output(const SecretKey& sk, const std::vector<Ciphertext>& outputs,
                       PackingMode packing, uint64_t k, uint32_t slot) {
    const uint32_t lb = label_bits(k);
    if (packing == PackingMode::Label || packing == PackingMode::Threshold) {
        if (outputs.size() != 1) throw std::invalid_argument("expected a single packed output");
        SlotVector v = sk.decrypt(outputs[0]);
        uint64_t label = 0;
        for (uint32_t j = 0; j < lb; ++j) label = (label << 1) | (v[j] & 1);
        return label;
    }
    if (outputs.size() != lb) throw std::invalid_argument("unexpected output count");
    uint64_t label = 0;
    for (uint32_t b = 0; b < lb; ++b) label |= (sk.decrypt(outputs[b])[slot] & 1) << b;
    return label;
}

}  // namespace pdte::bin
