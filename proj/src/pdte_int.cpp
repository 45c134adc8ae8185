#include "pdte/pdte_int.hpp"

#include <algorithm>
#include <numeric>

#include "pdte/circuits.hpp"

namespace pdte::arith {

namespace {

#if defined(_OPENMP)
#define PDTE_PRAGMA(x) _Pragma(#x)
#else
#define PDTE_PRAGMA(x)
#endif

uint64_t random_encoded_element(uint32_t bits, unsigned lsb, std::mt19937_64& rng) {
    // Uniform over [2^mu, 2^{mu+1}) with the requested least significant
    // bit; disjoint by magnitude from every proper encoded element.
    uint64_t r = (uint64_t(1) << bits) + 2 * uniform_below(rng, uint64_t(1) << (bits - 1)) + lsb;
    return r;
}

void require_integer_mode(const HeContext& ctx, uint32_t bits) {
    if (ctx.mode() != SchemeMode::Integer)
        throw std::invalid_argument("arithmetic evaluation requires the integer backend");
    if (bits >= 60 || ctx.modulus() <= (uint64_t(1) << (bits + 2)))
        throw std::invalid_argument("plaintext modulus too small for the encoding range");
}

}  // namespace

Encoding01 encode01(uint64_t x, uint32_t bits, std::mt19937_64& rng) {
    if (bits == 0 || bits > 58) throw std::invalid_argument("bit length out of range");
    if (x >= (uint64_t(1) << bits)) throw std::invalid_argument("value exceeds bit length");
    Encoding01 enc;
    enc.bits = bits;
    enc.v0.resize(bits);
    enc.v1.resize(bits);
    for (uint32_t l = 1; l <= bits; ++l) {
        const bool bit = (x >> (l - 1)) & 1;
        // 1-encoding: the prefix down to position l when the bit is 1.
        enc.v1[l - 1] = bit ? (x >> (l - 1)) : random_encoded_element(bits, 1, rng);
        // 0-encoding: the prefix above position l with a 1 appended when the
        // bit is 0.
        enc.v0[l - 1] = bit ? random_encoded_element(bits, 0, rng) : (((x >> l) << 1) | 1);
    }
    return enc;
}

uint64_t distinctify_client(uint64_t x) { return 2 * x + 1; }
uint64_t distinctify_server(uint64_t y) { return 2 * y; }

EncryptedInputInt encrypt_input_int(const PublicKey& pk, const AttributeVector& x, uint32_t bits,
                                    bool packed_encoding) {
    require_integer_mode(pk.context(), bits);
    if (packed_encoding && pk.context().slots() < (uint64_t(1) << bit_length(bits)))
        throw std::invalid_argument("packed encodings need at least 2^|mu| slots");

    EncryptedInputInt input;
    input.bits = bits;
    input.packed_encoding = packed_encoding;
    input.attrs.resize(x.size());
    for (size_t i = 0; i < x.size(); ++i) {
        Encoding01 enc = encode01(x[i], bits, pk.context().rng());
        EncryptedAttrInt& attr = input.attrs[i];
        if (packed_encoding) {
            // Slot j holds position mu-j, matching the packed layout
            // [v_mu | ... | v_1 | 0 | ... | 0].
            SlotVector s0(bits), s1(bits);
            for (uint32_t j = 0; j < bits; ++j) {
                s0[j] = enc.v0[bits - 1 - j];
                s1[j] = enc.v1[bits - 1 - j];
            }
            attr.v0_packed = pk.encrypt_packed(s0);
            attr.v1_packed = pk.encrypt_packed(s1);
        } else {
            attr.v0.reserve(bits);
            attr.v1.reserve(bits);
            for (uint32_t l = 0; l < bits; ++l) {
                attr.v0.push_back(pk.encrypt(enc.v0[l]));
                attr.v1.push_back(pk.encrypt(enc.v1[l]));
            }
        }
    }
    return input;
}

std::vector<Ciphertext> lin_tzeng_compare(const EvalKey& ek, const std::vector<Ciphertext>& v1_x,
                                          const std::vector<Ciphertext>& v0_y,
                                          std::mt19937_64& rng) {
    if (v1_x.empty() || v1_x.size() != v0_y.size())
        throw std::invalid_argument("encoding lengths differ");
    require_integer_mode(ek.context(), static_cast<uint32_t>(v1_x.size()));
    ek.context().counters().on_comparison();
    const size_t mu = v1_x.size();
    std::vector<Ciphertext> out(mu);
    for (size_t l = 0; l < mu; ++l) {
        Ciphertext diff = ek.sub(v1_x[l], v0_y[l]);
        out[l] = ek.mul(diff, ek.encrypt_trivial(uniform_nonzero(rng, ek.context().modulus())));
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

Ciphertext lin_tzeng_mark(const EvalKey& ek, const std::vector<Ciphertext>& v1_x,
                          const std::vector<Ciphertext>& v0_y) {
    if (v1_x.empty() || v1_x.size() != v0_y.size())
        throw std::invalid_argument("encoding lengths differ");
    require_integer_mode(ek.context(), static_cast<uint32_t>(v1_x.size()));
    ek.context().counters().on_comparison();
    std::vector<Ciphertext> diffs(v1_x.size());
    for (size_t l = 0; l < v1_x.size(); ++l) diffs[l] = ek.sub(v1_x[l], v0_y[l]);
    return log_depth_product(ek, diffs);
}

Ciphertext lin_tzeng_mark_packed(const EvalKey& ek, const Ciphertext& v1_x,
                                 const Ciphertext& v0_y, uint32_t bits) {
    require_integer_mode(ek.context(), bits);
    const uint32_t s = ek.context().slots();
    const uint32_t fold = bit_length(bits);
    if (s < (uint64_t(1) << fold))
        throw std::invalid_argument("packed encodings need at least 2^|mu| slots");
    ek.context().counters().on_comparison();

    Ciphertext diff = ek.sub(v1_x, v0_y);
    // Pad the unused slots with ones so the fold into slot 0 multiplies
    // exactly the mu difference components.
    SlotVector pad(s, 0);
    for (uint32_t j = bits; j < s; ++j) pad[j] = 1;
    diff = ek.add(diff, ek.encrypt_trivial_packed(pad));
    for (uint32_t t = 0; t < fold; ++t)
        diff = ek.mul(diff, ek.shift_left(diff, uint32_t(1) << t));
    return diff;
}

namespace {

struct NodeMarks {
    // Per-node mark of the edge from the parent, indexed by BFS id; the root
    // holds the additive identity.
    std::vector<Ciphertext> mark;
};

// Server-side encodings for one decision node: the right edge tests
// [x > thr-1] (= [x >= thr]) and the left edge tests [thr > x]. A zero
// threshold makes the right test trivially true, so that edge gets a
// transparent zero mark; the left test [0 > x] never holds, so its mark is
// computed normally and is guaranteed nonzero.
struct ThresholdEncodings {
    bool trivially_right = false;
    std::vector<uint64_t> right_v0;  // 0-encoding of thr-1
    std::vector<uint64_t> left_v1;   // 1-encoding of thr
};

std::vector<Ciphertext> trivial_vector(const EvalKey& ek, const std::vector<uint64_t>& values) {
    std::vector<Ciphertext> out;
    out.reserve(values.size());
    for (uint64_t v : values) out.push_back(ek.encrypt_trivial(v));
    return out;
}

}  // namespace

std::vector<Ciphertext> evaluate_path_costs(const EvalKey& ek, const TreeModel& model,
                                            const EncryptedInputInt& input,
                                            const EvalOptionsInt& opts) {
    require_integer_mode(ek.context(), model.bits);
    if (input.bits != model.bits || input.attrs.size() != model.attributes)
        throw std::invalid_argument("encrypted input does not match the model");

    // All randomness is drawn up front so the marks can be computed in
    // parallel deterministically.
    std::mt19937_64& rng = ek.context().rng();
    std::vector<int> decisions;
    for (const Node& v : model.nodes)
        if (!v.is_leaf()) decisions.push_back(v.id);
    std::vector<ThresholdEncodings> enc(decisions.size());
    for (size_t i = 0; i < decisions.size(); ++i) {
        const Node& v = model.nodes[decisions[i]];
        enc[i].left_v1 = encode01(v.thr, model.bits, rng).v1;
        if (v.thr == 0)
            enc[i].trivially_right = true;
        else
            enc[i].right_v0 = encode01(v.thr - 1, model.bits, rng).v0;
    }

    NodeMarks marks;
    marks.mark.assign(model.total_count(), Ciphertext());
    marks.mark[0] = ek.encrypt_trivial(0);

    const int count = static_cast<int>(decisions.size());
    const bool parallel = opts.parallel;
    (void)parallel;
    PDTE_PRAGMA(omp parallel for schedule(dynamic) if (parallel))
    for (int i = 0; i < count; ++i) {
        const Node& v = model.nodes[decisions[i]];
        const EncryptedAttrInt& attr = input.attrs[v.attr];
        if (input.packed_encoding) {
            SlotVector right_slots(model.bits), left_slots(model.bits);
            for (uint32_t j = 0; j < model.bits; ++j) {
                if (!enc[i].trivially_right) right_slots[j] = enc[i].right_v0[model.bits - 1 - j];
                left_slots[j] = enc[i].left_v1[model.bits - 1 - j];
            }
            marks.mark[v.right] =
                enc[i].trivially_right
                    ? ek.encrypt_trivial(0)
                    : lin_tzeng_mark_packed(ek, attr.v1_packed,
                                            ek.encrypt_trivial_packed(right_slots), model.bits);
            marks.mark[v.left] = lin_tzeng_mark_packed(
                ek, ek.encrypt_trivial_packed(left_slots), attr.v0_packed, model.bits);
        } else {
            marks.mark[v.right] = enc[i].trivially_right
                                      ? ek.encrypt_trivial(0)
                                      : lin_tzeng_mark(ek, attr.v1,
                                                       trivial_vector(ek, enc[i].right_v0));
            marks.mark[v.left] = lin_tzeng_mark(ek, trivial_vector(ek, enc[i].left_v1), attr.v0);
        }
    }

    // Additive path accumulation, level by level; adds cost no depth.
    for (size_t level = 0; level + 1 < model.levels.size(); ++level) {
        const auto& ids = model.levels[level];
        const int n = static_cast<int>(ids.size());
        PDTE_PRAGMA(omp parallel for schedule(static) if (parallel))
        for (int i = 0; i < n; ++i) {
            const Node& v = model.nodes[ids[i]];
            if (v.is_leaf()) continue;
            marks.mark[v.left] = ek.add(marks.mark[v.left], marks.mark[v.id]);
            marks.mark[v.right] = ek.add(marks.mark[v.right], marks.mark[v.id]);
        }
    }

    std::vector<Ciphertext> costs;
    for (int leaf : model.leaf_ids()) costs.push_back(marks.mark[leaf]);
    return costs;
}

RunResultInt finalize_results(const EvalKey& ek, const TreeModel& model,
                              const std::vector<Ciphertext>& leaf_costs,
                              const EvalOptionsInt& opts) {
    const std::vector<int> leaves = model.leaf_ids();
    if (leaf_costs.size() != leaves.size())
        throw std::invalid_argument("leaf cost count does not match the model");
    const uint64_t p = ek.context().modulus();
    const uint32_t s = ek.context().slots();
    const int count = static_cast<int>(leaves.size());
    std::mt19937_64& rng = ek.context().rng();

    // Fresh nonzero mask and shuffled position per leaf, drawn serially.
    std::vector<uint64_t> mask(count);
    for (int i = 0; i < count; ++i) mask[i] = uniform_nonzero(rng, p);
    std::vector<uint32_t> position(count);
    std::iota(position.begin(), position.end(), 0);
    std::shuffle(position.begin(), position.end(), rng);

    RunResultInt result;
    result.result_count = static_cast<uint32_t>(count);
    const bool parallel = opts.parallel;
    (void)parallel;

    if (!opts.packed_output) {
        result.outputs.assign(count, Ciphertext());
        PDTE_PRAGMA(omp parallel for schedule(static) if (parallel))
        for (int i = 0; i < count; ++i) {
            const Node& v = model.nodes[leaves[i]];
            Ciphertext masked = ek.mul(leaf_costs[i], ek.encrypt_trivial(mask[i]));
            result.outputs[position[i]] = ek.add(masked, ek.encrypt_trivial(v.label));
        }
        return result;
    }

    // Packed delivery: the mask is folded into a one-hot slot vector, so
    // placing a result costs the same single multiplication, and the block
    // labels are added in one transparent constant. Costs are shifted to
    // their slot first so only the meaningful slot 0 value lands there.
    const uint32_t blocks = (static_cast<uint32_t>(count) + s - 1) / s;
    std::vector<std::vector<int>> by_block(blocks);
    for (int i = 0; i < count; ++i) by_block[position[i] / s].push_back(i);
    result.outputs.assign(blocks, Ciphertext());
    PDTE_PRAGMA(omp parallel for schedule(dynamic) if (parallel))
    for (int b = 0; b < static_cast<int>(blocks); ++b) {
        SlotVector labels(s, 0);
        for (int i : by_block[b])
            labels[position[i] % s] = model.nodes[leaves[i]].label;
        Ciphertext acc = ek.encrypt_trivial_packed(labels);
        for (int i : by_block[b]) {
            const uint32_t slot = position[i] % s;
            SlotVector one_hot(s, 0);
            one_hot[slot] = mask[i];
            acc = ek.add(acc, ek.mul(ek.shift_right(leaf_costs[i], slot),
                                     ek.encrypt_trivial_packed(one_hot)));
        }
        result.outputs[b] = acc;
    }
    return result;
}

RunResultInt run(const EvalKey& ek, const TreeModel& model, const EncryptedInputInt& input,
                 const EvalOptionsInt& opts) {
    CostCounters& counters = ek.context().counters();
    const uint64_t muls0 = counters.mul_count();
    std::vector<Ciphertext> costs = evaluate_path_costs(ek, model, input, opts);
    const uint64_t muls1 = counters.mul_count();
    RunResultInt result = finalize_results(ek, model, costs, opts);
    const uint64_t muls2 = counters.mul_count();
    result.stats.node_mults = muls1 - muls0;
    result.stats.finalize_mults = muls2 - muls1;
    return result;
}

uint64_t client_decode_int(const std::vector<uint64_t>& values, uint64_t k) {
    uint64_t label = 0;
    size_t hits = 0;
    for (uint64_t v : values) {
        if (v < k) {
            label = v;
            ++hits;
        }
    }
    if (hits != 1)
        throw AmbiguityError("expected exactly one value in the label domain, found " +
                             std::to_string(hits));
    return label;
}

uint64_t decode_result(const SecretKey& sk, const std::vector<Ciphertext>& outputs,
                       uint32_t result_count, bool packed_output, uint64_t k) {
    std::vector<uint64_t> values;
    values.reserve(result_count);
    if (packed_output) {
        const uint32_t s = sk.context().slots();
        for (uint32_t pos = 0; pos < result_count; ++pos) {
            if (pos / s >= outputs.size()) throw std::invalid_argument("missing result block");
            values.push_back(sk.decrypt(outputs[pos / s])[pos % s]);
        }
    } else {
        if (outputs.size() != result_count) throw std::invalid_argument("result count mismatch");
        for (const Ciphertext& ct : outputs) values.push_back(sk.decrypt_slot(ct, 0));
    }
    return client_decode_int(values, k);
}

}  // namespace pdte::arith
