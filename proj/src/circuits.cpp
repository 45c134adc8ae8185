#include "pdte/circuits.hpp"

namespace pdte {

BitCiphertextVector encrypt_bits(const PublicKey& pk, uint64_t value, uint32_t bits) {
    BitCiphertextVector out;
    out.reserve(bits);
    for (uint32_t i = 0; i < bits; ++i) out.push_back(pk.encrypt((value >> i) & 1));
    return out;
}

BitCiphertextVector trivial_bits(const EvalKey& ek, uint64_t value, uint32_t bits) {
    BitCiphertextVector out;
    out.reserve(bits);
    for (uint32_t i = 0; i < bits; ++i) out.push_back(ek.encrypt_trivial((value >> i) & 1));
    return out;
}

namespace {

struct CmpNode {
    Ciphertext gt, lt, eq;
};

// Divide and conquer over the bit range [lo, hi] (inclusive, LSB-first
// storage). Per-bit: gt_i = x_i(1+y_i), lt_i = y_i(1+x_i), eq_i = 1+x_i+y_i.
// Combine with the high part dominating: gt = gt_hi + eq_hi*gt_lo, and
// symmetrically for lt; eq = eq_hi * eq_lo. The split gives the most
// significant part the largest power of two below the range length,
// mirroring the log-depth product recursion, which keeps the depth at
// |mu-1|+1.
CmpNode compare_range(const EvalKey& ek, const BitCiphertextVector& x,
                      const BitCiphertextVector& y, size_t lo, size_t hi, bool need_eq) {
    if (lo == hi) {
        CmpNode node;
        Ciphertext one = ek.encrypt_trivial(1);
        Ciphertext not_y = ek.add(y[lo], one);
        Ciphertext not_x = ek.add(x[lo], one);
        node.gt = ek.mul(x[lo], not_y);
        node.lt = ek.mul(y[lo], not_x);
        if (need_eq) node.eq = ek.add(ek.add(x[lo], y[lo]), one);
        return node;
    }
    const size_t n = hi - lo + 1;
    const size_t high_count = size_t(1) << (bit_length(n - 1) - 1);
    CmpNode low = compare_range(ek, x, y, lo, hi - high_count, true);
    CmpNode high = compare_range(ek, x, y, hi - high_count + 1, hi, true);
    CmpNode node;
    node.gt = ek.add(high.gt, ek.mul(high.eq, low.gt));
    node.lt = ek.add(high.lt, ek.mul(high.eq, low.lt));
    if (need_eq) node.eq = ek.mul(high.eq, low.eq);
    return node;
}

}  // namespace

CompareResult she_compare(const EvalKey& ek, const BitCiphertextVector& x,
                          const BitCiphertextVector& y) {
    if (x.empty() || x.size() != y.size())
        throw std::invalid_argument("comparison requires equal nonzero bit lengths");
    if (ek.context().mode() != SchemeMode::Binary)
        throw std::invalid_argument("bitwise comparison requires the binary backend");
    ek.context().counters().on_comparison();
    CmpNode top = compare_range(ek, x, y, 0, x.size() - 1, false);
    return CompareResult{std::move(top.gt), std::move(top.lt)};
}

Ciphertext she_equal(const EvalKey& ek, const BitCiphertextVector& x,
                     const BitCiphertextVector& y) {
    CompareResult cmp = she_compare(ek, x, y);
    return ek.add(ek.add(cmp.gt, cmp.lt), ek.encrypt_trivial(1));
}

namespace {

Ciphertext product_range(const EvalKey& ek, std::span<const Ciphertext> values, size_t lo,
                         size_t hi) {
    if (lo == hi) return values[lo];
    const size_t n = hi - lo + 1;
    const size_t left_count = size_t(1) << (bit_length(n - 1) - 1);
    Ciphertext left = product_range(ek, values, lo, lo + left_count - 1);
    Ciphertext right = product_range(ek, values, lo + left_count, hi);
    return ek.mul(left, right);
}

}  // namespace

Ciphertext log_depth_product(const EvalKey& ek, std::span<const Ciphertext> values) {
    if (values.empty()) throw std::invalid_argument("product over an empty range");
    return product_range(ek, values, 0, values.size() - 1);
}

BitCiphertextVector she_full_adder(const EvalKey& ek, std::span<const Ciphertext> bits) {
    if (bits.empty()) throw std::invalid_argument("adder over an empty input");
    if (ek.context().mode() != SchemeMode::Binary)
        throw std::invalid_argument("bit adder requires the binary backend");
    const uint32_t out_bits = bit_length(bits.size());

    // Carry-save reduction: columns of bits by weight, compressed 3->2 until
    // one bit per column remains. The sum is at most n, so at most |n|
    // columns ever hold a bit.
    std::vector<std::vector<Ciphertext>> columns(out_bits);
    columns[0].assign(bits.begin(), bits.end());
    bool again = true;
    while (again) {
        again = false;
        std::vector<std::vector<Ciphertext>> next(columns.size());
        for (size_t c = 0; c < columns.size(); ++c) {
            auto& col = columns[c];
            size_t i = 0;
            for (; i + 3 <= col.size(); i += 3) {
                // full adder: sum = a+b+c, carry = ab + c(a+b)
                Ciphertext ab = ek.add(col[i], col[i + 1]);
                Ciphertext sum = ek.add(ab, col[i + 2]);
                Ciphertext carry = ek.add(ek.mul(col[i], col[i + 1]), ek.mul(col[i + 2], ab));
                next[c].push_back(std::move(sum));
                if (c + 1 < next.size()) next[c + 1].push_back(std::move(carry));
            }
            if (col.size() - i == 2) {
                // half adder: sum = a+b, carry = ab
                Ciphertext sum = ek.add(col[i], col[i + 1]);
                Ciphertext carry = ek.mul(col[i], col[i + 1]);
                next[c].push_back(std::move(sum));
                if (c + 1 < next.size()) next[c + 1].push_back(std::move(carry));
            } else if (col.size() - i == 1) {
                next[c].push_back(col[i]);
            }
        }
        columns = std::move(next);
        for (const auto& col : columns)
            if (col.size() > 1) again = true;
    }

    BitCiphertextVector out;
    out.reserve(out_bits);
    for (auto& col : columns) out.push_back(col.empty() ? ek.encrypt_trivial(0) : col[0]);
    return out;
}

}  // namespace pdte
