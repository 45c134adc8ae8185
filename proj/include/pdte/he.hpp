#pragma once

#include <array>
#include <atomic>
#include <bit>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "pdte/errors.hpp"

namespace pdte {

// Bitlength of an integer: |0| = 0, |x| = floor(log2 x) + 1 otherwise.
inline uint32_t bit_length(uint64_t x) { return static_cast<uint32_t>(std::bit_width(x)); }

enum class SchemeMode : uint8_t { Binary = 0, Integer = 1 };

// The plaintext view of a packed ciphertext: s slots of ring elements mod p.
using SlotVector = std::vector<uint64_t>;

using ContextId = std::array<uint8_t, 16>;

struct HeParams {
    SchemeMode mode = SchemeMode::Binary;
    uint64_t modulus = 2;  // plaintext modulus p (2 in binary mode, a large prime in integer mode)
    uint32_t slots = 16;   // s
    uint32_t levels = 64;  // L, the multiplicative level budget
    uint64_t seed = 0;
};

// Default integer-mode modulus: the Mersenne prime 2^61 - 1, comfortably
// above the 2^40 floor needed for statistically unambiguous result masking.
inline constexpr uint64_t kDefaultIntegerModulus = (uint64_t(1) << 61) - 1;

// Exact operation accounting for one evaluation. Counts are instrumented at
// the backend, never estimated. Thread-safe so OpenMP kernels can share it.
class CostCounters {
public:
    void on_add() { adds_.fetch_add(1, std::memory_order_relaxed); }
    void on_mul(uint32_t result_depth) {
        muls_.fetch_add(1, std::memory_order_relaxed);
        uint32_t cur = depth_.load(std::memory_order_relaxed);
        while (cur < result_depth &&
               !depth_.compare_exchange_weak(cur, result_depth, std::memory_order_relaxed)) {
        }
    }
    void on_comparison() { cmps_.fetch_add(1, std::memory_order_relaxed); }

    uint64_t mul_count() const { return muls_.load(std::memory_order_relaxed); }
    uint64_t add_count() const { return adds_.load(std::memory_order_relaxed); }
    uint64_t comparison_count() const { return cmps_.load(std::memory_order_relaxed); }
    uint32_t max_depth() const { return depth_.load(std::memory_order_relaxed); }

    void reset() {
        muls_ = 0;
        adds_ = 0;
        cmps_ = 0;
        depth_ = 0;
    }

private:
    std::atomic<uint64_t> muls_{0};
    std::atomic<uint64_t> adds_{0};
    std::atomic<uint64_t> cmps_{0};
    std::atomic<uint32_t> depth_{0};
};

// Shared state behind one key triple. The reference backend stores no key
// material at all: ciphertexts are plaintext slots plus depth metadata, and
// the context only carries parameters, the op counters and a seeded RNG.
class HeContext {
public:
    explicit HeContext(const HeParams& params);

    const HeParams& params() const { return params_; }
    uint64_t modulus() const { return params_.modulus; }
    uint32_t slots() const { return params_.slots; }
    uint32_t levels() const { return params_.levels; }
    SchemeMode mode() const { return params_.mode; }
    const ContextId& id() const { return id_; }

    CostCounters& counters() const { return counters_; }
    // Deterministic context RNG. Serial use only; engines must not draw from
    // it inside parallel regions.
    std::mt19937_64& rng() const { return rng_; }

    uint64_t reduce(uint64_t v) const { return v % params_.modulus; }

private:
    HeParams params_;
    ContextId id_;
    mutable CostCounters counters_;
    mutable std::mt19937_64 rng_;
};

using HeContextPtr = std::shared_ptr<const HeContext>;

// Opaque ciphertext handle: backend payload plus depth metadata. Fresh
// encryptions have depth 0; capacity is the remaining level budget L - depth.
class Ciphertext {
public:
    Ciphertext() = default;
    Ciphertext(SlotVector slots, uint32_t depth, ContextId ctx)
        : slots_(std::move(slots)), depth_(depth), context_id_(ctx) {}

    const SlotVector& slots() const { return slots_; }
    uint32_t depth() const { return depth_; }
    const ContextId& context_id() const { return context_id_; }

    bool empty() const { return slots_.empty(); }

private:
    SlotVector slots_;
    uint32_t depth_ = 0;
    ContextId context_id_{};
};

class PublicKey {
public:
    explicit PublicKey(HeContextPtr ctx) : ctx_(std::move(ctx)) {}

    Ciphertext encrypt(uint64_t value) const;                 // replicates value to all slots
    Ciphertext encrypt_packed(const SlotVector& values) const;

    const HeContext& context() const { return *ctx_; }
    HeContextPtr context_ptr() const { return ctx_; }

private:
    HeContextPtr ctx_;
};

class SecretKey {
public:
    explicit SecretKey(HeContextPtr ctx) : ctx_(std::move(ctx)) {}

    SlotVector decrypt(const Ciphertext& ct) const;
    uint64_t decrypt_slot(const Ciphertext& ct, uint32_t slot = 0) const;

    const HeContext& context() const { return *ctx_; }
    HeContextPtr context_ptr() const { return ctx_; }

private:
    HeContextPtr ctx_;
};

// Evaluation key: everything the server needs. Carries no decryption power.
class EvalKey {
public:
    explicit EvalKey(HeContextPtr ctx) : ctx_(std::move(ctx)) {}

    Ciphertext add(const Ciphertext& a, const Ciphertext& b) const;
    Ciphertext sub(const Ciphertext& a, const Ciphertext& b) const;
    Ciphertext mul(const Ciphertext& a, const Ciphertext& b) const;
    Ciphertext shift_left(const Ciphertext& c, uint32_t offset) const;
    Ciphertext shift_right(const Ciphertext& c, uint32_t offset) const;

    // Transparent encryption of a public constant; depth 0.
    Ciphertext encrypt_trivial(uint64_t value) const;
    Ciphertext encrypt_trivial_packed(const SlotVector& values) const;

    // Public sanity check: payload well-formed and capacity >= 0. The server
    // runs this on every client input before evaluating anything.
    bool capacity_check(const Ciphertext& ct) const;

    const HeContext& context() const { return *ctx_; }
    HeContextPtr context_ptr() const { return ctx_; }

private:
    void require_same_context(const Ciphertext& a, const Ciphertext& b) const;
    HeContextPtr ctx_;
};

struct KeyTriple {
    PublicKey pk;
    SecretKey sk;
    EvalKey ek;
};

KeyTriple keygen(const HeParams& params);

// Ciphertext wire form: context id (16 bytes), depth (u32 BE), slot count
// (u32 BE), then each slot value as u64 BE.
std::vector<uint8_t> serialize_ciphertext(const Ciphertext& ct);
Ciphertext parse_ciphertext(const uint8_t* data, size_t size);

// Key files are one-line textual records in the model file style.
std::string serialize_key_params(const HeParams& params, const std::string& role);
HeParams parse_key_params(const std::string& text, const std::string& expected_role);

// Uniform draw from [0, bound) using the context RNG.
uint64_t uniform_below(std::mt19937_64& rng, uint64_t bound);
// Uniform nonzero residue mod p.
uint64_t uniform_nonzero(std::mt19937_64& rng, uint64_t p);

}  // namespace pdte
