#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "pdte/he.hpp"
#include "pdte/tree.hpp"

namespace pdte::arith {

// 0-encoding and 1-encoding of a mu-bit integer, index 0 = bit position 1
// (least significant). Proper elements are prefixes read as integers; the
// remaining positions hold range-disjoint randoms with a forced LSB.
struct Encoding01 {
    std::vector<uint64_t> v0;
    std::vector<uint64_t> v1;
    uint32_t bits = 0;
};

Encoding01 encode01(uint64_t x, uint32_t bits, std::mt19937_64& rng);

// Bit-append transform making client values and server thresholds pairwise
// distinct while turning the tree's >= decision into a strict comparison:
// x' = 2x+1 and y' = 2y give [x' > y'] = [x >= y] and [y' > x'] = [y > x].
uint64_t distinctify_client(uint64_t x);
uint64_t distinctify_server(uint64_t y);

// Client-side encrypted 0/1-encodings of one attribute. Component-wise mode
// holds mu handles per encoding; packed mode holds one handle per encoding
// with position mu at slot 0 (requires slots >= 2^|mu|).
struct EncryptedAttrInt {
    std::vector<Ciphertext> v0;
    std::vector<Ciphertext> v1;
    Ciphertext v0_packed;
    Ciphertext v1_packed;
};

struct EncryptedInputInt {
    uint32_t bits = 0;
    bool packed_encoding = false;
    std::vector<EncryptedAttrInt> attrs;
};

EncryptedInputInt encrypt_input_int(const PublicKey& pk, const AttributeVector& x, uint32_t bits,
                                    bool packed_encoding);

// Standalone comparison: returns mu ciphertexts (u_l - v_l) * r_l under a
// random permutation; exactly one decrypts to zero iff x > y.
std::vector<Ciphertext> lin_tzeng_compare(const EvalKey& ek, const std::vector<Ciphertext>& v1_x,
                                          const std::vector<Ciphertext>& v0_y,
                                          std::mt19937_64& rng);

// Tree-evaluation variant: no per-component randomization or permutation,
// just the log-depth product of the differences. Zero iff x > y; depth
// |mu-1|.
Ciphertext lin_tzeng_mark(const EvalKey& ek, const std::vector<Ciphertext>& v1_x,
                          const std::vector<Ciphertext>& v0_y);

// Packed variant: one subtraction then |mu| shift-and-multiply folds bring
// the product of the leading mu slots into slot 0.
Ciphertext lin_tzeng_mark_packed(const EvalKey& ek, const Ciphertext& v1_x,
                                 const Ciphertext& v0_y, uint32_t bits);

struct EvalOptionsInt {
    bool parallel = false;
    bool packed_output = false;  // pack results into ceil(|L|/s) ciphertexts
};

struct RunStatsInt {
    uint64_t node_mults = 0;
    uint64_t finalize_mults = 0;
};

struct RunResultInt {
    std::vector<Ciphertext> outputs;  // shuffled masked results
    uint32_t result_count = 0;        // number of leaves represented
    RunStatsInt stats;
};

// Per-leaf path costs: each edge carries a Lin-Tzeng mark (zero on the taken
// side), and costs are plain sums along the paths, so this stage adds no
// multiplicative depth.
std::vector<Ciphertext> evaluate_path_costs(const EvalKey& ek, const TreeModel& model,
                                            const EncryptedInputInt& input,
                                            const EvalOptionsInt& opts);

// Masks each leaf cost with a fresh nonzero random, adds the label, and
// shuffles: result_v = cost_v * r_v + label_v. The classification leaf
// decrypts exactly to its label; all others land outside [0, k-1] with
// overwhelming probability.
RunResultInt finalize_results(const EvalKey& ek, const TreeModel& model,
                              const std::vector<Ciphertext>& leaf_costs,
                              const EvalOptionsInt& opts);

// Full server-side arithmetic evaluation.
RunResultInt run(const EvalKey& ek, const TreeModel& model, const EncryptedInputInt& input,
                 const EvalOptionsInt& opts);

// Picks the unique decrypted value inside the label domain [0, k-1]; zero or
// multiple candidates raise AmbiguityError.
uint64_t client_decode_int(const std::vector<uint64_t>& values, uint64_t k);

// Decrypts the response ciphertexts and decodes the label.
uint64_t decode_result(const SecretKey& sk, const std::vector<Ciphertext>& outputs,
                       uint32_t result_count, bool packed_output, uint64_t k);

}  // namespace pdte::arith
