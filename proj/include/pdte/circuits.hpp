#pragma once

#include <span>
#include <vector>

#include "pdte/he.hpp"

namespace pdte {

// Bitwise encryption of an integer, index 0 = least significant bit. All
// handles belong to the same context.
using BitCiphertextVector = std::vector<Ciphertext>;

// Client-side bitwise encryption of value into `bits` ciphertexts.
BitCiphertextVector encrypt_bits(const PublicKey& pk, uint64_t value, uint32_t bits);

// Server-side transparent bitwise encryption of a public constant.
BitCiphertextVector trivial_bits(const EvalKey& ek, uint64_t value, uint32_t bits);

struct CompareResult {
    Ciphertext gt;  // [x > y]
    Ciphertext lt;  // [y > x]
};

// Slot-wise bitwise comparison of two equal-length bit vectors (mod-2
// backend). Both outputs encrypt 0 when the inputs are equal. Multiplicative
// depth is at most |mu-1|+1 for mu-bit inputs.
CompareResult she_compare(const EvalKey& ek, const BitCiphertextVector& x,
                          const BitCiphertextVector& y);

// Encrypts 1 iff x = y: comparison outputs XORed with 1.
Ciphertext she_equal(const EvalKey& ek, const BitCiphertextVector& x,
                     const BitCiphertextVector& y);

// Product of all elements with logarithmic multiplicative depth. The
// recursion splits so the left half holds the largest power of two below the
// range length; depth is |n|-1 when n is a power of two, |n| otherwise.
Ciphertext log_depth_product(const EvalKey& ek, std::span<const Ciphertext> values);

// Adder tree over n encrypted bits (mod-2 backend): returns the binary
// representation of their sum, LSB first, exactly bit_length(n) bits.
BitCiphertextVector she_full_adder(const EvalKey& ek, std::span<const Ciphertext> bits);

}  // namespace pdte
