#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pdte/circuits.hpp"
#include "pdte/he.hpp"
#include "pdte/tree.hpp"

namespace pdte::bin {

enum class PackingMode : uint8_t {
    None = 0,       // bitwise input, bit-encrypted label outputs
    Label = 1,      // classification label bits packed into one output
    Attribute = 2,  // up to s attribute vectors batched slot-wise
    Threshold = 3,  // per-attribute thresholds packed, slot 0 meaningful
};

enum class PathAlg : uint8_t {
    Naive = 0,     // sequential products along each path (baseline)
    LogDepth = 1,  // per-leaf log-depth product
    Dag = 2,       // precomputed dependency stacks, shared prefixes
};

PackingMode packing_from_name(const std::string& name);
std::string packing_name(PackingMode mode);
PathAlg path_alg_from_name(const std::string& name);
std::string path_alg_name(PathAlg alg);

// Output bit width for labels in [0, k-1].
uint32_t label_bits(uint64_t k);

struct EvalOptions {
    PathAlg path_alg = PathAlg::Dag;
    bool parallel = false;
};

// Client-side encrypted attribute vector(s). attrs[i] holds the mu bit
// ciphertexts of attribute i; under attribute packing, slot sigma of each
// bit ciphertext belongs to batch vector sigma.
struct EncryptedInputBin {
    PackingMode packing = PackingMode::None;
    uint32_t bits = 0;
    uint32_t batch = 1;
    std::vector<BitCiphertextVector> attrs;
};

EncryptedInputBin encrypt_input_bin(const PublicKey& pk,
                                    const std::vector<AttributeVector>& batch, uint32_t bits,
                                    PackingMode packing);

// Per-run scratch: the cmp field of every node, indexed by BFS id. Owned by
// one evaluation; models stay immutable and shareable.
struct EvalScratch {
    std::vector<Ciphertext> cmp;
};

// Computes every decision bit and stores b on the right child and 1-b on
// the left child; the root gets a transparent 1 so path products are
// uniform.
void compute_decision_bits(const EvalKey& ek, const TreeModel& model,
                           const EncryptedInputBin& input, EvalScratch& scratch,
                           const EvalOptions& opts);

// Path aggregation: after any of these, each leaf's cmp holds the product of
// the decision bits on its root path.
void aggregate_paths_naive(const EvalKey& ek, const TreeModel& model, EvalScratch& scratch,
                           const EvalOptions& opts);
void aggregate_paths_log_depth(const EvalKey& ek, const TreeModel& model, EvalScratch& scratch,
                               const EvalOptions& opts);
void aggregate_paths_dag(const EvalKey& ek, const TreeModel& model, EvalScratch& scratch,
                         const EvalOptions& opts);

// Folds leaf labels into the output ciphertexts. Output count: 1 under
// Label/Threshold packing, label_bits(k) otherwise.
std::vector<Ciphertext> finalize_labels(const EvalKey& ek, const TreeModel& model,
                                        const EvalScratch& scratch, PackingMode packing,
                                        const EvalOptions& opts);

struct RunStats {
    uint64_t node_mults = 0;
    uint64_t path_mults = 0;
    uint64_t leaf_mults = 0;
};

struct RunResult {
    std::vector<Ciphertext> outputs;
    RunStats stats;
};

// Full server-side evaluation: decision bits, chosen path aggregation,
// finalize. Inputs must already have passed capacity_check.
RunResult run(const EvalKey& ek, const TreeModel& model, const EncryptedInputBin& input,
              const EvalOptions& opts);

// Client-side decode of the outputs for batch vector `slot` (0 unless
// attribute packing).
uint64_t decode_output(const SecretKey& sk, const std::vector<Ciphertext>& outputs,
                       PackingMode packing, uint64_t k, uint32_t slot = 0);

}  // namespace pdte::bin
