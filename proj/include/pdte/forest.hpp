#pragma once

#include <string>
#include <vector>

#include "pdte/he.hpp"
#include "pdte/pdte_bin.hpp"
#include "pdte/tree.hpp"

namespace pdte::forest {

// A random forest: trees sharing the attribute space, bit length and label
// set [0, k-1].
struct ForestModel {
    uint32_t bits = 0;
    uint32_t attributes = 0;
    uint64_t labels = 0;
    std::vector<TreeModel> trees;
};

void validate_forest(const ForestModel& forest);

// Forest file: a header line followed by one model file path per line,
// resolved relative to the forest file's directory.
std::string save_forest(const ForestModel& forest, const std::vector<std::string>& tree_paths);
ForestModel load_forest_file(const std::string& path);

struct ForestOptions {
    bin::EvalOptions tree_opts;
    bool parallel = false;
};

// Majority vote: every tree is evaluated with PDT-BIN, per-label frequencies
// are tallied with the bit adder, and label i is selected iff f_i >= t with
// t = ceil(N/2). Returns one packed result ciphertext.
Ciphertext evaluate_majority(const EvalKey& ek, const ForestModel& forest,
                             const bin::EncryptedInputBin& input, const ForestOptions& opts);

// Argmax vote: pairwise frequency comparisons; label i wins iff it beats or
// ties-as-self all k labels. Ties leave no winner.
Ciphertext evaluate_argmax(const EvalKey& ek, const ForestModel& forest,
                           const bin::EncryptedInputBin& input, const ForestOptions& opts);

// Decodes the packed result ciphertext (same layout as label packing).
uint64_t decode_forest_result(const SecretKey& sk, const Ciphertext& result, uint64_t k);

}  // namespace pdte::forest
