#include "pdte/forest.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pdte/circuits.hpp"

namespace pdte::forest {

namespace {

#if defined(_OPENMP)
#define PDTE_PRAGMA(x) _Pragma(#x)
#else
#define PDTE_PRAGMA(x)
#endif

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

void validate_forest(const ForestModel& forest) {
    if (forest.trees.empty()) throw ParseError("forest has no trees");
    if (forest.labels < 2) throw ParseError("forest needs at least two labels");
    for (size_t j = 0; j < forest.trees.size(); ++j) {
        const TreeModel& t = forest.trees[j];
        if (t.bits != forest.bits || t.attributes != forest.attributes ||
            t.labels != forest.labels)
            throw ParseError("tree " + std::to_string(j) +
                             " does not share the forest's attribute space or labels");
    }
}

std::string save_forest(const ForestModel& forest, const std::vector<std::string>& tree_paths) {
    if (tree_paths.size() != forest.trees.size())
        throw std::invalid_argument("one path per tree required");
    std::ostringstream os;
    os << "{\"bits\": " << forest.bits << ", \"attributes\": " << forest.attributes
       << ", \"labels\": " << forest.labels << ", \"trees\": " << forest.trees.size() << "}\n";
    for (const std::string& p : tree_paths) os << p << "\n";
    return os.str();
}

ForestModel load_forest_file(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string header;
    if (!std::getline(in, header)) throw ParseError("empty forest file");
    ForestModel forest;
    size_t count = 0;
    try {
        nlohmann::json j = nlohmann::json::parse(header);
        forest.bits = j.at("bits").get<uint32_t>();
        forest.attributes = j.at("attributes").get<uint32_t>();
        forest.labels = j.at("labels").get<uint64_t>();
        count = j.at("trees").get<size_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad forest header: ") + e.what());
    }
    const std::filesystem::path base = std::filesystem::path(path).parent_path();
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        forest.trees.push_back(load_model(read_file((base / line).string())));
    }
    if (forest.trees.size() != count)
        throw ParseError("forest header declares " + std::to_string(count) + " trees, found " +
                         std::to_string(forest.trees.size()));
    validate_forest(forest);
    return forest;
}

namespace {

// Per-label encrypted frequencies: evaluate every tree, test its output
// against each label, and tally the matches through the bit adder.
std::vector<BitCiphertextVector> label_frequencies(const EvalKey& ek, const ForestModel& forest,
                                                   const bin::EncryptedInputBin& input,
                                                   const ForestOptions& opts) {
    const int n_trees = static_cast<int>(forest.trees.size());
    const uint32_t lb = bin::label_bits(forest.labels);
    std::vector<std::vector<Ciphertext>> tree_outputs(n_trees);
    const bool parallel = opts.parallel;
    (void)parallel;
    PDTE_PRAGMA(omp parallel for schedule(dynamic) if (parallel))
    for (int j = 0; j < n_trees; ++j)
        tree_outputs[j] = bin::run(ek, forest.trees[j], input, opts.tree_opts).outputs;

    const int k = static_cast<int>(forest.labels);
    std::vector<BitCiphertextVector> freq(k);
    PDTE_PRAGMA(omp parallel for schedule(dynamic) if (parallel))
    for (int i = 0; i < k; ++i) {
        BitCiphertextVector label_bits_ct = trivial_bits(ek, static_cast<uint64_t>(i), lb);
        std::vector<Ciphertext> matches(n_trees);
        for (int j = 0; j < n_trees; ++j)
            matches[j] = she_equal(ek, tree_outputs[j], label_bits_ct);
        freq[i] = she_full_adder(ek, matches);
    }
    return freq;
}

Ciphertext select_by_flags(const EvalKey& ek, const ForestModel& forest,
                           const std::vector<Ciphertext>& flags) {
    const uint32_t lb = bin::label_bits(forest.labels);
    Ciphertext result = ek.encrypt_trivial(0);
    for (size_t i = 0; i < flags.size(); ++i) {
        SlotVector packed(lb);
        for (uint32_t b = 0; b < lb; ++b) packed[b] = (uint64_t(i) >> (lb - 1 - b)) & 1;
        result = ek.add(result, ek.mul(flags[i], ek.encrypt_trivial_packed(packed)));
    }
    return result;
}

}  // namespace

Ciphertext evaluate_majority(const EvalKey& ek, const ForestModel& forest,
                             const bin::EncryptedInputBin& input, const ForestOptions& opts) {
    validate_forest(forest);
    std::vector<BitCiphertextVector> freq = label_frequencies(ek, forest, input, opts);
    const uint64_t n_trees = forest.trees.size();
    const uint64_t threshold = (n_trees + 1) / 2;
    const uint32_t fb = bit_length(n_trees);
    BitCiphertextVector threshold_bits = trivial_bits(ek, threshold, fb);

    const int k = static_cast<int>(forest.labels);
    std::vector<Ciphertext> flags(k);
    const bool parallel = opts.parallel;
    (void)parallel;
    PDTE_PRAGMA(omp parallel for schedule(dynamic) if (parallel))
    for (int i = 0; i < k; ++i) {
        // f_i >= t realized as NOT [t > f_i]
        CompareResult cmp = she_compare(ek, freq[i], threshold_bits);
        flags[i] = ek.add(cmp.lt, ek.encrypt_trivial(1));
    }
    return select_by_flags(ek, forest, flags);
}

Ciphertext evaluate_argmax(const EvalKey& ek, const ForestModel& forest,
                           const bin::EncryptedInputBin& input, const ForestOptions& opts) {
    validate_forest(forest);
    std::vector<BitCiphertextVector> freq = label_frequencies(ek, forest, input, opts);
    const int k = static_cast<int>(forest.labels);

    // beats[i][j] = [f_i > f_j], diagonal fixed to 1.
    std::vector<std::vector<Ciphertext>> beats(k, std::vector<Ciphertext>(k));
    for (int i = 0; i < k; ++i) beats[i][i] = ek.encrypt_trivial(1);
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) pairs.emplace_back(i, j);
    const int n_pairs = static_cast<int>(pairs.size());
    const bool parallel = opts.parallel;
    (void)parallel;
    PDTE_PRAGMA(omp parallel for schedule(dynamic) if (parallel))
    for (int idx = 0; idx < n_pairs; ++idx) {
        auto [i, j] = pairs[idx];
        CompareResult cmp = she_compare(ek, freq[i], freq[j]);
        beats[i][j] = cmp.gt;
        beats[j][i] = cmp.lt;
    }

    const uint32_t rb = bit_length(static_cast<uint64_t>(k));
    BitCiphertextVector k_bits = trivial_bits(ek, static_cast<uint64_t>(k), rb);
    std::vector<Ciphertext> flags(k);
    PDTE_PRAGMA(omp parallel for schedule(dynamic) if (parallel))
    for (int i = 0; i < k; ++i) {
        BitCiphertextVector rank = she_full_adder(ek, beats[i]);
        flags[i] = she_equal(ek, rank, k_bits);
    }
    return select_by_flags(ek, forest, flags);
}

uint64_t decode_forest_result(const SecretKey& sk, const Ciphertext& result, uint64_t k) {
    const uint32_t lb = bin::label_bits(k);
    SlotVector v = sk.decrypt(result);
    uint64_t label = 0;
    for (uint32_t j = 0; j < lb; ++j) label = (label << 1) | (v[j] & 1);
    return label;
}

}  // namespace pdte::forest
