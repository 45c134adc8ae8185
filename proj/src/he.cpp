#include "pdte/he.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace pdte {

namespace {

uint64_t mul_mod(uint64_t a, uint64_t b, uint64_t p) {
    return static_cast<uint64_t>((static_cast<__uint128_t>(a) * b) % p);
}

uint64_t add_mod(uint64_t a, uint64_t b, uint64_t p) {
    __uint128_t s = static_cast<__uint128_t>(a) + b;
    return static_cast<uint64_t>(s % p);
}

uint64_t sub_mod(uint64_t a, uint64_t b, uint64_t p) { return (a + (p - b % p)) % p; }

ContextId derive_context_id(const HeParams& p) {
    // Deterministic in the parameters so independently loaded key files
    // interoperate. SplitMix over the parameter words.
    uint64_t h = 0x9e3779b97f4a7c15ULL;
    auto mix = [&h](uint64_t x) {
        h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h *= 0xbf58476d1ce4e5b9ULL;
        h ^= h >> 27;
    };
    mix(static_cast<uint64_t>(p.mode));
    mix(p.modulus);
    mix(p.slots);
    mix(p.levels);
    mix(p.seed);
    uint64_t lo = h;
    mix(0x94d049bb133111ebULL);
    uint64_t hi = h;
    ContextId id{};
    for (int i = 0; i < 8; ++i) {
        id[i] = static_cast<uint8_t>(lo >> (8 * i));
        id[8 + i] = static_cast<uint8_t>(hi >> (8 * i));
    }
    return id;
}

void put_u32be(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void put_u64be(std::vector<uint8_t>& out, uint64_t v) {
    for (int i = 7; i >= 0; --i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t get_u32be(const uint8_t* p) {
    return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) | (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

uint64_t get_u64be(const uint8_t* p) {
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
    return v;
}

}  // namespace

HeContext::HeContext(const HeParams& params) : params_(params), rng_(params.seed) {
    if (params_.slots < 1) throw std::invalid_argument("slot count must be at least 1");
    if (params_.levels < 1) throw std::invalid_argument("level budget must be at least 1");
    if (params_.modulus < 2) throw std::invalid_argument("plaintext modulus must be at least 2");
    if (params_.mode == SchemeMode::Binary && params_.modulus != 2)
        throw std::invalid_argument("binary mode requires modulus 2");
    if (params_.mode == SchemeMode::Integer && params_.modulus == 2)
        throw std::invalid_argument("integer mode requires a modulus larger than 2");
    id_ = derive_context_id(params_);
}

KeyTriple keygen(const HeParams& params) {
    auto ctx = std::make_shared<const HeContext>(params);
    return KeyTriple{PublicKey(ctx), SecretKey(ctx), EvalKey(ctx)};
}

Ciphertext PublicKey::encrypt(uint64_t value) const {
    if (value >= ctx_->modulus()) throw std::invalid_argument("plaintext value out of range");
    return Ciphertext(SlotVector(ctx_->slots(), value), 0, ctx_->id());
}

Ciphertext PublicKey::encrypt_packed(const SlotVector& values) const {
    if (values.size() > ctx_->slots()) throw std::invalid_argument("too many slot values");
    SlotVector slots(ctx_->slots(), 0);
    for (size_t i = 0; i < values.size(); ++i) {
        if (values[i] >= ctx_->modulus()) throw std::invalid_argument("plaintext value out of range");
        slots[i] = values[i];
    }
    return Ciphertext(std::move(slots), 0, ctx_->id());
}

Ciphertext EvalKey::encrypt_trivial(uint64_t value) const {
    if (value >= ctx_->modulus()) throw std::invalid_argument("plaintext value out of range");
    return Ciphertext(SlotVector(ctx_->slots(), value), 0, ctx_->id());
}

Ciphertext EvalKey::encrypt_trivial_packed(const SlotVector& values) const {
    if (values.size() > ctx_->slots()) throw std::invalid_argument("too many slot values");
    SlotVector slots(ctx_->slots(), 0);
    for (size_t i = 0; i < values.size(); ++i) {
        if (values[i] >= ctx_->modulus()) throw std::invalid_argument("plaintext value out of range");
        slots[i] = values[i];
    }
    return Ciphertext(std::move(slots), 0, ctx_->id());
}

SlotVector SecretKey::decrypt(const Ciphertext& ct) const {
    if (ct.context_id() != ctx_->id()) throw std::invalid_argument("ciphertext from another context");
    if (ct.slots().size() != ctx_->slots()) throw CapacityError("malformed ciphertext payload");
    if (ct.depth() > ctx_->levels())
        throw CapacityError("ciphertext capacity exhausted, decryption failed");
    return ct.slots();
}

uint64_t SecretKey::decrypt_slot(const Ciphertext& ct, uint32_t slot) const {
    SlotVector v = decrypt(ct);
    if (slot >= v.size()) throw std::invalid_argument("slot index out of range");
    return v[slot];
}

void EvalKey::require_same_context(const Ciphertext& a, const Ciphertext& b) const {
    if (a.context_id() != ctx_->id() || b.context_id() != ctx_->id())
        throw std::invalid_argument("ciphertexts from different contexts");
    if (a.slots().size() != ctx_->slots() || b.slots().size() != ctx_->slots())
        throw std::invalid_argument("malformed ciphertext payload");
}

Ciphertext EvalKey::add(const Ciphertext& a, const Ciphertext& b) const {
    require_same_context(a, b);
    const uint64_t p = ctx_->modulus();
    SlotVector out(ctx_->slots());
    for (size_t i = 0; i < out.size(); ++i) out[i] = add_mod(a.slots()[i], b.slots()[i], p);
    ctx_->counters().on_add();
    return Ciphertext(std::move(out), std::max(a.depth(), b.depth()), ctx_->id());
}

Ciphertext EvalKey::sub(const Ciphertext& a, const Ciphertext& b) const {
    require_same_context(a, b);
    const uint64_t p = ctx_->modulus();
    SlotVector out(ctx_->slots());
    for (size_t i = 0; i < out.size(); ++i) out[i] = sub_mod(a.slots()[i], b.slots()[i], p);
    ctx_->counters().on_add();
    return Ciphertext(std::move(out), std::max(a.depth(), b.depth()), ctx_->id());
}

Ciphertext EvalKey::mul(const Ciphertext& a, const Ciphertext& b) const {
    require_same_context(a, b);
    const uint32_t depth = std::max(a.depth(), b.depth()) + 1;
    if (depth > ctx_->levels())
        throw CapacityError("level budget exhausted at depth " + std::to_string(depth));
    const uint64_t p = ctx_->modulus();
    SlotVector out(ctx_->slots());
    for (size_t i = 0; i < out.size(); ++i) out[i] = mul_mod(a.slots()[i], b.slots()[i], p);
    ctx_->counters().on_mul(depth);
    return Ciphertext(std::move(out), depth, ctx_->id());
}

Ciphertext EvalKey::shift_left(const Ciphertext& c, uint32_t offset) const {
    require_same_context(c, c);
    if (offset > ctx_->slots()) throw std::invalid_argument("shift offset exceeds slot count");
    SlotVector out(ctx_->slots(), 0);
    for (size_t i = 0; i + offset < out.size(); ++i) out[i] = c.slots()[i + offset];
    return Ciphertext(std::move(out), c.depth(), ctx_->id());
}

Ciphertext EvalKey::shift_right(const Ciphertext& c, uint32_t offset) const {
    require_same_context(c, c);
    if (offset > ctx_->slots()) throw std::invalid_argument("shift offset exceeds slot count");
    SlotVector out(ctx_->slots(), 0);
    for (size_t i = 0; i + offset < out.size(); ++i) out[i + offset] = c.slots()[i];
    return Ciphertext(std::move(out), c.depth(), ctx_->id());
}

bool EvalKey::capacity_check(const Ciphertext& ct) const {
    if (ct.context_id() != ctx_->id()) return false;
    if (ct.slots().size() != ctx_->slots()) return false;
    if (ct.depth() > ctx_->levels()) return false;  // capacity L - depth would be negative
    for (uint64_t v : ct.slots())
        if (v >= ctx_->modulus()) return false;
    return true;
}

std::vector<uint8_t> serialize_ciphertext(const Ciphertext& ct) {
    std::vector<uint8_t> out;
    out.reserve(24 + 8 * ct.slots().size());
    out.insert(out.end(), ct.context_id().begin(), ct.context_id().end());
    put_u32be(out, ct.depth());
    put_u32be(out, static_cast<uint32_t>(ct.slots().size()));
    for (uint64_t v : ct.slots()) put_u64be(out, v);
    return out;
}

Ciphertext parse_ciphertext(const uint8_t* data, size_t size) {
    if (size < 24) throw ParseError("ciphertext blob too short");
    ContextId id{};
    std::copy(data, data + 16, id.begin());
    uint32_t depth = get_u32be(data + 16);
    uint32_t count = get_u32be(data + 20);
    if (size != 24 + size_t(count) * 8) throw ParseError("ciphertext blob length mismatch");
    SlotVector slots(count);
    for (uint32_t i = 0; i < count; ++i) slots[i] = get_u64be(data + 24 + size_t(i) * 8);
    return Ciphertext(std::move(slots), depth, id);
}

std::string serialize_key_params(const HeParams& params, const std::string& role) {
    std::ostringstream os;
    os << "{\"mode\": \"" << (params.mode == SchemeMode::Binary ? "bin" : "int") << "\", "
       << "\"modulus\": " << params.modulus << ", "
       << "\"slots\": " << params.slots << ", "
       << "\"levels\": " << params.levels << ", "
       << "\"seed\": " << params.seed << ", "
       << "\"role\": \"" << role << "\"}\n";
    return os.str();
}

HeParams parse_key_params(const std::string& text, const std::string& expected_role) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad key file: ") + e.what());
    }
    HeParams p;
    try {
        std::string mode = j.at("mode").get<std::string>();
        if (mode == "bin")
            p.mode = SchemeMode::Binary;
        else if (mode == "int")
            p.mode = SchemeMode::Integer;
        else
            throw ParseError("bad key file: unknown mode " + mode);
        p.modulus = j.at("modulus").get<uint64_t>();
        p.slots = j.at("slots").get<uint32_t>();
        p.levels = j.at("levels").get<uint32_t>();
        p.seed = j.at("seed").get<uint64_t>();
        std::string role = j.at("role").get<std::string>();
        if (role != expected_role)
            throw ParseError("key file role is '" + role + "', expected '" + expected_role + "'");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad key file: ") + e.what());
    }
    return p;
}

uint64_t uniform_below(std::mt19937_64& rng, uint64_t bound) {
    return std::uniform_int_distribution<uint64_t>(0, bound - 1)(rng);
}

uint64_t uniform_nonzero(std::mt19937_64& rng, uint64_t p) {
    return std::uniform_int_distribution<uint64_t>(1, p - 1)(rng);
}

}  // namespace pdte
