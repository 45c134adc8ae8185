#pragma once

#include <stdexcept>
#include <string>

namespace pdte {

// Raised when a homomorphic multiplication would exceed the level budget,
// or when a ciphertext with exhausted capacity is decrypted.
class CapacityError : public std::runtime_error {
public:
    explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed model / key / ciphertext input.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Request rejected by the server before any evaluation started.
class ProtocolError : public std::runtime_error {
public:
    explicit ProtocolError(const std::string& msg) : std::runtime_error(msg) {}
};

// Client-side result decoding found zero or multiple label candidates.
class AmbiguityError : public std::runtime_error {
public:
    explicit AmbiguityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Single-use randomizer material was reused or exhausted.
class SessionError : public std::runtime_error {
public:
    explicit SessionError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace pdte
