#pragma once

#include "pda/bytes.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>

// Thin wrappers over libsodium: Ed25519 signatures, X25519 agreement,
// ChaCha20-Poly1305-IETF AEAD, SHA-256.
namespace pda::crypto {

inline constexpr std::size_t kSeedBytes = 32;
inline constexpr std::size_t kSignPublicBytes = 32;
inline constexpr std::size_t kSignSecretBytes = 64;
inline constexpr std::size_t kSignatureBytes = 64;
inline constexpr std::size_t kAgreePublicBytes = 32;
inline constexpr std::size_t kAgreeSecretBytes = 32;
inline constexpr std::size_t kSymmetricKeyBytes = 32;
inline constexpr std::size_t kNonceBytes = 12;
inline constexpr std::size_t kAeadTagBytes = 16;

using Seed = std::array<std::uint8_t, kSeedBytes>;
using SymmetricKey = std::array<std::uint8_t, kSymmetricKeyBytes>;
using Nonce = std::array<std::uint8_t, kNonceBytes>;

void init();  // idempotent; called lazily by everything below

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data);

struct SignKeypair {
    Bytes public_key;  // 32 bytes
    Bytes secret_key;  // 64 bytes
};

struct AgreeKeypair {
    Bytes public_key;  // 32 bytes
    Bytes secret_key;  // 32 bytes
};

SignKeypair sign_keygen(const std::optional<Seed>& seed = std::nullopt);
Bytes sign_detached(std::span<const std::uint8_t> message, std::span<const std::uint8_t> secret_key);
bool sign_verify(std::span<const std::uint8_t> message, std::span<const std::uint8_t> signature,
                 std::span<const std::uint8_t> public_key);

AgreeKeypair agree_keygen(const std::optional<Seed>& seed = std::nullopt);
// X25519 scalar multiplication; throws on the all-zero degenerate output
std::array<std::uint8_t, 32> agree_shared(std::span<const std::uint8_t> my_secret,
                                          std::span<const std::uint8_t> their_public);

struct AeadSealed {
    Bytes ciphertext;
    std::array<std::uint8_t, kAeadTagBytes> tag;
};

AeadSealed aead_seal(const SymmetricKey& key, const Nonce& nonce,
                     std::span<const std::uint8_t> plaintext,
                     std::span<const std::uint8_t> associated_data);
std::optional<Bytes> aead_open(const SymmetricKey& key, const Nonce& nonce,
                               std::span<const std::uint8_t> ciphertext,
                               std::span<const std::uint8_t> tag,
                               std::span<const std::uint8_t> associated_data);

Bytes random_bytes(std::size_t n);

}  // namespace pda::crypto
