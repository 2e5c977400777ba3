#include "pda/crypto.hpp"

#include <sodium.h>

#include <cstring>
#include <stdexcept>

namespace pda::crypto {

void init() {
    static const int rc = sodium_init();
    if (rc < 0) throw std::runtime_error("sodium_init failed");
}

std::array<std::uint8_t, 32> sha256(std::span<const std::uint8_t> data) {
    init();
    std::array<std::uint8_t, 32> out;
    crypto_hash_sha256(out.data(), data.data(), data.size());
    return out;
}

SignKeypair sign_keygen(const std::optional<Seed>& seed) {
    init();
    SignKeypair kp;
    kp.public_key.resize(crypto_sign_PUBLICKEYBYTES);
    kp.secret_key.resize(crypto_sign_SECRETKEYBYTES);
    if (seed) {
        crypto_sign_seed_keypair(kp.public_key.data(), kp.secret_key.data(), seed->data());
    } else {
        crypto_sign_keypair(kp.public_key.data(), kp.secret_key.data());
    }
    return kp;
}

Bytes sign_detached(std::span<const std::uint8_t> message, std::span<const std::uint8_t> secret_key) {
    init();
    if (secret_key.size() != kSignSecretBytes) throw std::invalid_argument("bad signing secret key size");
    Bytes sig(crypto_sign_BYTES);
    crypto_sign_detached(sig.data(), nullptr, message.data(), message.size(), secret_key.data());
    return sig;
}

bool sign_verify(std::span<const std::uint8_t> message, std::span<const std::uint8_t> signature,
                 std::span<const std::uint8_t> public_key) {
    init();
    if (signature.size() != kSignatureBytes || public_key.size() != kSignPublicBytes) return false;
    return crypto_sign_verify_detached(signature.data(), message.data(), message.size(),
                                       public_key.data()) == 0;
}

AgreeKeypair agree_keygen(const std::optional<Seed>& seed) {
    init();
    AgreeKeypair kp;
    kp.secret_key.resize(crypto_scalarmult_SCALARBYTES);
    kp.public_key.resize(crypto_scalarmult_BYTES);
    if (seed) {
        std::memcpy(kp.secret_key.data(), seed->data(), kSeedBytes);
    } else {
        randombytes_buf(kp.secret_key.data(), kp.secret_key.size());
    }
    crypto_scalarmult_base(kp.public_key.data(), kp.secret_key.data());
    return kp;
}

std::array<std::uint8_t, 32> agree_shared(std::span<const std::uint8_t> my_secret,
                                          std::span<const std::uint8_t> their_public) {
    init();
    if (my_secret.size() != kAgreeSecretBytes || their_public.size() != kAgreePublicBytes)
        throw std::invalid_argument("bad key-agreement key size");
    std::array<std::uint8_t, 32> shared;
    if (crypto_scalarmult(shared.data(), my_secret.data(), their_public.data()) != 0)
        throw std::runtime_error("degenerate X25519 shared secret");
    return shared;
}

AeadSealed aead_seal(const SymmetricKey& key, const Nonce& nonce,
                     std::span<const std::uint8_t> plaintext,
                     std::span<const std::uint8_t> associated_data) {
    init();
    AeadSealed out;
    out.ciphertext.resize(plaintext.size());
    unsigned long long tag_len = 0;
    crypto_aead_chacha20poly1305_ietf_encrypt_detached(
        out.ciphertext.data(), out.tag.data(), &tag_len, plaintext.data(), plaintext.size(),
        associated_data.data(), associated_data.size(), nullptr, nonce.data(), key.data());
    return out;
}

std::optional<Bytes> aead_open(const SymmetricKey& key, const Nonce& nonce,
                               std::span<const std::uint8_t> ciphertext,
                               std::span<const std::uint8_t> tag,
                               std::span<const std::uint8_t> associated_data) {
    init();
    if (tag.size() != kAeadTagBytes) return std::nullopt;
    Bytes plaintext(ciphertext.size());
    int rc = crypto_aead_chacha20poly1305_ietf_decrypt_detached(
        plaintext.data(), nullptr, ciphertext.data(), ciphertext.size(), tag.data(),
        associated_data.data(), associated_data.size(), nonce.data(), key.data());
    if (rc != 0) return std::nullopt;
    return plaintext;
}

Bytes random_bytes(std::size_t n) {
    init();
    Bytes out(n);
    randombytes_buf(out.data(), n);
    return out;
}

}  // namespace pda::crypto
