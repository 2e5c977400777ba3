#include "doctest.h"

#include "pda/bytes.hpp"
#include "pda/crypto.hpp"

using namespace pda;

namespace {

std::string hash_hex(std::string_view s) {
    auto digest = crypto::sha256(to_bytes(s));
    return to_hex(Bytes(digest.begin(), digest.end()));
}

}  // namespace

TEST_CASE("sha256 matches published test vectors") {
    crypto::init();
    CHECK(hash_hex("") ==
          "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(hash_hex("abc") ==
          "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(hash_hex("The quick brown fox jumps over the lazy dog") ==
          "d7a8fbb307d7809469ca9abcb0082e4f8d5651e46d3cdb762d02d0bf37c9e592");
}

TEST_CASE("detached signatures verify and reject tampering") {
    auto kp = crypto::sign_keygen(std::nullopt);
    Bytes msg = to_bytes("payload under test");
    Bytes sig = crypto::sign_detached(msg, kp.secret_key);
    REQUIRE(sig.size() == crypto::kSignatureBytes);
    CHECK(crypto::sign_verify(msg, sig, kp.public_key));

    Bytes wrong_msg = msg;
    wrong_msg[0] ^= 1;
    CHECK_FALSE(crypto::sign_verify(wrong_msg, sig, kp.public_key));

    Bytes wrong_sig = sig;
    wrong_sig[10] ^= 1;
    CHECK_FALSE(crypto::sign_verify(msg, wrong_sig, kp.public_key));

    auto other = crypto::sign_keygen(std::nullopt);
    CHECK_FALSE(crypto::sign_verify(msg, sig, other.public_key));
}

TEST_CASE("seeded keygen is deterministic, unseeded is not") {
    crypto::Seed seed{};
    seed.fill(0x5a);
    auto a = crypto::sign_keygen(seed);
    auto b = crypto::sign_keygen(seed);
    CHECK(a.public_key == b.public_key);
    CHECK(a.secret_key == b.secret_key);

    auto c = crypto::sign_keygen(std::nullopt);
    auto d = crypto::sign_keygen(std::nullopt);
    CHECK(c.public_key != d.public_key);
}

TEST_CASE("key agreement is symmetric") {
    auto a = crypto::agree_keygen(std::nullopt);
    auto b = crypto::agree_keygen(std::nullopt);
    auto ab = crypto::agree_shared(a.secret_key, b.public_key);
    auto ba = crypto::agree_shared(b.secret_key, a.public_key);
    CHECK(ab == ba);

    auto c = crypto::agree_keygen(std::nullopt);
    CHECK(crypto::agree_shared(a.secret_key, c.public_key) != ab);
}

TEST_CASE("aead seal/open round trip with associated data binding") {
    crypto::SymmetricKey key{};
    for (std::size_t i = 0; i < key.size(); ++i) key[i] = static_cast<std::uint8_t>(i * 7 + 1);
    crypto::Nonce nonce{};
    nonce.fill(0x42);
    Bytes plain = to_bytes("secret across the wire");
    Bytes ad = to_bytes("header");

    auto sealed = crypto::aead_seal(key, nonce, plain, ad);
    REQUIRE(sealed.ciphertext.size() == plain.size());
    auto opened = crypto::aead_open(key, nonce, sealed.ciphertext, sealed.tag, ad);
    REQUIRE(opened.has_value());
    CHECK(*opened == plain);

    SUBCASE("flipped ciphertext fails") {
        Bytes ct = sealed.ciphertext;
        ct[0] ^= 1;
        CHECK_FALSE(crypto::aead_open(key, nonce, ct, sealed.tag, ad).has_value());
    }
    SUBCASE("flipped tag fails") {
        auto tag = sealed.tag;
        tag[0] ^= 1;
        CHECK_FALSE(crypto::aead_open(key, nonce, sealed.ciphertext, tag, ad).has_value());
    }
    SUBCASE("different associated data fails") {
        CHECK_FALSE(crypto::aead_open(key, nonce, sealed.ciphertext, sealed.tag,
                                      to_bytes("other"))
                        .has_value());
    }
    SUBCASE("wrong key fails") {
        crypto::SymmetricKey other = key;
        other[0] ^= 1;
        CHECK_FALSE(
            crypto::aead_open(other, nonce, sealed.ciphertext, sealed.tag, ad).has_value());
    }
    SUBCASE("wrong nonce fails") {
        crypto::Nonce other = nonce;
        other[0] ^= 1;
        CHECK_FALSE(
            crypto::aead_open(key, other, sealed.ciphertext, sealed.tag, ad).has_value());
    }
}

TEST_CASE("degenerate agreement keys are refused") {
    auto a = crypto::agree_keygen(std::nullopt);
    Bytes zero(crypto::kAgreePublicBytes, 0);
    CHECK_THROWS(crypto::agree_shared(a.secret_key, zero));
}

TEST_CASE("random_bytes returns distinct buffers of the requested size") {
    Bytes a = crypto::random_bytes(32);
    Bytes b = crypto::random_bytes(32);
    REQUIRE(a.size() == 32);
    CHECK(a != b);
}

TEST_CASE("hex helpers round trip") {
    Bytes b{0x00, 0x0f, 0xf0, 0xff};
    CHECK(to_hex(b) == "000ff0ff");
    CHECK(from_hex("000ff0ff") == b);
    CHECK_THROWS(from_hex("0g"));
    CHECK_THROWS(from_hex("abc"));  // odd length
}
