#pragma once

#include "pda/crypto.hpp"
#include "pda/types.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace pda {

class InvalidDidDocument : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// transport-level rejections; hostile input on the wire is expected, these
// carry no secrets
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
class TamperError : public TransportError {
public:
    TamperError() : TransportError("envelope failed authentication") {}
};
class ReplayError : public TransportError {
public:
    ReplayError() : TransportError("envelope counter already seen") {}
};
class WrongRecipientError : public TransportError {
public:
    WrongRecipientError() : TransportError("envelope addressed to another party") {}
};

struct DidDocument {
    std::string did;
    Bytes signing_public_key;
    Bytes agreement_public_key;
    std::optional<Bytes> attestation_public_key;  // set when the agent hosts an enclave
    Bytes self_signature;

    bool operator==(const DidDocument&) const = default;

    Bytes signing_bytes() const;
    void encode_to(Encoder& e) const;
    static DidDocument decode_from(Decoder& d);
};

bool verify_did_document(const DidDocument& doc);

// did:pda:z... derived from the first 20 bytes of the signing key's content hash
std::string did_from_signing_key(std::span<const std::uint8_t> signing_public_key);

struct AgentIdentity {
    std::string did;
    crypto::SignKeypair signing;
    crypto::AgreeKeypair agreement;

    DidDocument make_document(const std::optional<Bytes>& attestation_public_key = std::nullopt) const;
};

AgentIdentity generate_identity(const std::optional<crypto::Seed>& seed = std::nullopt);
crypto::Seed parse_seed(std::span<const std::uint8_t> raw);  // throws on length != 32

struct MessageEnvelope {
    std::string sender_did;
    std::string recipient_did;
    std::uint64_t counter = 0;
    Bytes ciphertext;
    std::array<std::uint8_t, crypto::kAeadTagBytes> aead_tag{};
    Bytes sender_signature;

    bool operator==(const MessageEnvelope&) const = default;

    Bytes signing_bytes() const;  // (sender, recipient, counter, ciphertext)
    void encode_to(Encoder& e) const;
    static MessageEnvelope decode_from(Decoder& d);
};

// Long-lived session between one local identity and one peer. Counters are
// per direction and strictly monotone; concurrent packs must be serialized
// by the owner.
struct SecureChannel {
    std::string local_did;
    std::string peer_did;
    crypto::SymmetricKey session_key{};
    std::uint64_t send_counter = 0;  // last counter used by us
    std::uint64_t recv_counter = 0;  // last counter accepted from the peer
    Bytes local_signing_secret;
    Bytes peer_signing_public;
};

SecureChannel establish_channel(const AgentIdentity& self, const DidDocument& peer);

MessageEnvelope pack(SecureChannel& channel, std::span<const std::uint8_t> plaintext);

// returns plaintext only if addressing, freshness, signature and AEAD all pass
Bytes unpack(SecureChannel& channel, const MessageEnvelope& envelope);

}  // namespace pda
