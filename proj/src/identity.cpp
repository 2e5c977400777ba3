#include "pda/identity.hpp"

namespace pda {

std::string did_from_signing_key(std::span<const std::uint8_t> signing_public_key) {
    auto digest = crypto::sha256(signing_public_key);
    return "did:pda:" + multibase58(std::span<const std::uint8_t>(digest.data(), 20));
}

crypto::Seed parse_seed(std::span<const std::uint8_t> raw) {
    if (raw.size() != crypto::kSeedBytes) throw std::invalid_argument("seed must be exactly 32 bytes");
    crypto::Seed seed;
    std::copy(raw.begin(), raw.end(), seed.begin());
    return seed;
}

AgentIdentity generate_identity(const std::optional<crypto::Seed>& seed) {
    AgentIdentity id;
    if (seed) {
        id.signing = crypto::sign_keygen(*seed);
        // domain-separated sub-seed for the agreement keypair
        Encoder e;
        e.fixed(*seed);
        e.str("pda-agreement");
        id.agreement = crypto::agree_keygen(parse_seed(crypto::sha256(e.buffer())));
    } else {
        id.signing = crypto::sign_keygen();
        id.agreement = crypto::agree_keygen();
    }
    id.did = did_from_signing_key(id.signing.public_key);
    return id;
}

Bytes DidDocument::signing_bytes() const {
    Encoder e;
    e.str(did);
    e.bytes(signing_public_key);
    e.bytes(agreement_public_key);
    e.boolean(attestation_public_key.has_value());
    if (attestation_public_key) e.bytes(*attestation_public_key);
    return e.take();
}

void DidDocument::encode_to(Encoder& e) const {
    e.raw(signing_bytes());
    e.bytes(self_signature);
}

DidDocument DidDocument::decode_from(Decoder& d) {
    DidDocument doc;
    doc.did = d.str();
    doc.signing_public_key = d.bytes();
    doc.agreement_public_key = d.bytes();
    if (d.boolean()) doc.attestation_public_key = d.bytes();
    doc.self_signature = d.bytes();
    return doc;
}

bool verify_did_document(const DidDocument& doc) {
    if (doc.signing_public_key.size() != crypto::kSignPublicBytes) return false;
    if (doc.agreement_public_key.size() != crypto::kAgreePublicBytes) return false;
    if (doc.did != did_from_signing_key(doc.signing_public_key)) return false;
    return crypto::sign_verify(doc.signing_bytes(), doc.self_signature, doc.signing_public_key);
}

DidDocument AgentIdentity::make_document(const std::optional<Bytes>& attestation_public_key) const {
    DidDocument doc;
    doc.did = did;
    doc.signing_public_key = signing.public_key;
    doc.agreement_public_key = agreement.public_key;
    doc.attestation_public_key = attestation_public_key;
    doc.self_signature = crypto::sign_detached(doc.signing_bytes(), signing.secret_key);
    return doc;
}

SecureChannel establish_channel(const AgentIdentity& self, const DidDocument& peer) {
    if (!verify_did_document(peer)) throw InvalidDidDocument("peer DID document failed verification");
    if (peer.did == self.did) throw InvalidDidDocument("cannot establish a channel with self");

    auto shared = crypto::agree_shared(self.agreement.secret_key, peer.agreement_public_key);

    // both sides derive the same key: DIDs enter in lexicographic order
    const std::string& lo = self.did < peer.did ? self.did : peer.did;
    const std::string& hi = self.did < peer.did ? peer.did : self.did;
    Encoder e;
    e.fixed(shared);
    e.str(lo);
    e.str(hi);

    SecureChannel ch;
    ch.local_did = self.did;
    ch.peer_did = peer.did;
    ch.session_key = crypto::sha256(e.buffer());
    ch.local_signing_secret = self.signing.secret_key;
    ch.peer_signing_public = peer.signing_public_key;
    return ch;
}

Bytes MessageEnvelope::signing_bytes() const {
    Encoder e;
    e.str(sender_did);
    e.str(recipient_did);
    e.u64(counter);
    e.bytes(ciphertext);
    return e.take();
}

void MessageEnvelope::encode_to(Encoder& e) const {
    e.str(sender_did);
    e.str(recipient_did);
    e.u64(counter);
    e.bytes(ciphertext);
    e.fixed(aead_tag);
    e.bytes(sender_signature);
}

MessageEnvelope MessageEnvelope::decode_from(Decoder& d) {
    MessageEnvelope env;
    env.sender_did = d.str();
    env.recipient_did = d.str();
    env.counter = d.u64();
    env.ciphertext = d.bytes();
    env.aead_tag = d.fixed<crypto::kAeadTagBytes>();
    env.sender_signature = d.bytes();
    return env;
}

// nonce = first 4 bytes of H(sender did) || counter, so the two directions of
// a shared session key can never collide
static crypto::Nonce direction_nonce(const std::string& sender_did, std::uint64_t counter) {
    auto h = crypto::sha256(to_bytes(sender_did));
    crypto::Nonce nonce{};
    for (int i = 0; i < 4; ++i) nonce[i] = h[i];
    for (int i = 0; i < 8; ++i) nonce[4 + i] = static_cast<std::uint8_t>(counter >> (56 - 8 * i));
    return nonce;
}

static Bytes envelope_associated_data(const std::string& sender, const std::string& recipient,
                                      std::uint64_t counter) {
    Encoder e;
    e.str(sender);
    e.str(recipient);
    e.u64(counter);
    return e.take();
}

MessageEnvelope pack(SecureChannel& channel, std::span<const std::uint8_t> plaintext) {
    MessageEnvelope env;
    env.sender_did = channel.local_did;
    env.recipient_did = channel.peer_did;
    env.counter = ++channel.send_counter;

    auto sealed = crypto::aead_seal(channel.session_key, direction_nonce(env.sender_did, env.counter),
                                    plaintext,
                                    envelope_associated_data(env.sender_did, env.recipient_did, env.counter));
    env.ciphertext = std::move(sealed.ciphertext);
    env.aead_tag = sealed.tag;
    env.sender_signature = crypto::sign_detached(env.signing_bytes(), channel.local_signing_secret);
    return env;
}

Bytes unpack(SecureChannel& channel, const MessageEnvelope& envelope) {
    if (envelope.recipient_did != channel.local_did) throw WrongRecipientError();
    if (envelope.sender_did != channel.peer_did) throw WrongRecipientError();
    if (envelope.counter <= channel.recv_counter) throw ReplayError();
    if (!crypto::sign_verify(envelope.signing_bytes(), envelope.sender_signature,
                             channel.peer_signing_public))
        throw TamperError();

    auto plaintext = crypto::aead_open(
        channel.session_key, direction_nonce(envelope.sender_did, envelope.counter),
        envelope.ciphertext, envelope.aead_tag,
        envelope_associated_data(envelope.sender_did, envelope.recipient_did, envelope.counter));
    if (!plaintext) throw TamperError();

    channel.recv_counter = envelope.counter;
    return std::move(*plaintext);
}

}  // namespace pda
