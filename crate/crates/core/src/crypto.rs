//! Pairwise key agreement and authenticated encryption for the relayed
//! user-to-user channel: X25519, HKDF-SHA256 and ChaCha20-Poly1305.

use chacha20poly1305::aead::{Aead, KeyInit};
use chacha20poly1305::{ChaCha20Poly1305, Key, Nonce};
use hkdf::Hkdf;
use rand::{CryptoRng, RngCore};
use sha2::Sha256;
use x25519_dalek::{PublicKey, StaticSecret};

pub const PUBLIC_KEY_LEN: usize = 32;

pub struct KeyPair {
    pub public: [u8; PUBLIC_KEY_LEN],
    secret: StaticSecret,
}

impl std::fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeyPair").field("public", &self.public).finish_non_exhaustive()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub struct SessionKey([u8; 32]);

impl std::fmt::Debug for SessionKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("SessionKey(..)")
    }
}

pub fn ka_gen<R: RngCore + CryptoRng>(rng: &mut R) -> KeyPair {
    let secret = StaticSecret::random_from_rng(rng);
    let public = PublicKey::from(&secret).to_bytes();
    KeyPair { public, secret }
}

/// Symmetric in the two parties.
pub fn ka_agree(public_other: &[u8; PUBLIC_KEY_LEN], own: &KeyPair) -> SessionKey {
    let shared = own.secret.diffie_hellman(&PublicKey::from(*public_other));
    let hk = Hkdf::<Sha256>::new(Some(b"priroagg-ka"), shared.as_bytes());
    let mut key = [0u8; 32];
    hk.expand(b"session", &mut key).expect("32 bytes is a valid HKDF length");
    SessionKey(key)
}

/// Nonce unique per `(iteration, sender, recipient)`; a pairwise key
/// encrypts one bundle per direction per iteration.
pub fn nonce_for(iteration: u32, sender: u32, recipient: u32) -> [u8; 12] {
    let mut n = [0u8; 12];
    n[..4].copy_from_slice(&iteration.to_le_bytes());
    n[4..8].copy_from_slice(&sender.to_le_bytes());
    n[8..].copy_from_slice(&recipient.to_le_bytes());
    n
}

pub fn ae_enc(key: &SessionKey, nonce: &[u8; 12], msg: &[u8]) -> Vec<u8> {
    ChaCha20Poly1305::new(Key::from_slice(&key.0))
        .encrypt(Nonce::from_slice(nonce), msg)
        .expect("in-memory encryption cannot fail")
}

/// `None` on any authentication failure.
pub fn ae_dec(key: &SessionKey, nonce: &[u8; 12], ct: &[u8]) -> Option<Vec<u8>> {
    ChaCha20Poly1305::new(Key::from_slice(&key.0))
        .decrypt(Nonce::from_slice(nonce), ct)
        .ok()
}
