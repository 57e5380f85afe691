//! Content digests tying outputs to the parameters that produced them.

use serde::Serialize;
use sha2::{Digest, Sha256};

pub type Hash = [u8; 32];

/// SHA-256 of the canonical JSON encoding of `value`.
pub fn digest<T: Serialize + ?Sized>(value: &T) -> Hash {
    let bytes = serde_json::to_vec(value).expect("serializable value");
    Sha256::digest(&bytes).into()
}

pub fn to_hex(h: &Hash) -> String {
    hex::encode(h)
}
