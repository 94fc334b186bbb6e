//! SHA-224 helpers.

use sha2::{Digest, Sha224};

/// A 224-bit digest. Byte arrays compare lexicographically, which is the same
/// as comparing them as big-endian unsigned integers.
pub type Digest224 = [u8; 28];

pub fn sha224(bytes: &[u8]) -> Digest224 {
    let out = Sha224::digest(bytes);
    let mut d = [0u8; 28];
    d.copy_from_slice(&out);
    d
}

/// Lowercase hex, 56 characters.
pub fn sha224_hex(bytes: &[u8]) -> String {
    hex::encode(sha224(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_vectors() {
        assert_eq!(
            sha224_hex(b""),
            "d14a028c2a3a2bc9476102bb288234c415a2b01f828ea62ac5b3e42f"
        );
        assert_eq!(
            sha224_hex(b"abc"),
            "23097d223405d8228642a477bda255b32aadbce4bda0b3f7e36c9da7"
        );
        assert_eq!(
            sha224_hex(b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"),
            "75388b16512776cc5dba5da1fd890150b0c6455cb4f58b1952522525"
        );
    }

    #[test]
    fn byte_order_matches_numeric_order() {
        let mut a = [0u8; 28];
        let mut b = [0u8; 28];
        a[0] = 1;
        b[27] = 0xff;
        assert!(a > b);
    }
}
