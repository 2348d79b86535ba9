//! Published known-answer vectors: RFC 8032 section 7.1 tests 1-3 for
//! Ed25519 and the 256-bit-key AES-GCM test cases 13-16 from the GCM
//! submission to NIST.

use verifi_core::crypto::{verify_sig, KeyPair, SymmetricKey};

use crate::Outcome;

struct Ed25519Case {
    secret: &'static str,
    public: &'static str,
    message: &'static str,
    signature: &'static str,
}

const ED25519: &[Ed25519Case] = &[
    Ed25519Case {
        secret: "9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60",
        public: "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a",
        message: "",
        signature: "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e065224901555fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b",
    },
    Ed25519Case {
        secret: "4ccd089b28ff96da9db6c346ec114e0f5b8a319f35aba624da8cf6ed4fb8a6fb",
        public: "3d4017c3e843895a92b70aa74d1b7ebc9c982ccf2ec4968cc0cd55f12af4660c",
        message: "72",
        signature: "92a009a9f0d4cab8720e820b5f642540a2b27b5416503f8fb3762223ebdb69da085ac1e43e15996e458f3613d0f11d8c387b2eaeb4302aeeb00d291612bb0c00",
    },
    Ed25519Case {
        secret: "c5aa8df43f9f837bedb7442f31dcb7b166d38535076f094b85ce3a2e0b4458f7",
        public: "fc51cd8e6218a1a38da47ed00230f0580816ed13ba3303ac5deb911548908025",
        message: "af82",
        signature: "6291d657deec24024827e69c3abe01a30ce548a284743a445e3680d7db5ac3ac18ff9b538d16f290ae67f760984dc6594a7c15e9716ed28dc027beceea1ec40a",
    },
];

struct GcmCase {
    name: &'static str,
    key: &'static str,
    iv: &'static str,
    plaintext: &'static str,
    aad: &'static str,
    ciphertext: &'static str,
    tag: &'static str,
}

const GCM_P: &str = "d9313225f88406e5a55909c5aff5269a86a7a9531534f7da2e4c303d8a318a721c3c0c95956809532fcf0e2449a6b525b16aedf5aa0de657ba637b391aafd255";
const GCM_C: &str = "522dc1f099567d07f47f37a32a84427d643a8cdcbfe5c0c97598a2bd2555d1aa8cb08e48590dbb3da7b08b1056828838c5f61e6393ba7a0abcc9f662898015ad";
const GCM_K: &str = "feffe9928665731c6d6a8f9467308308feffe9928665731c6d6a8f9467308308";

const GCM: &[GcmCase] = &[
    GcmCase {
        name: "13",
        key: "0000000000000000000000000000000000000000000000000000000000000000",
        iv: "000000000000000000000000",
        plaintext: "",
        aad: "",
        ciphertext: "",
        tag: "530f8afbc74536b9a963b4f1c4cb738b",
    },
    GcmCase {
        name: "14",
        key: "0000000000000000000000000000000000000000000000000000000000000000",
        iv: "000000000000000000000000",
        plaintext: "00000000000000000000000000000000",
        aad: "",
        ciphertext: "cea7403d4d606b6e074ec5d3baf39d18",
        tag: "d0d1c8a799996bf0265b98b5d48ab919",
    },
    GcmCase {
        name: "15",
        key: GCM_K,
        iv: "cafebabefacedbaddecaf888",
        plaintext: GCM_P,
        aad: "",
        ciphertext: GCM_C,
        tag: "b094dac5d93471bdec1a502270e3cc6c",
    },
    GcmCase {
        name: "16",
        key: GCM_K,
        iv: "cafebabefacedbaddecaf888",
        plaintext: GCM_P.split_at(120).0,
        aad: "feedfacedeadbeeffeedfacedeadbeefabaddad2",
        ciphertext: GCM_C.split_at(120).0,
        tag: "76fc6ece0f4e1768cddf8853bb2d551b",
    },
];

fn unhex(s: &str) -> Vec<u8> {
    hex::decode(s).expect("vector hex")
}

pub fn run() -> Outcome {
    let mut failures = Vec::new();
    for (i, case) in ED25519.iter().enumerate() {
        let kp = KeyPair::from_seed(&unhex(case.secret).try_into().unwrap());
        let msg = unhex(case.message);
        let sig = kp.sign(&msg);
        let ok = hex::encode(kp.public_key()) == case.public
            && hex::encode(sig) == case.signature
            && verify_sig(&unhex(case.public), &msg, &sig) == Ok(true);
        let mut forged = sig;
        forged[0] ^= 1;
        if !ok || verify_sig(&unhex(case.public), &msg, &forged) == Ok(true) {
            failures.push(format!("ed25519 test {}", i + 1));
        }
    }
    for case in GCM {
        let key = SymmetricKey::from_bytes(unhex(case.key).try_into().unwrap());
        let iv: [u8; 12] = unhex(case.iv).try_into().unwrap();
        let aad = unhex(case.aad);
        let sealed = key.seal_with_aad(&iv, &unhex(case.plaintext), &aad);
        let expected = [unhex(case.ciphertext), unhex(case.tag)].concat();
        let opened = key.open_with_aad(&iv, &expected, &aad);
        if sealed != expected || opened.as_deref() != Ok(&unhex(case.plaintext)[..]) {
            failures.push(format!("gcm test case {}", case.name));
        }
    }
    let total = ED25519.len() + GCM.len();
    Outcome::new(
        failures.is_empty(),
        format!(
            "{}/{total} bit-exact (RFC 8032 tests 1-3, AES-256-GCM cases 13-16){}",
            total - failures.len(),
            if failures.is_empty() { String::new() } else { format!("; failed: {}", failures.join(", ")) }
        ),
    )
}
