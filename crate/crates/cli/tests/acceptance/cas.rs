use rand::{Rng, RngCore};
use verifi_core::cas::{ObjectStore, CHUNK_SIZE};

use crate::support::rng;
use crate::Outcome;

const INPUTS: usize = 1_000;
const MAX_INPUT: usize = 1 << 20;

fn random_bytes(rng: &mut impl RngCore, len: usize) -> Vec<u8> {
    let mut v = vec![0u8; len];
    rng.fill_bytes(&mut v);
    v
}

/// Put twice gives the same root and stores nothing new; one flipped bit
/// gives a different root.
pub fn determinism() -> Outcome {
    let mut rng = rng(2);
    let (mut same, mut dedup, mut sensitive, mut empty_inputs) = (0, 0, 0, 0);
    for _ in 0..INPUTS {
        let len = rng.gen_range(0..=MAX_INPUT);
        let data = random_bytes(&mut rng, len);
        let mut store = ObjectStore::in_memory();
        let first = store.put(&data).unwrap();
        let count = store.object_count().unwrap();
        let second = store.put(&data).unwrap();
        same += usize::from(first == second);
        dedup += usize::from(store.object_count().unwrap() == count);

        if data.is_empty() {
            // No bit to flip; any one-bit change is a 1-byte input.
            empty_inputs += 1;
            sensitive += usize::from(store.put(&[1]).unwrap() != first);
            continue;
        }
        let mut flipped = data.clone();
        let bit = rng.gen_range(0..len * 8);
        flipped[bit / 8] ^= 1 << (bit % 8);
        sensitive += usize::from(store.put(&flipped).unwrap() != first);
    }
    Outcome::new(
        same == INPUTS && dedup == INPUTS && sensitive == INPUTS,
        format!(
            "identical CID {same}/{INPUTS}, dedup {dedup}/{INPUTS}, bit flip changes root {sensitive}/{INPUTS} ({empty_inputs} empty inputs)"
        ),
    )
}

/// Byte-exact `get(put(x))` on disk for chunk-boundary sizes plus random sizes.
pub fn round_trip() -> Outcome {
    let mut rng = rng(3);
    let mut sizes = vec![0, 1, CHUNK_SIZE - 1, CHUNK_SIZE, CHUNK_SIZE + 1, 4 << 20];
    sizes.extend((0..100).map(|_| rng.gen_range(0..=4 << 20)));
    let tmp = tempfile::tempdir().unwrap();
    let mut store = ObjectStore::open(tmp.path()).unwrap();
    let mut exact = 0;
    let mut bad = Vec::new();
    for &len in &sizes {
        let data = random_bytes(&mut rng, len);
        let cid = store.put(&data).unwrap();
        if store.get(&cid).unwrap() == data {
            exact += 1;
        } else {
            bad.push(len);
        }
    }
    let total = sizes.len();
    Outcome::new(
        exact == total,
        format!("{exact}/{total} byte-exact (6 boundary + 100 random sizes){}", if bad.is_empty() { String::new() } else { format!("; failed sizes {bad:?}") }),
    )
}
