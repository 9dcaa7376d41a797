use super::GinGraph;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over a sequence of `u64` words, each fed little-endian,
/// so colours agree across platforms.
pub fn fnv1a(words: impl IntoIterator<Item = u64>) -> u64 {
    let mut h = FNV_OFFSET;
    for w in words {
        for byte in w.to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    h
}

/// 1-WL colour refinement from uniform colours for exactly `rounds`
/// rounds. Each round a node's colour becomes the hash of its own colour,
/// its degree-sorted neighbour colours and a separator. Returns the sorted
/// colour multiset; multisets from different graphs are comparable when
/// computed with the same `rounds`.
pub fn wl_refinement(g: &GinGraph, rounds: usize) -> Vec<u64> {
    let n = g.len();
    let mut colors = vec![0u64; n];
    let mut next = vec![0u64; n];
    let mut signature = Vec::new();
    for _ in 0..rounds {
        for v in 0..n {
            signature.clear();
            signature.extend(g.adjacency[v].iter().map(|&u| colors[u]));
            signature.sort_unstable();
            next[v] = fnv1a([colors[v], signature.len() as u64].into_iter().chain(signature.iter().copied()));
        }
        std::mem::swap(&mut colors, &mut next);
    }
    colors.sort_unstable();
    colors
}
