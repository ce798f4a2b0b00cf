//! Cyclic words over chord alphabets.
//!
//! Closed orbit candidates in the window regions are words in the chord
//! letters up to cyclic rotation. Each record carries the summed action,
//! the summed half-turn index, the z-homotopy class, and the action window
//! in which the true orbit period must lie.

use crate::cz_index::is_good;
use crate::{Error, Result};
use std::collections::BTreeMap;

/// One letter of the chord alphabet.
#[derive(Clone, Copy, Debug)]
pub struct ChordDatum {
    pub letter: char,
    pub action: f64,
    /// Half-turn index of the letter in the collar framing.
    pub index: i64,
    /// z-winding contributed by the letter.
    pub winding: i64,
}

/// A cyclic word, reduced to its canonical rotation.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitRecord {
    pub word: String,
    pub action: f64,
    pub cz: i64,
    pub homotopy: i64,
    pub parity: i8,
    pub good: bool,
    pub primitive: String,
    pub multiplicity: usize,
    pub window: (f64, f64),
}

fn rank_table(alphabet: &[ChordDatum]) -> Result<BTreeMap<char, usize>> {
    let mut sorted: Vec<&ChordDatum> = alphabet.iter().collect();
    sorted.sort_by(|a, b| {
        (a.action, a.letter)
            .partial_cmp(&(b.action, b.letter))
            .unwrap()
    });
    let mut table = BTreeMap::new();
    for (rank, datum) in sorted.iter().enumerate() {
        if table.insert(datum.letter, rank).is_some() {
            return Err(Error::Parameter(format!(
                "duplicate letter {:?} in alphabet",
                datum.letter
            )));
        }
    }
    Ok(table)
}

/// Least rotation of `word` in the alphabet order (letters ranked by
/// action, then by symbol).
pub fn canonical_rotation(word: &str, alphabet: &[ChordDatum]) -> Result<String> {
    let ranks = rank_table(alphabet)?;
    let chars: Vec<char> = word.chars().collect();
    let key = |rot: usize| -> Result<Vec<usize>> {
        chars
            .iter()
            .cycle()
            .skip(rot)
            .take(chars.len())
            .map(|c| {
                ranks
                    .get(c)
                    .copied()
                    .ok_or_else(|| Error::UnknownLetter(c.to_string()))
            })
            .collect()
    };
    let mut best = key(0)?;
    let mut best_rot = 0;
    for rot in 1..chars.len() {
        let cand = key(rot)?;
        if cand < best {
            best = cand;
            best_rot = rot;
        }
    }
    Ok(chars
        .iter()
        .cycle()
        .skip(best_rot)
        .take(chars.len())
        .collect())
}

/// Shortest repeating block of the word and how many times it repeats.
pub fn primitive_root(word: &str) -> (String, usize) {
    let chars: Vec<char> = word.chars().collect();
    let n = chars.len();
    for d in 1..=n {
        if n % d != 0 {
            continue;
        }
        if (d..n).all(|i| chars[i] == chars[i % d]) {
            return (chars[..d].iter().collect(), n / d);
        }
    }
    (word.to_string(), 1)
}

/// All cyclic words with total action strictly below `k_bound`.
///
/// The enumeration refuses to proceed when some achievable action lands
/// within 1e-9 of the bound: at the boundary, membership of an orbit class
/// would be decided by rounding noise.
pub fn enumerate_orbits(
    alphabet: &[ChordDatum],
    k_bound: f64,
    tau: f64,
) -> Result<Vec<OrbitRecord>> {
    if alphabet.is_empty() {
        return Err(Error::Parameter("empty alphabet".into()));
    }
    if !(k_bound > 0.0) {
        return Err(Error::Parameter("action bound must be positive".into()));
    }
    for d in alphabet {
        if !(d.action > 0.0) {
            return Err(Error::Parameter(format!(
                "letter {:?} has non-positive action",
                d.letter
            )));
        }
    }
    let ranks = rank_table(alphabet)?;
    let by_letter: BTreeMap<char, &ChordDatum> =
        alphabet.iter().map(|d| (d.letter, d)).collect();

    // Depth-first over plain words; every prefix action is checked against
    // the boundary band before the bound test, so a near-tie anywhere in
    // the reachable set aborts the whole enumeration.
    let mut canonical: BTreeMap<String, ()> = BTreeMap::new();
    let mut stack: Vec<(String, f64)> = vec![(String::new(), 0.0)];
    while let Some((word, action)) = stack.pop() {
        for d in alphabet {
            let next_action = action + d.action;
            if (next_action - k_bound).abs() < 1e-9 {
                return Err(Error::ActionBoundary {
                    bound: k_bound,
                    action: next_action,
                });
            }
            if next_action > k_bound {
                continue;
            }
            let mut next = word.clone();
            next.push(d.letter);
            canonical.insert(canonical_rotation(&next, alphabet)?, ());
            stack.push((next, next_action));
        }
    }

    let mut records: Vec<OrbitRecord> = Vec::new();
    for word in canonical.keys() {
        let mut action = 0.0;
        let mut cz = 0;
        let mut homotopy = 0;
        for c in word.chars() {
            let d = by_letter[&c];
            action += d.action;
            cz += d.index;
            homotopy += d.winding;
        }
        let (primitive, multiplicity) = primitive_root(word);
        let root_cz: i64 = primitive
            .chars()
            .map(|c| by_letter[&c].index)
            .sum();
        let spread = 9.0 * word.chars().count() as f64 * tau;
        records.push(OrbitRecord {
            word: word.clone(),
            action,
            cz,
            homotopy,
            parity: (cz.rem_euclid(2)) as i8,
            good: is_good(root_cz, multiplicity),
            primitive,
            multiplicity,
            window: (action - spread, action + spread),
        });
    }
    records.sort_by(|a, b| {
        a.action
            .total_cmp(&b.action)
            .then_with(|| {
                let ka: Vec<usize> = a.word.chars().map(|c| ranks[&c]).collect();
                let kb: Vec<usize> = b.word.chars().map(|c| ranks[&c]).collect();
                ka.cmp(&kb)
            })
    });
    Ok(records)
}

/// Number of cyclic compositions of `l` (cyclic words of positive integers
/// summing to l).
pub fn cyclic_composition_count(l: u64) -> u64 {
    if l == 0 {
        return 0;
    }
    let phi = |mut n: u64| -> u64 {
        let mut result = n;
        let mut p = 2;
        while p * p <= n {
            if n % p == 0 {
                while n % p == 0 {
                    n /= p;
                }
                result -= result / p;
            }
            p += 1;
        }
        if n > 1 {
            result -= result / n;
        }
        result
    };
    let mut total = 0u64;
    for d in 1..=l {
        if l % d == 0 {
            total += phi(l / d) * (1u64 << d);
        }
    }
    total / l - 1
}

/// Count of good generators per index degree.
pub fn graded_block(records: &[OrbitRecord]) -> BTreeMap<i64, usize> {
    let mut block = BTreeMap::new();
    for r in records.iter().filter(|r| r.good) {
        *block.entry(r.cz).or_insert(0) += 1;
    }
    block
}

/// Signed count of good generators.
pub fn euler_characteristic(records: &[OrbitRecord]) -> i64 {
    records
        .iter()
        .filter(|r| r.good)
        .map(|r| if r.cz.rem_euclid(2) == 0 { 1 } else { -1 })
        .sum()
}

pub fn records_to_csv(records: &[OrbitRecord]) -> String {
    let mut out = String::from("word,action,cz,homotopy,parity,good,window_lo,window_hi\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.word, r.action, r.cz, r.homotopy, r.parity, r.good, r.window.0, r.window.1
        ));
    }
    out
}
