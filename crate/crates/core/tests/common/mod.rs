#![allow(dead_code)]

use earthquake::{Atom, MeasuredLamination};
use rand::Rng;
use std::f64::consts::TAU;

/// `2k` sorted angles with pairwise circular gaps of at least `sep`.
pub fn separated_angles<R: Rng>(rng: &mut R, count: usize, sep: f64) -> Vec<f64> {
    loop {
        let mut t: Vec<f64> = (0..count).map(|_| rng.random_range(0.0..TAU)).collect();
        t.sort_by(f64::total_cmp);
        let ok = t.windows(2).all(|w| w[1] - w[0] >= sep) && (t.is_empty() || t[0] + TAU - t[count - 1] >= sep);
        if ok {
            return t;
        }
    }
}

/// A random non-crossing lamination: endpoints in circular order are
/// matched like balanced parentheses.
pub fn random_lamination<R: Rng>(rng: &mut R, max_atoms: usize, sep: f64, weights: (f64, f64)) -> MeasuredLamination {
    let k = rng.random_range(1..=max_atoms);
    let angles = separated_angles(rng, 2 * k, sep);
    let mut stack: Vec<f64> = Vec::new();
    let mut atoms = Vec::new();
    for (i, &a) in angles.iter().enumerate() {
        let remaining = 2 * k - i;
        let must_close = stack.len() == remaining;
        let may_close = !stack.is_empty();
        if must_close || (may_close && rng.random_bool(0.5)) {
            let p = stack.pop().expect("nonempty");
            atoms.push(Atom::from_angles(p, a, rng.random_range(weights.0..=weights.1)).unwrap());
        } else {
            stack.push(a);
        }
    }
    MeasuredLamination::new(atoms).expect("balanced matching is non-crossing")
}
