//! The rank-2 free group `⟨a, b⟩` and its punctured-torus representation.

use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::hyperbolic::{Geodesic, MobiusMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    A,
    AInv,
    B,
    BInv,
}

impl Letter {
    pub const ALL: [Letter; 4] = [Letter::A, Letter::AInv, Letter::B, Letter::BInv];

    pub fn inverse(self) -> Letter {
        match self {
            Letter::A => Letter::AInv,
            Letter::AInv => Letter::A,
            Letter::B => Letter::BInv,
            Letter::BInv => Letter::B,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// `a`, `A`, `b`, `B`, with capitals for inverses.
    pub fn symbol(self) -> char {
        match self {
            Letter::A => 'a',
            Letter::AInv => 'A',
            Letter::B => 'b',
            Letter::BInv => 'B',
        }
    }

    pub fn from_symbol(c: char) -> Option<Letter> {
        match c {
            'a' => Some(Letter::A),
            'A' => Some(Letter::AInv),
            'b' => Some(Letter::B),
            'B' => Some(Letter::BInv),
            _ => None,
        }
    }

    /// Image under the representation with `a = [[1,1],[1,2]]` and
    /// `b = [[1,−1],[−1,2]]`; the commutator is parabolic, so the quotient is
    /// a once-punctured torus.
    pub fn matrix(self) -> MobiusMap {
        match self {
            Letter::A => MobiusMap::from_raw(1.0, 1.0, 1.0, 2.0),
            Letter::AInv => MobiusMap::from_raw(2.0, -1.0, -1.0, 1.0),
            Letter::B => MobiusMap::from_raw(1.0, -1.0, -1.0, 2.0),
            Letter::BInv => MobiusMap::from_raw(2.0, 1.0, 1.0, 1.0),
        }
    }
}

/// A freely reduced word.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupWord(Vec<Letter>);

#[allow(clippy::len_without_is_empty)]
impl GroupWord {
    pub fn identity() -> Self {
        GroupWord(Vec::new())
    }

    pub fn letter(l: Letter) -> Self {
        GroupWord(vec![l])
    }

    pub fn a() -> Self {
        Self::letter(Letter::A)
    }

    pub fn b() -> Self {
        Self::letter(Letter::B)
    }

    /// Reduces the given letters.
    pub fn from_letters<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut w = Vec::new();
        for l in letters {
            push_reduced(&mut w, l);
        }
        GroupWord(w)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Self {
        GroupWord(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn pow(&self, k: i64) -> Self {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        (0..k.unsigned_abs()).fold(GroupWord::identity(), |acc, _| &acc * &base)
    }

    /// `g · self · g⁻¹`.
    pub fn conjugate_by(&self, g: &GroupWord) -> Self {
        &(g * self) * &g.inverse()
    }

    /// `x y x⁻¹ y⁻¹`.
    pub fn commutator(x: &GroupWord, y: &GroupWord) -> Self {
        &(&(x * y) * &x.inverse()) * &y.inverse()
    }

    /// Exponent sums of `a` and `b`.
    pub fn exponent_sums(&self) -> (i64, i64) {
        self.0.iter().fold((0, 0), |(x, y), l| match l {
            Letter::A => (x + 1, y),
            Letter::AInv => (x - 1, y),
            Letter::B => (x, y + 1),
            Letter::BInv => (x, y - 1),
        })
    }

    /// The image under the punctured-torus representation.
    pub fn matrix(&self) -> MobiusMap {
        self.0.iter().fold(MobiusMap::identity(), |m, l| m.compose(&l.matrix()))
    }

    /// Axis of the image, oriented from the repelling to the attracting fixed
    /// point; `None` unless the image is hyperbolic.
    pub fn axis(&self) -> Option<Geodesic> {
        let m = self.matrix();
        if m.trace().abs() <= 2.0 {
            return None;
        }
        let (r, a) = m.fixed_points()?;
        Geodesic::new(r, a).ok()
    }

    pub fn random(rng: &mut impl Rng, len: usize) -> Self {
        let mut w: Vec<Letter> = Vec::with_capacity(len);
        while w.len() < len {
            let l = Letter::ALL[rng.random_range(0..4)];
            if w.last().is_some_and(|p| p.inverse() == l) {
                continue;
            }
            w.push(l);
        }
        GroupWord(w)
    }
}

fn push_reduced(w: &mut Vec<Letter>, l: Letter) {
    if w.last().is_some_and(|p| p.inverse() == l) {
        w.pop();
    } else {
        w.push(l);
    }
}

impl Mul for &GroupWord {
    type Output = GroupWord;

    fn mul(self, rhs: &GroupWord) -> GroupWord {
        let mut w = self.0.clone();
        for l in &rhs.0 {
            push_reduced(&mut w, *l);
        }
        GroupWord(w)
    }
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        for l in &self.0 {
            write!(f, "{}", l.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for GroupWord {
    type Err = Error;

    /// Letters `a A b B`; `e`, `1` or the empty string for the identity.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "e" || s == "1" {
            return Ok(GroupWord::identity());
        }
        let letters: Option<Vec<Letter>> = s.chars().map(Letter::from_symbol).collect();
        letters
            .map(GroupWord::from_letters)
            .ok_or_else(|| Error::Parse(format!("not a word in a, A, b, B: {s:?}")))
    }
}

/// All reduced words of length at most `max_len`, shortest first.
pub fn reduced_words(max_len: usize) -> Vec<GroupWord> {
    let mut out = vec![GroupWord::identity()];
    let mut frontier = vec![GroupWord::identity()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for l in Letter::ALL {
                if w.0.last().is_some_and(|p| p.inverse() == l) {
                    continue;
                }
                let mut v = w.0.clone();
                v.push(l);
                next.push(GroupWord(v));
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::geodesics_cross;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parse_and_display() {
        let w: GroupWord = "aBab".parse().unwrap();
        assert_eq!(w.to_string(), "aBab");
        assert_eq!("aAbB".parse::<GroupWord>().unwrap(), GroupWord::identity());
        assert_eq!(GroupWord::identity().to_string(), "e");
        assert!("abc".parse::<GroupWord>().is_err());
    }

    #[test]
    fn reduced_word_counts() {
        let words = reduced_words(4);
        assert_eq!(words.len(), 1 + 4 + 12 + 36 + 108);
        assert!(words.iter().all(|w| GroupWord::from_letters(w.letters().iter().copied()) == *w));
    }

    #[test]
    fn representation_is_a_homomorphism() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let u = { let n = rng.random_range(0..6); GroupWord::random(&mut rng, n) };
            let v = { let n = rng.random_range(0..6); GroupWord::random(&mut rng, n) };
            let lhs = (&u * &v).matrix();
            let rhs = u.matrix().compose(&v.matrix());
            assert!(lhs.approx_eq(&rhs, 1e-10));
            assert!((&u * &u.inverse()).is_identity());
        }
    }

    #[test]
    fn punctured_torus_relations() {
        let c = GroupWord::commutator(&GroupWord::a(), &GroupWord::b());
        assert_eq!(c.to_string(), "abAB");
        assert_eq!(c.matrix().trace(), -2.0);
        assert_eq!(GroupWord::a().matrix().trace(), 3.0);
        let (ax, bx) = (GroupWord::a().axis().unwrap(), GroupWord::b().axis().unwrap());
        assert!(geodesics_cross(&ax, &bx));
        assert!(c.axis().is_none());
    }
}
