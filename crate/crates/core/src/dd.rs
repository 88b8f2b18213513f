//! Double-double arithmetic for 2×2 matrix products whose factors have large,
//! cancelling entries.

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        let e = e + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

/// Row-major `[a, b, c, d]`.
pub(crate) type DdMatrix = [Dd; 4];

pub(crate) fn from_entries(e: [f64; 4]) -> DdMatrix {
    e.map(Dd::from_f64)
}

pub(crate) fn mat_mul(x: &DdMatrix, y: &DdMatrix) -> DdMatrix {
    [
        x[0].mul(y[0]).add(x[1].mul(y[2])),
        x[0].mul(y[1]).add(x[1].mul(y[3])),
        x[2].mul(y[0]).add(x[3].mul(y[2])),
        x[2].mul(y[1]).add(x[3].mul(y[3])),
    ]
}

pub(crate) const IDENTITY: DdMatrix =
    [Dd { hi: 1.0, lo: 0.0 }, Dd { hi: 0.0, lo: 0.0 }, Dd { hi: 0.0, lo: 0.0 }, Dd { hi: 1.0, lo: 0.0 }];

/// Inverse of a determinant-one matrix.
pub(crate) fn inverse(x: &DdMatrix) -> DdMatrix {
    [x[3], x[1].neg(), x[2].neg(), x[0]]
}

pub(crate) fn to_entries(x: &DdMatrix) -> [f64; 4] {
    x.map(Dd::to_f64)
}

pub(crate) fn lo_entries(x: &DdMatrix) -> [f64; 4] {
    x.map(|e| {
        let hi = e.to_f64();
        (e.hi - hi) + e.lo
    })
}

pub(crate) fn from_hi_lo(hi: [f64; 4], lo: [f64; 4]) -> DdMatrix {
    [0, 1, 2, 3].map(|k| Dd::from_f64(hi[k]).add(Dd::from_f64(lo[k])))
}

/// Applies the matrix to a column vector, rounding the result.
pub(crate) fn mat_vec(x: &DdMatrix, v: [f64; 2]) -> [f64; 2] {
    let (u, w) = (Dd::from_f64(v[0]), Dd::from_f64(v[1]));
    [x[0].mul(u).add(x[1].mul(w)).to_f64(), x[2].mul(u).add(x[3].mul(w)).to_f64()]
}
