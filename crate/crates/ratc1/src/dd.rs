//! Minimal double-double (compensated) arithmetic for extended-precision
//! polynomial evaluation cross-checks. Only the operations needed by a
//! Horner sweep are provided.

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

/// Knuth two-sum: exact error term without branching on magnitudes.
fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    Dd { hi: s, lo: err }
}

/// Exact product via fused multiply-add.
fn two_prod(a: f64, b: f64) -> Dd {
    let p = a * b;
    let e = a.mul_add(b, -p);
    Dd { hi: p, lo: e }
}

pub fn add_f64(x: Dd, c: f64) -> Dd {
    let s = two_sum(x.hi, c);
    let lo = s.lo + x.lo;
    let t = two_sum(s.hi, lo);
    Dd { hi: t.hi, lo: t.lo }
}

pub fn mul_f64(x: Dd, c: f64) -> Dd {
    let p = two_prod(x.hi, c);
    let lo = x.lo.mul_add(c, p.lo);
    let t = two_sum(p.hi, lo);
    Dd { hi: t.hi, lo: t.lo }
}

pub fn add(x: Dd, y: Dd) -> Dd {
    let s = two_sum(x.hi, y.hi);
    let t = two_sum(x.lo, y.lo);
    let mut lo = s.lo + t.hi;
    let r = two_sum(s.hi, lo);
    lo = r.lo + t.lo;
    let f = two_sum(r.hi, lo);
    Dd { hi: f.hi, lo: f.lo }
}

pub fn mul(x: Dd, y: Dd) -> Dd {
    let p = two_prod(x.hi, y.hi);
    let lo = x.hi.mul_add(y.lo, x.lo * y.hi) + p.lo;
    let t = two_sum(p.hi, lo);
    Dd { hi: t.hi, lo: t.lo }
}

/// Horner evaluation of `coeffs[0] + coeffs[1] x + ...` in double-double.
pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = Dd::ZERO;
    for &c in coeffs.iter().rev() {
        acc = add_f64(mul_f64(acc, x), c);
    }
    acc.to_f64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_matches_plain_on_benign_input() {
        let coeffs = [1.0, -2.0, 3.0, 0.5];
        let x = 0.37;
        let plain = 1.0 - 2.0 * x + 3.0 * x * x + 0.5 * x * x * x;
        assert!((horner(&coeffs, x) - plain).abs() < 1e-15);
    }

    #[test]
    fn horner_recovers_cancellation() {
        // (x - 1)^3 expanded, evaluated near the triple root: plain Horner
        // loses ~11 digits here, double-double keeps the value to ~1e-24.
        let coeffs = [-1.0, 3.0, -3.0, 1.0];
        let x = 1.0 + 1e-8;
        let exact = 1e-24;
        let got = horner(&coeffs, x);
        assert!((got - exact).abs() < 1e-30, "got {got:e}");
    }
}
