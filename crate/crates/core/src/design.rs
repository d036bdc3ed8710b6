//! Sampling densities of (test time, age at test): products of edge-smoothed
//! uniform densities over a time × age rectangle.

use rand::Rng;

use crate::error::{Error, Result};

/// Unnormalized trapezoid weight: 1 on `[lo + edge, hi - edge]`, 0 outside
/// `[lo - edge, hi + edge]`, linear in between (so 1/2 at `lo` and `hi`).
pub fn trapezoid_eval(x: f64, lo: f64, hi: f64, edge: f64) -> Result<f64> {
    check_trapezoid(lo, hi, edge)?;
    Ok(trapezoid_weight(x, lo, hi, edge))
}

fn check_trapezoid(lo: f64, hi: f64, edge: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::InvalidGeometry(format!("need lo < hi, got [{lo}, {hi}]")));
    }
    if !(edge >= 0.0 && edge < (hi - lo) / 2.0) {
        return Err(Error::InvalidGeometry(format!(
            "edge {edge} must lie in [0, {})",
            (hi - lo) / 2.0
        )));
    }
    Ok(())
}

#[inline]
fn trapezoid_weight(x: f64, lo: f64, hi: f64, edge: f64) -> f64 {
    if edge == 0.0 {
        return if x == lo || x == hi {
            0.5
        } else if x > lo && x < hi {
            1.0
        } else {
            0.0
        };
    }
    let w = ((x - lo + edge) / (2.0 * edge)).min((hi + edge - x) / (2.0 * edge));
    w.clamp(0.0, 1.0)
}

/// One-dimensional trapezoid density, optionally truncated below `floor`.
///
/// Ages are truncated at 0: a box touching age 0 with a smoothed edge would
/// otherwise put mass on negative ages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trapezoid {
    lo: f64,
    hi: f64,
    edge: f64,
    floor: f64,
    /// `∫ weight` below `floor` on the untruncated trapezoid.
    cut: f64,
    mass: f64,
}

impl Trapezoid {
    pub fn new(lo: f64, hi: f64, edge: f64) -> Result<Self> {
        Self::truncated(lo, hi, edge, f64::NEG_INFINITY)
    }

    pub fn truncated(lo: f64, hi: f64, edge: f64, floor: f64) -> Result<Self> {
        check_trapezoid(lo, hi, edge)?;
        let mut t = Trapezoid {
            lo,
            hi,
            edge,
            floor,
            cut: 0.0,
            mass: hi - lo,
        };
        if floor > lo - edge {
            if floor >= hi {
                return Err(Error::InvalidGeometry(format!(
                    "truncation at {floor} removes all of [{lo}, {hi}]"
                )));
            }
            t.cut = t.untruncated_cdf(floor);
            t.mass = (hi - lo) - t.cut;
        }
        Ok(t)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn edge(&self) -> f64 {
        self.edge
    }

    /// Area under the (possibly truncated) weight.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Support `[max(lo - edge, floor), hi + edge]`.
    pub fn support(&self) -> (f64, f64) {
        ((self.lo - self.edge).max(self.floor), self.hi + self.edge)
    }

    /// Points where the density is not smooth, inside the support.
    pub fn kinks(&self) -> Vec<f64> {
        let (s0, s1) = self.support();
        let mut k = vec![s0];
        for x in [
            self.lo - self.edge,
            self.lo + self.edge,
            self.hi - self.edge,
            self.hi + self.edge,
        ] {
            if x > s0 && x <= s1 && x > *k.last().unwrap() {
                k.push(x);
            }
        }
        k
    }

    #[inline]
    pub fn weight(&self, x: f64) -> f64 {
        if x < self.floor {
            0.0
        } else {
            trapezoid_weight(x, self.lo, self.hi, self.edge)
        }
    }

    #[inline]
    pub fn density(&self, x: f64) -> f64 {
        self.weight(x) / self.mass
    }

    /// `∫_{-∞}^x weight` ignoring truncation.
    fn untruncated_cdf(&self, x: f64) -> f64 {
        let (lo, hi, e) = (self.lo, self.hi, self.edge);
        if x <= lo - e {
            0.0
        } else if x >= hi + e {
            hi - lo
        } else if x < lo + e {
            (x - lo + e).powi(2) / (4.0 * e)
        } else if x <= hi - e {
            x - lo
        } else {
            (hi - lo) - (hi + e - x).powi(2) / (4.0 * e)
        }
    }

    fn untruncated_quantile(&self, w: f64) -> f64 {
        let (lo, hi, e) = (self.lo, self.hi, self.edge);
        if w <= e {
            lo - e + (4.0 * e * w.max(0.0)).sqrt()
        } else if w <= hi - lo - e {
            lo + w
        } else {
            hi + e - (4.0 * e * (hi - lo - w).max(0.0)).sqrt()
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.floor {
            return 0.0;
        }
        ((self.untruncated_cdf(x) - self.cut) / self.mass).clamp(0.0, 1.0)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let x = self.untruncated_quantile(self.cut + u * self.mass);
        x.max(self.support().0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}

/// Edge-smoothed uniform density over `[t_lo, t_hi] × [a_lo, a_hi]`,
/// normalized to unit mass on `ℝ × [0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedBox {
    time: Trapezoid,
    age: Trapezoid,
    norm: f64,
}

impl SmoothedBox {
    pub fn new(t_range: (f64, f64), a_range: (f64, f64), edge_t: f64, edge_a: f64) -> Result<Self> {
        if a_range.0 < 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "age range must be nonnegative, got [{}, {}]",
                a_range.0, a_range.1
            )));
        }
        let time = Trapezoid::new(t_range.0, t_range.1, edge_t)?;
        let age = Trapezoid::truncated(a_range.0, a_range.1, edge_a, 0.0)?;
        Ok(SmoothedBox {
            time,
            age,
            norm: 1.0 / (time.mass() * age.mass()),
        })
    }

    /// Box with smoothing half-widths of 1% of each range length.
    pub fn with_default_edges(t_range: (f64, f64), a_range: (f64, f64)) -> Result<Self> {
        Self::new(
            t_range,
            a_range,
            0.01 * (t_range.1 - t_range.0),
            0.01 * (a_range.1 - a_range.0),
        )
    }

    pub fn time(&self) -> &Trapezoid {
        &self.time
    }

    pub fn age(&self) -> &Trapezoid {
        &self.age
    }

    pub fn t_range(&self) -> (f64, f64) {
        (self.time.lo, self.time.hi)
    }

    pub fn a_range(&self) -> (f64, f64) {
        (self.age.lo, self.age.hi)
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn time_support(&self) -> (f64, f64) {
        self.time.support()
    }

    pub fn age_support(&self) -> (f64, f64) {
        self.age.support()
    }

    #[inline]
    pub fn density(&self, t: f64, a: f64) -> f64 {
        self.norm * self.time.weight(t) * self.age.weight(a)
    }

    /// Exact time marginal of the density.
    #[inline]
    pub fn time_marginal(&self, t: f64) -> f64 {
        self.time.density(t)
    }

    #[inline]
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let t = self.time.sample(rng);
        let a = self.age.sample(rng);
        (t, a)
    }

    /// `n` independent `(t, a)` draws.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<(f64, f64)> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }

    pub fn time_marginal_sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.time.sample(rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    #[test]
    fn trapezoid_matches_smoothing_kernel() {
        assert_eq!(trapezoid_eval(0.5, 0.0, 1.0, 0.01).unwrap(), 1.0);
        assert!((trapezoid_eval(0.0, 0.0, 1.0, 0.01).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(trapezoid_eval(-0.02, 0.0, 1.0, 0.01).unwrap(), 0.0);
        // 50 x + 0.5 on the left ramp, 50 (1 - x) + 0.5 on the right one
        for x in [-0.009, -0.003, 0.004, 0.0099] {
            let w = trapezoid_eval(x, 0.0, 1.0, 0.01).unwrap();
            assert!((w - (50.0 * x + 0.5)).abs() < 1e-12);
            let w = trapezoid_eval(1.0 - x, 0.0, 1.0, 0.01).unwrap();
            assert!((w - (50.0 * x + 0.5)).abs() < 1e-12);
        }
        assert_eq!(trapezoid_eval(0.0, 0.0, 1.0, 0.0).unwrap(), 0.5);
    }

    #[test]
    fn trapezoid_rejects_bad_geometry() {
        assert!(trapezoid_eval(0.0, 1.0, 1.0, 0.0).is_err());
        assert!(trapezoid_eval(0.0, 0.0, 1.0, 0.5).is_err());
        assert!(trapezoid_eval(0.0, 0.0, 1.0, -0.1).is_err());
        assert!(SmoothedBox::new((0.0, 1.0), (-1.0, 1.0), 0.0, 0.0).is_err());
    }

    #[test]
    fn unit_box_density() {
        let b = SmoothedBox::new((0.0, 1.0), (0.0, 1.0), 0.01, 0.0).unwrap();
        assert!((b.density(0.5, 0.5) - 1.0).abs() < 1e-15);
        assert_eq!(b.density(1.02, 0.5), 0.0);
        assert_eq!(b.density(0.5, 1.5), 0.0);
        assert!((b.time_marginal(0.5) - 1.0).abs() < 1e-15);
        assert_eq!(b.time_marginal(-0.5), 0.0);
    }

    #[test]
    fn narrow_age_box_is_rescaled() {
        // age [0, 0.05] with 1% edges; the part of the lower ramp below age 0
        // (area edge/4) is truncated away
        let b = SmoothedBox::new((0.0, 1.0), (0.0, 0.05), 0.01, 0.0005).unwrap();
        let age_mass = 0.05 - 0.0005 / 4.0;
        assert!((b.density(0.5, 0.02) - 1.0 / age_mass).abs() < 1e-9);
        assert_eq!(b.density(0.5, -0.0001), 0.0);
    }

    #[test]
    fn quantile_inverts_cdf() {
        let tr = Trapezoid::truncated(0.0, 0.05, 0.0005, 0.0).unwrap();
        for u in [0.0, 1e-6, 0.003, 0.2, 0.5, 0.97, 0.9999, 1.0] {
            let x = tr.quantile(u);
            assert!((tr.cdf(x) - u).abs() < 1e-12, "u={u}");
        }
        let tr = Trapezoid::new(2000.0, 2001.0, 0.01).unwrap();
        for u in [0.001, 0.004, 0.5, 0.996] {
            assert!((tr.cdf(tr.quantile(u)) - u).abs() < 1e-9);
        }
    }

    #[test]
    fn samples_stay_in_support() {
        let b = SmoothedBox::new((3.0, 4.0), (0.0, 0.05), 0.01, 0.0005).unwrap();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
        for (t, a) in b.sample(&mut rng, 10_000) {
            assert!((2.99..=4.01).contains(&t));
            assert!((0.0..=0.0505).contains(&a));
        }
    }
}
