//! Capacity, normalized capacity, gain ratios and power conversions over a
//! single-snapshot complex gain vector.
//!
//! For a 1×N receive array the log-det capacity collapses to the rank-1 form
//!
//! ```text
//! C = log2(det(I + ρ·h†h)) = log2(1 + ρ·Σ|h_i|²)
//! ```
//!
//! which is what [`capacity`] evaluates. [`capacity_det_oracle`] builds the
//! full N×N matrix and takes its determinant, and exists to check the closed
//! form.

use std::f64::consts::LN_2;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Ordered complex voltage gains from the transmitter to each receive element.
#[derive(Debug, Clone, PartialEq)]
pub struct GainVector(Vec<Complex64>);

impl GainVector {
    pub fn new(gains: Vec<Complex64>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::InvalidInput("gain vector needs at least one element".into()));
        }
        if let Some(i) = gains.iter().position(|h| !h.re.is_finite() || !h.im.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "gain of element {} is not finite",
                i + 1
            )));
        }
        Ok(GainVector(gains))
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Complex64> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    /// Σ|h_i|².
    pub fn power_sum(&self) -> f64 {
        self.0.iter().map(|h| h.norm_sqr()).sum()
    }

    /// Multiplies every component by a real factor.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|h| h * factor).collect())
    }

    /// Elementwise sum; both vectors must have the same length.
    pub fn try_add(&self, other: &GainVector) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::InvalidInput(format!(
                "cannot add gain vectors of length {} and {}",
                self.len(),
                other.len()
            )));
        }
        Self::new(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl std::ops::Index<usize> for GainVector {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

/// Signal-to-noise ratio per receive element, stored as a linear power ratio.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Snr(f64);

impl Snr {
    pub fn from_linear(rho: f64) -> Result<Self> {
        if !rho.is_finite() || rho < 0.0 {
            return Err(Error::InvalidInput(format!(
                "SNR must be finite and non-negative, got {rho}"
            )));
        }
        Ok(Snr(rho))
    }

    pub fn from_db(db: f64) -> Result<Self> {
        if !db.is_finite() {
            return Err(Error::InvalidInput(format!("SNR in dB must be finite, got {db}")));
        }
        Self::from_linear(db_to_power(db))
    }

    pub fn linear(self) -> f64 {
        self.0
    }

    pub fn db(self) -> f64 {
        power_to_db(self.0)
    }
}

/// Spectral efficiency in bps/Hz.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct CapacityValue(f64);

impl CapacityValue {
    pub fn bps_per_hz(self) -> f64 {
        self.0
    }
}

/// Magnitude ratios |h_i| / |h_1|.
#[derive(Debug, Clone, PartialEq)]
pub struct GainRatioVector(Vec<f64>);

impl GainRatioVector {
    pub fn linear(&self) -> &[f64] {
        &self.0
    }

    /// 20·log10 of each ratio; a zero ratio maps to `-inf`.
    pub fn db(&self) -> Vec<f64> {
        self.0.iter().map(|&k| amplitude_to_db(k)).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Received level of one element. A dead element has no finite dBm value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rss {
    Dbm(f64),
    BelowFloor,
}

impl Rss {
    pub fn dbm(self) -> Option<f64> {
        match self {
            Rss::Dbm(v) => Some(v),
            Rss::BelowFloor => None,
        }
    }
}

pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn power_to_db(p: f64) -> f64 {
    10.0 * p.log10()
}

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

pub fn amplitude_to_db(a: f64) -> f64 {
    20.0 * a.log10()
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

fn finite(value: f64, what: &str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

/// log2(1 + ρ·Σ|h_i|²).
pub fn capacity(h: &GainVector, rho: Snr) -> Result<CapacityValue> {
    let c = log2_1p(rho.linear() * h.power_sum());
    finite(c, "capacity").map(CapacityValue)
}

/// log2(det(I + ρ·h†h)) evaluated on the explicit N×N matrix.
pub fn capacity_det_oracle(h: &GainVector, rho: Snr) -> Result<CapacityValue> {
    let n = h.len();
    let g = h.as_slice();
    let mut m: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let identity = if i == j { 1.0 } else { 0.0 };
                    Complex64::new(identity, 0.0) + g[i].conj() * g[j] * rho.linear()
                })
                .collect()
        })
        .collect();
    let det = determinant(&mut m);
    // I + ρh†h is Hermitian positive definite; its determinant is real and ≥ 1.
    let c = det.re.log2();
    finite(c.max(0.0), "determinant capacity").map(CapacityValue)
}

/// Determinant by Gaussian elimination with partial pivoting. Consumes `m`.
fn determinant(m: &mut [Vec<Complex64>]) -> Complex64 {
    let n = m.len();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].norm().total_cmp(&m[b][col].norm()))
            .expect("non-empty range");
        if m[pivot][col].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        let p = m[col][col];
        det *= p;
        for row in col + 1..n {
            let factor = m[row][col] / p;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (upper, lower) = m.split_at_mut(row);
            for (dst, &src) in lower[0][col..n].iter_mut().zip(&upper[col][col..n]) {
                *dst -= factor * src;
            }
        }
    }
    det
}

/// SIMO capacity divided by the mean of the N single-element capacities.
pub fn normalized_capacity(h: &GainVector, rho: Snr) -> Result<f64> {
    if rho.linear() == 0.0 {
        return Err(Error::UndefinedRatio("normalized capacity at zero SNR"));
    }
    if h.iter().all(|g| g.norm_sqr() == 0.0) {
        return Err(Error::UndefinedRatio("normalized capacity of an all-zero channel"));
    }
    let c = capacity(h, rho)?.bps_per_hz();
    let siso_sum = siso_capacity_sum(h, rho);
    if siso_sum == 0.0 {
        // ρ·|h_i|² underflowed for every element; the ρ → 0 limit applies.
        return Ok(h.len() as f64);
    }
    finite(h.len() as f64 * c / siso_sum, "normalized capacity")
}

/// Σ_i log2(1 + ρ·|h_i|²).
pub fn siso_capacity_sum(h: &GainVector, rho: Snr) -> f64 {
    h.iter().map(|g| log2_1p(rho.linear() * g.norm_sqr())).sum()
}

pub fn gain_ratios(h: &GainVector) -> Result<GainRatioVector> {
    let reference = h[0].norm();
    if reference == 0.0 {
        return Err(Error::ReferenceZero);
    }
    let mut ratios: Vec<f64> = h.iter().map(|g| g.norm() / reference).collect();
    ratios[0] = 1.0;
    Ok(GainRatioVector(ratios))
}

/// Received level of one element for a given transmit power.
pub fn rss_dbm(h: Complex64, tx_power_dbm: f64) -> Result<Rss> {
    if !h.re.is_finite() || !h.im.is_finite() || !tx_power_dbm.is_finite() {
        return Err(Error::InvalidInput("rss of a non-finite gain or power".into()));
    }
    let magnitude = h.norm();
    if magnitude == 0.0 {
        return Ok(Rss::BelowFloor);
    }
    Ok(Rss::Dbm(tx_power_dbm + amplitude_to_db(magnitude)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn gv(v: &[(f64, f64)]) -> GainVector {
        GainVector::new(v.iter().map(|&(r, i)| c(r, i)).collect()).unwrap()
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(GainVector::new(vec![]).is_err());
        assert!(GainVector::new(vec![c(f64::NAN, 0.0)]).is_err());
        assert!(GainVector::new(vec![c(1.0, f64::INFINITY)]).is_err());
        assert!(Snr::from_linear(-1.0).is_err());
        assert!(Snr::from_linear(f64::NAN).is_err());
    }

    #[test]
    fn capacity_examples() {
        let rho1 = Snr::from_linear(1.0).unwrap();
        let h = gv(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        assert_eq!(capacity(&h, rho1).unwrap().bps_per_hz(), 1.0);
        assert_eq!(capacity_det_oracle(&h, rho1).unwrap().bps_per_hz(), 1.0);

        let zero = Snr::from_linear(0.0).unwrap();
        let any = gv(&[(0.3, -2.0), (1.0, 1.0)]);
        assert_eq!(capacity(&any, zero).unwrap().bps_per_hz(), 0.0);

        let ones = gv(&[(1.0, 0.0); 4]);
        let rho = Snr::from_linear(1995.26).unwrap();
        let got = capacity(&ones, rho).unwrap().bps_per_hz();
        assert!((got - 12.96254179323528).abs() < 1e-12);
        let oracle = capacity_det_oracle(&ones, rho).unwrap().bps_per_hz();
        assert!((got - oracle).abs() < 1e-9);
    }

    #[test]
    fn determinant_oracle_examples() {
        let rho = Snr::from_linear(3.7).unwrap();
        let zero = GainVector::zeros(4).unwrap();
        assert_eq!(capacity_det_oracle(&zero, rho).unwrap().bps_per_hz(), 0.0);

        let h = gv(&[(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]);
        let got = capacity_det_oracle(&h, Snr::from_linear(2.0).unwrap())
            .unwrap()
            .bps_per_hz();
        assert!((got - 9f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn determinant_of_known_matrix() {
        // [[2, i], [-i, 3]] has determinant 6 - 1 = 5.
        let mut m = vec![vec![c(2.0, 0.0), c(0.0, 1.0)], vec![c(0.0, -1.0), c(3.0, 0.0)]];
        let d = determinant(&mut m);
        assert!((d - c(5.0, 0.0)).norm() < 1e-14);
        // Row swap flips the sign.
        let mut m = vec![vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]];
        assert!((determinant(&mut m) - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn normalized_capacity_examples() {
        let single = gv(&[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        let rho = Snr::from_linear(100.0).unwrap();
        assert_eq!(normalized_capacity(&single, rho).unwrap(), 4.0);

        let ones = gv(&[(1.0, 0.0); 4]);
        let cn = normalized_capacity(&ones, Snr::from_linear(1995.26).unwrap()).unwrap();
        assert!((cn - 1.182380969501455).abs() < 1e-12);

        let cn_small = normalized_capacity(&ones, Snr::from_linear(1e-9).unwrap()).unwrap();
        assert!((cn_small - 4.0).abs() < 1e-4);
    }

    #[test]
    fn normalized_capacity_undefined() {
        let zero = GainVector::zeros(4).unwrap();
        assert!(matches!(
            normalized_capacity(&zero, Snr::from_linear(10.0).unwrap()),
            Err(Error::UndefinedRatio(_))
        ));
        let ones = gv(&[(1.0, 0.0); 4]);
        assert!(matches!(
            normalized_capacity(&ones, Snr::from_linear(0.0).unwrap()),
            Err(Error::UndefinedRatio(_))
        ));
    }

    #[test]
    fn gain_ratio_examples() {
        let k = gain_ratios(&gv(&[(1.0, 0.0); 4])).unwrap();
        assert_eq!(k.linear(), &[1.0, 1.0, 1.0, 1.0]);

        let k = gain_ratios(&gv(&[(2.0, 0.0), (0.0, 1.0), (0.5, 0.0), (2.0, 0.0)])).unwrap();
        assert_eq!(k.linear(), &[1.0, 0.5, 0.25, 1.0]);
        let db = k.db();
        let expected = [0.0, -6.020599913279624, -12.041199826559248, 0.0];
        for (a, b) in db.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }

        let dead = gv(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (1.0, 0.0)]);
        assert!(matches!(gain_ratios(&dead), Err(Error::ReferenceZero)));
    }

    #[test]
    fn rss_examples() {
        assert_eq!(rss_dbm(c(1.0, 0.0), -8.0).unwrap(), Rss::Dbm(-8.0));
        let lam = 299_792_458.0 / 2.4e9;
        let h = lam / (4.0 * std::f64::consts::PI * 4.5);
        let got = rss_dbm(c(h, 0.0), -8.0).unwrap().dbm().unwrap();
        assert!((got - -61.11625833162236).abs() < 1e-9);
        assert_eq!(rss_dbm(c(0.0, 0.0), -8.0).unwrap(), Rss::BelowFloor);
    }

    #[test]
    fn snr_db_round_trip() {
        for db in [-30.0, -3.0, 0.0, 12.5, 33.0, 60.0] {
            let s = Snr::from_db(db).unwrap();
            assert!((s.db() - db).abs() <= 1e-12 * db.abs().max(1.0));
        }
        assert!((Snr::from_db(33.0).unwrap().linear() - 1995.2623149688789).abs() < 1e-9);
    }
}
