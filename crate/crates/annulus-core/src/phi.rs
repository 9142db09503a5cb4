//! The trigonometric cocycle driving the skew product, and its transfer
//! function.
//!
//! With frequencies q_1 < q_2 < ... picked by
//! [`select_phi_denominators`](crate::returns::select_phi_denominators),
//! the cocycle is
//!
//! ```text
//! phi(x) = sum_n (2/n) [ sin(2 pi q_n (x + alpha)) - sin(2 pi q_n x) ]
//! ```
//!
//! which is by construction the coboundary of
//! `h(x) = sum_n (2/n) sin(2 pi q_n x)` at matched truncation:
//! `h(x + alpha) - h(x) = phi(x)` holds termwise. Each term is evaluated in
//! product form `(4/n) sin(pi q_n alpha) cos(2 pi q_n x + pi q_n alpha)`,
//! one cosine per term, with all circle reductions done in 128-bit fixed
//! point before the transcendental call.

use num::BigUint;
use num::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed::CirclePos;
use crate::returns::select_phi_denominators;
use crate::rotation::RotationNumber;

/// Threshold under which a term's sup-norm bound 4 pi / (n q_n) no longer
/// moves an f64 value: the machine-precision truncation policy.
pub const MACHINE_TERM_BOUND: f64 = 1e-16;

#[derive(Clone, Debug)]
struct Term {
    /// q_n reduced mod 2^128 (exact for the wrapping reduction q_n x mod 1).
    q_red: u128,
    /// frac(q_n alpha).
    q_alpha: CirclePos,
    /// frac(q_n alpha) / 2, the phase offset of the product form.
    half: CirclePos,
    /// (4/n) sin(pi q_n alpha), the product-form amplitude.
    amp: f64,
    /// 2/n.
    coeff: f64,
}

/// The truncated cocycle series.
#[derive(Clone, Debug)]
pub struct PhiSeries {
    alpha: RotationNumber,
    qs: Vec<BigUint>,
    terms: Vec<Term>,
}

/// The transfer function h with h(x + alpha) - h(x) = phi(x) termwise.
/// It shares the frequency list of the series it came from; h has no
/// uniform truncation of its own, so every h-dependent computation names
/// its `PhiSeries` explicitly.
#[derive(Clone, Debug)]
pub struct TransferFunction<'a> {
    series: &'a PhiSeries,
}

/// Serializable description of a series: `{alpha_spec, qs, n_terms}`.
#[derive(Clone, Debug, Serialize)]
pub struct PhiSeriesSpec {
    pub alpha_spec: String,
    pub qs: Vec<String>,
    pub n_terms: usize,
}

/// Build the series with `n_terms` terms over `alpha`.
pub fn build_phi(alpha: &RotationNumber, n_terms: usize) -> Result<PhiSeries> {
    if alpha.certified_bits() < 128 {
        return Err(Error::InsufficientPrecision(format!(
            "series construction needs alpha certified to >= 128 bits, have {}",
            alpha.certified_bits()
        )));
    }
    let qs = select_phi_denominators(alpha, n_terms)?;
    let mut terms = Vec::with_capacity(n_terms);
    for (i, q) in qs.iter().enumerate() {
        let n = (i + 1) as f64;
        let q_red = (q % (BigUint::from(1u8) << 128u32)).to_u128().expect("reduced");
        let q_alpha = alpha.fixed().mul_big(q);
        let half = CirclePos(q_alpha.0 >> 1);
        let amp = (4.0 / n) * half.sin_2pi();
        let coeff = 2.0 / n;
        // Termwise magnitude bound 4 pi/(n q_n); q_n beyond f64 range makes
        // the bound vacuously true.
        if let Some(qf) = q.to_f64() {
            let bound = 4.0 * std::f64::consts::PI / (n * qf);
            if qf.is_finite() && amp.abs() >= bound {
                return Err(Error::InsufficientPrecision(format!(
                    "term {} violates its magnitude bound: |amp| {:.3e} >= {:.3e}",
                    i + 1,
                    amp.abs(),
                    bound
                )));
            }
        }
        terms.push(Term { q_red, q_alpha, half, amp, coeff });
    }
    Ok(PhiSeries { alpha: alpha.clone(), qs, terms })
}

/// Build with the machine-precision truncation: keep terms while the bound
/// 4 pi/(n q_n) is at least [`MACHINE_TERM_BOUND`].
pub fn build_phi_machine(alpha: &RotationNumber) -> Result<PhiSeries> {
    let mut n = 1usize;
    loop {
        let qs = select_phi_denominators(alpha, n + 1)?;
        let q_next = qs[n].to_f64().unwrap_or(f64::INFINITY);
        if 4.0 * std::f64::consts::PI / ((n + 1) as f64 * q_next) < MACHINE_TERM_BOUND {
            return build_phi(alpha, n);
        }
        n += 1;
        if n > 256 {
            return Err(Error::InsufficientPrecision(
                "machine truncation did not converge within 256 terms".into(),
            ));
        }
    }
}

impl PhiSeries {
    pub fn alpha(&self) -> &RotationNumber {
        &self.alpha
    }

    pub fn qs(&self) -> &[BigUint] {
        &self.qs
    }

    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    /// Coefficients 2/n of the real form.
    pub fn coeffs(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.coeff).collect()
    }

    /// phi(x), product form, one cosine per term.
    #[inline]
    pub fn eval(&self, x: CirclePos) -> f64 {
        let mut acc = 0.0;
        for t in &self.terms {
            let xq = x.mul_int(t.q_red);
            acc += t.amp * xq.add(t.half).cos_2pi();
        }
        acc
    }

    /// phi(x) in the split two-sine form; used as an internal cross-check
    /// of the product form.
    pub fn eval_split(&self, x: CirclePos) -> f64 {
        let mut acc = 0.0;
        for t in &self.terms {
            let xq = x.mul_int(t.q_red);
            acc += t.coeff * (xq.add(t.q_alpha).sin_2pi() - xq.sin_2pi());
        }
        acc
    }

    pub fn transfer(&self) -> TransferFunction<'_> {
        TransferFunction { series: self }
    }

    /// Sum of termwise amplitudes; an upper bound for sup|phi|.
    pub fn sup_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.amp.abs()).sum()
    }

    /// A copy with one oscillation frequency bumped to q_n + 1 while the
    /// term's phase data stays tuned to q_n. Any consistently built term is
    /// reflection-symmetric whatever its frequency, so a useful negative
    /// control has to desynchronize the two.
    pub fn with_perturbed_q(&self, index: usize) -> PhiSeries {
        let mut out = self.clone();
        out.qs[index] += 1u32;
        let q = &out.qs[index];
        out.terms[index].q_red =
            (q % (BigUint::from(1u8) << 128u32)).to_u128().expect("reduced");
        out
    }

    pub fn spec_json(&self) -> PhiSeriesSpec {
        PhiSeriesSpec {
            alpha_spec: self.alpha.spec().to_spec_string(),
            qs: self.qs.iter().map(|q| q.to_string()).collect(),
            n_terms: self.n_terms(),
        }
    }

    /// (q_n mod 2^128, frac(q_n alpha), 2/n) per term, for the engines.
    pub(crate) fn term_data(&self) -> impl Iterator<Item = (u128, CirclePos, f64)> + '_ {
        self.terms.iter().map(|t| (t.q_red, t.q_alpha, t.coeff))
    }
}

impl TransferFunction<'_> {
    /// h(x) = sum (2/n) sin(2 pi q_n x).
    #[inline]
    pub fn eval(&self, x: CirclePos) -> f64 {
        let mut acc = 0.0;
        for t in &self.series.terms {
            acc += t.coeff * x.mul_int(t.q_red).sin_2pi();
        }
        acc
    }

    /// h(x + shift) - h(x), with the difference taken termwise so the
    /// cancellation between two large h values never reaches f64.
    #[inline]
    pub fn shifted_difference(&self, x: CirclePos, shift: CirclePos) -> f64 {
        let mut acc = 0.0;
        for t in &self.series.terms {
            let xq = x.mul_int(t.q_red);
            let sq = shift.mul_int(t.q_red);
            acc += t.coeff * (xq.add(sq).sin_2pi() - xq.sin_2pi());
        }
        acc
    }
}

/// |trapezoid quadrature of phi over one period| on a grid of
/// `2 * q_N * 16` points. Every Fourier mode of the series integrates to
/// zero, so this measures pure aliasing + rounding.
pub fn mean_residual(phi: &PhiSeries) -> Result<f64> {
    let q_last = phi
        .qs
        .last()
        .and_then(|q| q.to_u64())
        .ok_or_else(|| Error::InvalidParameter("frequency exceeds u64 grid sizing".into()))?;
    let grid = 32u64
        .checked_mul(q_last)
        .filter(|&g| g <= 1 << 28)
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "mean-residual grid 32*{q_last} is too large; use a smaller truncation"
            ))
        })?;
    Ok(mean_residual_on_grid(phi, grid))
}

/// Trapezoid (= rectangle, by periodicity) mean of phi on `grid` points.
pub fn mean_residual_on_grid(phi: &PhiSeries, grid: u64) -> f64 {
    let step = CirclePos(u128::MAX / grid as u128 + 1); // 2^128 / grid, rounded
    let sum = crate::par::map_reduce(
        grid as usize,
        || 0.0f64,
        |i| phi.eval(step.mul_int(i as u128)),
        |a, b| a + b,
    );
    (sum / grid as f64).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::AlphaSpec;
    use crate::rotation::cf_expand;
    use rand::{Rng, SeedableRng};

    fn golden_phi(n: usize) -> PhiSeries {
        let a = cf_expand(&AlphaSpec::parse("golden").unwrap(), 40).unwrap();
        build_phi(&a, n).unwrap()
    }

    #[test]
    fn golden_three_terms() {
        let phi = golden_phi(3);
        let qs: Vec<u64> = phi.qs().iter().map(|q| q.to_u64().unwrap()).collect();
        assert_eq!(qs, vec![2, 21, 233]);
        let coeffs = phi.coeffs();
        assert!((coeffs[0] - 2.0).abs() < 1e-15);
        assert!((coeffs[1] - 1.0).abs() < 1e-15);
        assert!((coeffs[2] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn value_matches_high_precision_oracle() {
        // Expected values from a 60-digit evaluation of the defining
        // two-sine formula with exact golden alpha.
        let phi = golden_phi(3);
        let cases = [
            (CirclePos::ZERO, 1.867034773890091),
            (CirclePos::from_f64(1.0 / 7.0), -2.357909335087275),
            (CirclePos::from_f64(0.31), -0.0683505580871559),
        ];
        for (x, want) in cases {
            assert!(
                (phi.eval(x) - want).abs() < 2e-13,
                "phi({}) = {} want {}",
                x.to_f64(),
                phi.eval(x),
                want
            );
        }
    }

    #[test]
    fn product_and_split_forms_agree() {
        let phi = golden_phi(6);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x = CirclePos::from_f64(rng.gen::<f64>());
            assert!((phi.eval(x) - phi.eval_split(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn coboundary_identity_termwise() {
        let phi = golden_phi(6);
        let h = phi.transfer();
        let alpha = phi.alpha().fixed();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut worst = 0f64;
        for _ in 0..10_000 {
            let x = CirclePos::from_f64(rng.gen::<f64>());
            let r = (h.eval(x.add(alpha)) - h.eval(x) - phi.eval(x)).abs();
            worst = worst.max(r);
        }
        assert!(worst < 1e-12, "coboundary residual {worst}");
    }

    #[test]
    fn reflection_symmetry() {
        // phi(-x-alpha) = phi(x)
        let phi = golden_phi(6);
        let alpha = phi.alpha().fixed();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut worst = 0f64;
        for _ in 0..10_000 {
            let x = CirclePos::from_f64(rng.gen::<f64>());
            let mirrored = x.add(alpha).neg();
            worst = worst.max((phi.eval(mirrored) - phi.eval(x)).abs());
        }
        assert!(worst < 1e-12, "symmetry residual {worst}");
    }

    #[test]
    fn transfer_function_odd_and_zero_at_origin() {
        let phi = golden_phi(6);
        let h = phi.transfer();
        assert_eq!(h.eval(CirclePos::ZERO), 0.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let x = CirclePos::from_f64(rng.gen::<f64>());
            assert_eq!(h.eval(x.neg()), -h.eval(x));
        }
    }

    #[test]
    fn term_magnitude_bounds() {
        for spec in ["golden", "sqrt2m1"] {
            let a = cf_expand(&AlphaSpec::parse(spec).unwrap(), 40).unwrap();
            let phi = build_phi(&a, 6).unwrap();
            for (i, t) in phi.terms.iter().enumerate() {
                let n = (i + 1) as f64;
                let q = phi.qs[i].to_f64().unwrap();
                assert!(t.amp.abs() < 4.0 * std::f64::consts::PI / (n * q));
            }
        }
    }

    #[test]
    fn machine_truncation_golden() {
        let a = cf_expand(&AlphaSpec::parse("golden").unwrap(), 90).unwrap();
        let phi = build_phi_machine(&a).unwrap();
        let n = phi.n_terms() as f64;
        let q_last = phi.qs().last().unwrap().to_f64().unwrap();
        // Last kept term still moves an f64; the next one would not.
        assert!(4.0 * std::f64::consts::PI / (n * q_last) >= MACHINE_TERM_BOUND);
        assert!(phi.n_terms() >= 12 && phi.n_terms() <= 20, "N = {}", phi.n_terms());
    }

    #[test]
    fn mean_residual_tiny_and_refining() {
        let phi = golden_phi(3);
        let r = mean_residual(&phi).unwrap();
        assert!(r < 1e-12, "mean residual {r}");
        // Sub-Nyquist grids alias; refinement shrinks the residual.
        let coarse = mean_residual_on_grid(&phi, 100);
        let fine = mean_residual_on_grid(&phi, 32 * 233);
        assert!(fine <= coarse);

        let single = golden_phi(1);
        assert!(mean_residual(&single).unwrap() < 1e-14);
    }
}
