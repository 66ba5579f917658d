//! Exact lattice convolution and `m`-fold convolution powers.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::lattice::LatticePmf;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolutionConfig {
    /// Output support size above which the transform path is used.
    pub fft_threshold: usize,
    /// Largest permitted result support.
    pub atom_budget: u64,
}

impl Default for ConvolutionConfig {
    fn default() -> Self {
        ConvolutionConfig {
            fft_threshold: 4096,
            atom_budget: 100_000_000,
        }
    }
}

// Shorter-operand size below which the direct product is always used.
const SHORT_OPERAND: usize = 32;

fn check_steps(a: &LatticePmf, b: &LatticePmf) -> Result<()> {
    if a.step_denominator() != b.step_denominator() {
        return Err(Error::domain(format!(
            "cannot convolve lattices with steps 1/{} and 1/{}",
            a.step_denominator(),
            b.step_denominator()
        )));
    }
    Ok(())
}

fn check_budget(atoms: u64, cfg: &ConvolutionConfig) -> Result<()> {
    if atoms > cfg.atom_budget {
        return Err(Error::Capacity {
            atoms,
            budget: cfg.atom_budget,
        });
    }
    Ok(())
}

/// Law of `X + Y` for independent `X ~ a`, `Y ~ b`.
pub fn convolve(a: &LatticePmf, b: &LatticePmf, cfg: &ConvolutionConfig) -> Result<LatticePmf> {
    check_steps(a, b)?;
    let out_len = (a.len() + b.len() - 1) as u64;
    check_budget(out_len, cfg)?;
    if out_len as usize > cfg.fft_threshold && a.len().min(b.len()) > SHORT_OPERAND {
        Ok(convolve_fft(a, b))
    } else {
        Ok(convolve_direct(a, b))
    }
}

/// Schoolbook convolution, `O(|a| |b|)`.
pub fn convolve_direct(a: &LatticePmf, b: &LatticePmf) -> LatticePmf {
    let (x, y) = (a.probs(), b.probs());
    let mut out = vec![0.0; x.len() + y.len() - 1];
    for (i, &p) in x.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for (o, &q) in out[i..].iter_mut().zip(y) {
            *o += p * q;
        }
    }
    LatticePmf::from_raw(
        a.step_denominator(),
        a.offset() + b.offset(),
        out,
        a.cleanup_mass() + b.cleanup_mass(),
        false,
    )
}

/// Transform-based convolution. Residual negative entries are clamped and
/// the result renormalized; the removed mass is recorded on the result.
pub fn convolve_fft(a: &LatticePmf, b: &LatticePmf) -> LatticePmf {
    let out_len = a.len() + b.len() - 1;
    let size = out_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);

    let load = |p: &[f64]| {
        let mut buf = vec![Complex::new(0.0, 0.0); size];
        for (c, &v) in buf.iter_mut().zip(p) {
            c.re = v;
        }
        buf
    };

    let mut fa = load(a.probs());
    fwd.process(&mut fa);
    if std::ptr::eq(a, b) || a.probs() == b.probs() {
        fa.iter_mut().for_each(|z| *z = *z * *z);
    } else {
        let mut fb = load(b.probs());
        fwd.process(&mut fb);
        fa.iter_mut().zip(&fb).for_each(|(z, w)| *z *= *w);
    }
    inv.process(&mut fa);

    let scale = 1.0 / size as f64;
    let out: Vec<f64> = fa[..out_len].iter().map(|z| z.re * scale).collect();
    LatticePmf::from_raw(
        a.step_denominator(),
        a.offset() + b.offset(),
        out,
        a.cleanup_mass() + b.cleanup_mass(),
        true,
    )
}

/// Law of the sum of `m` independent copies of `base`, by binary
/// exponentiation over [`convolve`].
pub fn convolve_power(base: &LatticePmf, m: u64, cfg: &ConvolutionConfig) -> Result<LatticePmf> {
    if m == 0 {
        return Err(Error::domain("convolution power must be at least 1"));
    }
    let atoms = (base.len() as u64 - 1)
        .checked_mul(m)
        .and_then(|x| x.checked_add(1))
        .unwrap_or(u64::MAX);
    check_budget(atoms, cfg)?;

    let mut acc: Option<LatticePmf> = None;
    let mut square = base.clone();
    let mut rest = m;
    loop {
        if rest & 1 == 1 {
            acc = Some(match acc {
                None => square.clone(),
                Some(x) => convolve(&x, &square, cfg)?,
            });
        }
        rest >>= 1;
        if rest == 0 {
            break;
        }
        square = convolve(&square, &square, cfg)?;
    }
    Ok(acc.expect("m >= 1"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OutcomeModel;

    fn base(model: &OutcomeModel) -> LatticePmf {
        LatticePmf::from_model(model).unwrap()
    }

    fn binomial_pmf(n: u64) -> Vec<f64> {
        // Pascal row scaled by 2^-n, built by repeated halving.
        let mut row = vec![1.0f64];
        for _ in 0..n {
            let mut next = vec![0.0; row.len() + 1];
            for (i, &v) in row.iter().enumerate() {
                next[i] += 0.5 * v;
                next[i + 1] += 0.5 * v;
            }
            row = next;
        }
        row
    }

    #[test]
    fn classical_square_is_binomial() {
        let b = base(&OutcomeModel::classical());
        let p = convolve_power(&b, 2, &ConvolutionConfig::default()).unwrap();
        assert_eq!(p.offset(), 0);
        assert_eq!(p.probs(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn power_one_is_identity() {
        for model in [OutcomeModel::classical(), OutcomeModel::chess(), OutcomeModel::chess_with_decisive(0.1).unwrap()] {
            let b = base(&model);
            assert_eq!(convolve_power(&b, 1, &ConvolutionConfig::default()).unwrap(), b);
        }
    }

    #[test]
    fn chess_square_matches_enumeration() {
        let b = base(&OutcomeModel::chess());
        let p = convolve_power(&b, 2, &ConvolutionConfig::default()).unwrap();
        // All 9 outcome pairs enumerated by hand.
        let mut expected = [0.0; 5];
        for (i, wi) in [0.25, 0.5, 0.25].iter().enumerate() {
            for (j, wj) in [0.25, 0.5, 0.25].iter().enumerate() {
                expected[i + j] += wi * wj;
            }
        }
        assert_eq!(p.probs(), &expected);
        assert_eq!(expected, [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0]);
    }

    #[test]
    fn large_power_matches_pascal_row() {
        // chess^m is Bin(2m, 1/2) on half-points.
        let b = base(&OutcomeModel::chess());
        let m = 3000;
        let p = convolve_power(&b, m, &ConvolutionConfig::default()).unwrap();
        let expected = binomial_pmf(2 * m);
        let lead = expected.iter().position(|&v| v != 0.0).unwrap() as i64;
        let mut worst: f64 = 0.0;
        for (i, &e) in expected.iter().enumerate() {
            worst = worst.max((p.prob_at(i as i64) - e).abs());
        }
        assert!(worst < 1e-14, "worst atom error {worst}");
        assert!(p.offset() >= lead);
        assert!((p.mean() - m as f64 * 0.5).abs() < 1e-9);
    }

    #[test]
    fn capacity_error() {
        let b = base(&OutcomeModel::chess());
        let cfg = ConvolutionConfig {
            atom_budget: 1000,
            ..Default::default()
        };
        assert!(matches!(convolve_power(&b, 600, &cfg), Err(Error::Capacity { atoms: 1201, .. })));
        assert!(convolve_power(&b, 499, &cfg).is_ok());
    }

    #[test]
    fn mismatched_steps_rejected() {
        let a = base(&OutcomeModel::classical());
        let b = base(&OutcomeModel::chess());
        assert!(convolve(&a, &b, &ConvolutionConfig::default()).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn pmf_strategy() -> impl Strategy<Value = LatticePmf> {
            (1u32..5, -20i64..20, prop::collection::vec(0.0f64..1.0, 1..80)).prop_filter_map(
                "nonzero mass",
                |(k, offset, mut w)| {
                    w[0] += 0.01;
                    let last = w.len() - 1;
                    w[last] += 0.01;
                    let s: f64 = w.iter().sum();
                    w.iter_mut().for_each(|x| *x /= s);
                    LatticePmf::new(k, offset, w).ok()
                },
            )
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn direct_and_transform_agree(a in pmf_strategy(), b in pmf_strategy()) {
                let b = LatticePmf::new(a.step_denominator(), b.offset(), b.probs().to_vec()).unwrap();
                let d = convolve_direct(&a, &b);
                let f = convolve_fft(&a, &b);
                prop_assert_eq!(d.offset(), f.offset());
                prop_assert_eq!(d.len(), f.len());
                for (x, y) in d.probs().iter().zip(f.probs()) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }

            #[test]
            fn power_is_additive(a in pmf_strategy(), m1 in 1u64..40, m2 in 1u64..40) {
                let cfg = ConvolutionConfig { fft_threshold: 256, ..Default::default() };
                let whole = convolve_power(&a, m1 + m2, &cfg).unwrap();
                let split = convolve(
                    &convolve_power(&a, m1, &cfg).unwrap(),
                    &convolve_power(&a, m2, &cfg).unwrap(),
                    &cfg,
                ).unwrap();
                let lo = whole.offset().min(split.offset());
                let hi = whole.max_index().max(split.max_index());
                for idx in lo..=hi {
                    prop_assert!((whole.prob_at(idx) - split.prob_at(idx)).abs() < 1e-11);
                }
            }
        }
    }
}
