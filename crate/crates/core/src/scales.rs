//! Scale sequences, progressive triples and the two parameter-family
//! generators.
//!
//! A scale is a pair of interleaved sequences `lo_0 <= hi_0 < lo_1 <= hi_1 ...`
//! growing fast enough that every level dwarfs the product of everything
//! below it. Triples `(f, g, h)` live inside the band `lo <= g < f <= hi`.
//!
//! The limit conditions (`log hi / log lo` along the scale, and
//! `log(f/g) / log h` along a triple) cannot be decided on a finite window, so
//! they are exposed as profiles without a verdict.

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::nat::{self, serde_nat, BoundFn, Ratio};

/// Tolerance for the few places where a floating-point logarithm is floored.
pub const LOG_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ScaleSeq {
    #[serde(with = "serde_nat::vec")]
    lo: Vec<BigUint>,
    #[serde(with = "serde_nat::vec")]
    hi: Vec<BigUint>,
}

impl<'de> Deserialize<'de> for ScaleSeq {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            #[serde(with = "serde_nat::vec")]
            lo: Vec<BigUint>,
            #[serde(with = "serde_nat::vec")]
            hi: Vec<BigUint>,
        }
        let raw = Raw::deserialize(d)?;
        validate_scale(raw.lo, raw.hi).map_err(serde::de::Error::custom)
    }
}

impl ScaleSeq {
    pub fn window(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self, k: usize) -> &BigUint {
        &self.lo[k]
    }

    pub fn hi(&self, k: usize) -> &BigUint {
        &self.hi[k]
    }

    pub fn lo_fn(&self) -> BoundFn {
        BoundFn::new(self.lo.clone()).expect("scale entries are >= 2")
    }

    pub fn hi_fn(&self) -> BoundFn {
        BoundFn::new(self.hi.clone()).expect("scale entries are >= 2")
    }

    /// `log hi_k / log lo_k` per level. Reported only.
    pub fn growth_profile(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| nat::log2(h) / nat::log2(l))
            .collect()
    }

    /// Named presets.
    ///
    /// * `T1`: the smallest three-level scale, `lo = (2,8,128)`, `hi = (3,12,200)`.
    /// * `T2`: a four-level scale whose first band is wide enough for splits of
    ///   norm 3 (`hi_0 = 20`), used for the extraction corpus.
    /// * `SQ`: single level `lo = 2`, `hi = 2^13` for the squared-pair generator.
    /// * `BLASS`: two levels `lo = (2, 257)`, `hi = (128, 257^16)`, wide enough
    ///   for a two-node tree level under [`BLASS_DEMO_BASE`].
    pub fn preset(name: &str) -> Option<ScaleSeq> {
        let (lo, hi): (Vec<BigUint>, Vec<BigUint>) = match name {
            "T1" => (big(&[2, 8, 128]), big(&[3, 12, 200])),
            "T2" => (big(&[2, 41, 2051, 4_307_101]), big(&[20, 50, 2100, 4_400_000])),
            "SQ" => (big(&[2]), big(&[1 << 13])),
            "BLASS" => (
                big(&[2, 257]),
                vec![BigUint::from(128u32), BigUint::from(257u32).pow(16)],
            ),
            _ => return None,
        };
        Some(validate_scale(lo, hi).expect("presets are valid"))
    }

    pub const PRESETS: [&'static str; 4] = ["T1", "T2", "SQ", "BLASS"];
}

/// Outer logarithm base that makes the `BLASS` preset produce a two-node level.
pub const BLASS_DEMO_BASE: f64 = 1.125;

fn big(v: &[u64]) -> Vec<BigUint> {
    v.iter().map(|&x| BigUint::from(x)).collect()
}

/// Checks the growth constraints: `prod_{j<k} lo_j <= lo_k`,
/// `lo_k * hi_k < lo_{k+1}` and `lo_k <= hi_k`.
pub fn validate_scale(lo: Vec<BigUint>, hi: Vec<BigUint>) -> Result<ScaleSeq> {
    if lo.len() != hi.len() {
        return Err(Error::WindowMismatch {
            expected: lo.len(),
            got: hi.len(),
        });
    }
    if lo.is_empty() {
        return Err(Error::Malformed("scale window must be at least 1".into()));
    }
    let two = BigUint::from(2u32);
    if let Some(k) = lo.iter().zip(&hi).position(|(l, h)| *l < two || *h < two) {
        return Err(Error::Malformed(format!("scale entry below 2 at level {k}")));
    }

    let mut violations = Vec::new();
    let mut prefix = BigUint::one();
    for k in 0..lo.len() {
        if prefix > lo[k] {
            violations.push(Violation::new(
                k,
                "product-below",
                format!("prod of lower entries {prefix} > lo = {}", lo[k]),
            ));
        }
        if k + 1 < lo.len() {
            let p = &lo[k] * &hi[k];
            if p >= lo[k + 1] {
                violations.push(Violation::new(
                    k,
                    "interleave",
                    format!("{}*{} = {p} >= {}", lo[k], hi[k], lo[k + 1]),
                ));
            }
        }
        if lo[k] > hi[k] {
            violations.push(Violation::new(k, "lo-above-hi", format!("{} > {}", lo[k], hi[k])));
        }
        prefix *= &lo[k];
    }
    if violations.is_empty() {
        Ok(ScaleSeq { lo, hi })
    } else {
        Err(Error::Violations(violations))
    }
}

/// A triple `(f, g, h)` validated against a scale.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Triple {
    pub f: BoundFn,
    pub g: BoundFn,
    pub h: BoundFn,
    pub scale: ScaleSeq,
}

impl<'de> Deserialize<'de> for Triple {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            f: BoundFn,
            g: BoundFn,
            h: BoundFn,
            scale: ScaleSeq,
        }
        let r = Raw::deserialize(d)?;
        validate_triple(r.f, r.g, r.h, r.scale).map_err(serde::de::Error::custom)
    }
}

impl Triple {
    pub fn window(&self) -> usize {
        self.f.window()
    }
}

pub fn validate_triple(f: BoundFn, g: BoundFn, h: BoundFn, scale: ScaleSeq) -> Result<Triple> {
    let w = scale.window();
    for b in [&f, &g, &h] {
        if b.window() != w {
            return Err(Error::WindowMismatch {
                expected: w,
                got: b.window(),
            });
        }
    }
    let mut violations = Vec::new();
    for k in 0..w {
        let (lo, hi) = (scale.lo(k), scale.hi(k));
        if g.get(k) < lo {
            violations.push(Violation::new(k, "g >= lo", format!("g = {} < lo = {lo}", g.get(k))));
        }
        if g.get(k) >= f.get(k) {
            violations.push(Violation::new(
                k,
                "g < f",
                format!("g = {} >= f = {}", g.get(k), f.get(k)),
            ));
        }
        if f.get(k) > hi {
            violations.push(Violation::new(k, "f <= hi", format!("f = {} > hi = {hi}", f.get(k))));
        }
        if h.get(k) < lo {
            violations.push(Violation::new(k, "h >= lo", format!("h = {} < lo = {lo}", h.get(k))));
        }
    }
    if violations.is_empty() {
        Ok(Triple { f, g, h, scale })
    } else {
        Err(Error::Violations(violations))
    }
}

/// `log(f/g) / log h` per level. Reported only; nothing is asserted about
/// its growth.
pub fn progressivity_profile(t: &Triple) -> Vec<f64> {
    (0..t.window())
        .map(|k| (nat::log2(t.f.get(k)) - nat::log2(t.g.get(k))) / nat::log2(t.h.get(k)))
        .collect()
}

/// Per-level `min(f_zeta / g_xi, (f_xi / g_xi) / h_zeta)`, exact.
pub fn separation_profile(xi: &Triple, zeta: &Triple) -> Result<Vec<Ratio>> {
    if xi.window() != zeta.window() {
        return Err(Error::WindowMismatch {
            expected: xi.window(),
            got: zeta.window(),
        });
    }
    Ok((0..xi.window())
        .map(|k| {
            let a = Ratio::new(zeta.f.get(k).clone(), xi.g.get(k).clone());
            let b = Ratio::new(xi.f.get(k).clone(), xi.g.get(k) * zeta.h.get(k));
            a.min(b)
        })
        .collect())
}

/// Width of the tree level used by the continuum-family generator:
/// `floor(sqrt(log_base(log hi / log lo)) / 2)`, clamped to at least 1.
pub fn blass_ell(lo: &BigUint, hi: &BigUint, log_base: f64) -> u64 {
    let ratio = nat::log2(hi) / nat::log2(lo);
    let inner = ratio.ln() / log_base.ln();
    if inner.is_nan() || inner <= 0.0 {
        return 1;
    }
    let ell = (0.5 * inner.sqrt() + LOG_TOLERANCE).floor();
    (ell as u64).max(1)
}

/// The binary tree behind the continuum family: level widths follow
/// `blass_ell`, limited to what a tree can realize (`m_0 = 1`,
/// `m_k <= m_{k+1} <= 2 m_k`). Nodes at each level are listed in
/// lexicographic order; node `j` of level `k+1` with `j < 2 (m_{k+1} - m_k)`
/// comes from the splitting of the first `m_{k+1} - m_k` nodes of level `k`.
pub fn blass_tree(scale: &ScaleSeq, log_base: f64) -> Vec<Vec<Vec<bool>>> {
    let mut levels: Vec<Vec<Vec<bool>>> = vec![vec![vec![]]];
    for k in 1..scale.window() {
        let prev = &levels[k - 1];
        let m = prev.len() as u64;
        let want = blass_ell(scale.lo(k), scale.hi(k), log_base).clamp(m, 2 * m);
        let extra = (want - m) as usize;
        let mut next = Vec::with_capacity(want as usize);
        for (j, s) in prev.iter().enumerate() {
            let mut zero = s.clone();
            zero.push(false);
            next.push(zero);
            if j < extra {
                let mut one = s.clone();
                one.push(true);
                next.push(one);
            }
        }
        levels.push(next);
    }
    levels
}

/// One member `(f_x, g_x, g_x)` of the continuum family, selected by a branch
/// `x` of [`blass_tree`]. At level `k`, if `x|k` is the `i`-th node (1-based)
/// then `f_x(k) = lo_k^(l^(2i))` and `g_x(k) = lo_k^(l^(2i-1))`.
pub fn gen_blass_family(scale: &ScaleSeq, tree_path: &[bool], log_base: f64) -> Result<Triple> {
    let w = scale.window();
    if tree_path.len() < w {
        return Err(Error::Precondition(format!(
            "tree path has length {} < window {w}",
            tree_path.len()
        )));
    }
    if log_base.is_nan() || log_base <= 1.0 {
        return Err(Error::Precondition(format!("log base {log_base} must exceed 1")));
    }
    let tree = blass_tree(scale, log_base);
    let mut f = Vec::with_capacity(w);
    let mut g = Vec::with_capacity(w);
    for k in 0..w {
        let prefix = &tree_path[..k];
        let i = tree[k]
            .iter()
            .position(|s| s.as_slice() == prefix)
            .ok_or_else(|| Error::Generator {
                level: k,
                reason: "path leaves the tree".into(),
            })? as u32
            + 1;
        let ell = BigUint::from(blass_ell(scale.lo(k), scale.hi(k), log_base));
        let lo = scale.lo(k);
        let cap = scale.hi(k).bits();
        let exp_f = ell.pow(2 * i);
        let exp_g = ell.pow(2 * i - 1);
        let pow = |e: &BigUint| -> Result<BigUint> {
            let e = u64::try_from(e).map_err(|_| Error::Generator {
                level: k,
                reason: "exponent overflows".into(),
            })?;
            nat::pow_capped(lo, e, cap).ok_or_else(|| Error::Generator {
                level: k,
                reason: format!("lo^{e} exceeds hi = {}", scale.hi(k)),
            })
        };
        f.push(pow(&exp_f)?);
        g.push(pow(&exp_g)?);
    }
    let f = BoundFn::new(f)?;
    let g = BoundFn::new(g)?;
    validate_triple(f, g.clone(), g, scale.clone()).map_err(first_violation_as_generator)
}

/// The squared pair: `(f, g, h) = (lo^{3l}, lo^{2l}, lo)` with
/// `l = floor(log2(hi/lo) / 6)` (computed exactly), and `(f^2, g^2, h)`.
pub fn gen_square_pair(scale: &ScaleSeq) -> Result<(Triple, Triple)> {
    let w = scale.window();
    let mut f = Vec::with_capacity(w);
    let mut g = Vec::with_capacity(w);
    for k in 0..w {
        let ell = square_ell(scale.lo(k), scale.hi(k));
        if ell == 0 {
            return Err(Error::Generator {
                level: k,
                reason: "l_k = 0: hi/lo < 2^6".into(),
            });
        }
        let ell = u32::try_from(ell).map_err(|_| Error::TooLarge(format!("l_{k} = {ell}")))?;
        f.push(scale.lo(k).pow(3 * ell));
        g.push(scale.lo(k).pow(2 * ell));
    }
    let f = BoundFn::new(f)?;
    let g = BoundFn::new(g)?;
    let h = scale.lo_fn();
    let f2 = f.pointwise(&f, |a, b| a * b)?;
    let g2 = g.pointwise(&g, |a, b| a * b)?;
    let first = validate_triple(f, g, h.clone(), scale.clone()).map_err(first_violation_as_generator)?;
    let second = validate_triple(f2, g2, h, scale.clone()).map_err(first_violation_as_generator)?;
    Ok((first, second))
}

/// Largest `l` with `lo * 2^{6l} <= hi`.
pub fn square_ell(lo: &BigUint, hi: &BigUint) -> u64 {
    let mut ell = 0u64;
    while (lo << (6 * (ell + 1))) <= *hi {
        ell += 1;
    }
    ell
}

fn first_violation_as_generator(e: Error) -> Error {
    match e {
        Error::Violations(v) if !v.is_empty() => Error::Generator {
            level: v[0].level,
            reason: format!("{}: {}", v[0].rule, v[0].detail),
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(v: &[u64]) -> Vec<BigUint> {
        big(v)
    }

    #[test]
    fn t1_is_valid() {
        assert!(validate_scale(b(&[2, 8, 128]), b(&[3, 12, 200])).is_ok());
    }

    #[test]
    fn interleave_violation_is_reported() {
        let err = validate_scale(b(&[2, 4]), b(&[3, 8])).unwrap_err();
        match err {
            Error::Violations(v) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].level, 0);
                assert_eq!(v[0].rule, "interleave");
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn single_level_is_vacuous() {
        assert!(validate_scale(b(&[2]), b(&[2])).is_ok());
    }

    #[test]
    fn malformed_scales() {
        assert!(matches!(
            validate_scale(b(&[2, 8]), b(&[3])),
            Err(Error::WindowMismatch { .. })
        ));
        assert!(matches!(validate_scale(b(&[1]), b(&[3])), Err(Error::Malformed(_))));
    }

    #[test]
    fn boundary_triple_on_t1() {
        let s = ScaleSeq::preset("T1").unwrap();
        let t = validate_triple(s.hi_fn(), s.lo_fn(), s.lo_fn(), s.clone());
        assert!(t.is_ok());
    }

    #[test]
    fn equal_f_and_g_rejected() {
        let s = validate_scale(b(&[2]), b(&[4])).unwrap();
        let two = BoundFn::from_u64s(&[2]).unwrap();
        let err = validate_triple(two.clone(), two.clone(), two, s).unwrap_err();
        assert!(matches!(err, Error::Violations(ref v) if v.iter().any(|x| x.rule == "g < f")));
    }

    #[test]
    fn f_below_lo_rejected() {
        let s = ScaleSeq::preset("T1").unwrap();
        let f = BoundFn::from_u64s(&[3, 7, 200]).unwrap();
        let g = BoundFn::from_u64s(&[2, 8, 128]).unwrap();
        let err = validate_triple(f, g.clone(), g, s).unwrap_err();
        assert!(matches!(err, Error::Violations(ref v) if v.iter().any(|x| x.level == 1)));
    }

    #[test]
    fn progressivity_single_level() {
        let s = validate_scale(b(&[2]), b(&[16])).unwrap();
        let t = validate_triple(
            BoundFn::from_u64s(&[16]).unwrap(),
            BoundFn::from_u64s(&[4]).unwrap(),
            BoundFn::from_u64s(&[2]).unwrap(),
            s,
        )
        .unwrap();
        let p = progressivity_profile(&t);
        assert!((p[0] - 2.0).abs() < LOG_TOLERANCE);
    }

    #[test]
    fn blass_ell_on_doubly_exponential_hi() {
        let hi = BigUint::one() << 65536u32;
        assert_eq!(blass_ell(&BigUint::from(2u32), &hi, 2.0), 2);
        // a narrow band computes to 0 and is clamped
        assert_eq!(blass_ell(&BigUint::from(2u32), &BigUint::from(3u32), 2.0), 1);
    }

    #[test]
    fn blass_single_level_values() {
        let s = validate_scale(b(&[2]), vec![BigUint::one() << 65536u32]).unwrap();
        let t = gen_blass_family(&s, &[false], 2.0).unwrap();
        assert_eq!(t.f.get(0), &BigUint::from(16u32));
        assert_eq!(t.g.get(0), &BigUint::from(4u32));
        assert_eq!(t.h, t.g);
    }

    #[test]
    fn blass_on_t1_fails_naming_a_level() {
        let s = ScaleSeq::preset("T1").unwrap();
        let err = gen_blass_family(&s, &[false; 3], 2.0).unwrap_err();
        assert!(matches!(err, Error::Generator { level: 0, .. }));
    }

    #[test]
    fn square_pair_on_sq() {
        let s = ScaleSeq::preset("SQ").unwrap();
        let (a, b2) = gen_square_pair(&s).unwrap();
        assert_eq!(a.f.to_u64s().unwrap(), vec![64]);
        assert_eq!(a.g.to_u64s().unwrap(), vec![16]);
        assert_eq!(a.h.to_u64s().unwrap(), vec![2]);
        assert_eq!(b2.f.to_u64s().unwrap(), vec![64 * 64]);
        assert_eq!(b2.g.to_u64s().unwrap(), vec![16 * 16]);
    }

    #[test]
    fn square_pair_rejects_narrow_band() {
        let s = ScaleSeq::preset("T1").unwrap();
        assert!(matches!(gen_square_pair(&s), Err(Error::Generator { level: 0, .. })));
    }

    #[test]
    fn separation_first_term() {
        let s = validate_scale(b(&[2]), b(&[100])).unwrap();
        let xi = validate_triple(
            BoundFn::from_u64s(&[20]).unwrap(),
            BoundFn::from_u64s(&[8]).unwrap(),
            BoundFn::from_u64s(&[2]).unwrap(),
            s.clone(),
        )
        .unwrap();
        let zeta = validate_triple(
            BoundFn::from_u64s(&[3]).unwrap(),
            BoundFn::from_u64s(&[2]).unwrap(),
            BoundFn::from_u64s(&[2]).unwrap(),
            s,
        )
        .unwrap();
        let p = separation_profile(&xi, &zeta).unwrap();
        // first term 3/8, second 20/(8*2) = 5/4
        assert_eq!(p[0], Ratio::new(3u32.into(), 8u32.into()));
    }
}
