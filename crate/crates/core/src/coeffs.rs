//! Isotropic diffusion coefficients `A(x, s) = 𝒜(s)·Id` and a sampling
//! certifier for the structural hypotheses on `𝒜`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Shape of the profile `s ↦ 𝒜(s)`.
#[derive(Clone)]
pub enum Profile {
    /// `𝒜 ≡ 1`, the semilinear case.
    Identity,
    /// `𝒜(s) = 1 + |s|^γ / (1 + |s|^γ)`.
    Example { gamma: f64 },
    /// `𝒜(s) = Σ_k c_k s^{2k}`.
    EvenPolynomial { coeffs: Vec<f64> },
    /// Arbitrary profile given by closures for `𝒜`, `𝒜′` and optionally `𝒜″`.
    Custom {
        name: String,
        a: ScalarFn,
        da: ScalarFn,
        d2a: Option<ScalarFn>,
    },
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Identity => write!(f, "Identity"),
            Profile::Example { gamma } => write!(f, "Example {{ gamma: {gamma} }}"),
            Profile::EvenPolynomial { coeffs } => write!(f, "EvenPolynomial {{ coeffs: {coeffs:?} }}"),
            Profile::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl PartialEq for Profile {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Profile::Identity, Profile::Identity) => true,
            (Profile::Example { gamma: a }, Profile::Example { gamma: b }) => a == b,
            (Profile::EvenPolynomial { coeffs: a }, Profile::EvenPolynomial { coeffs: b }) => a == b,
            (Profile::Custom { a: fa, da: ga, .. }, Profile::Custom { a: fb, da: gb, .. }) => {
                Arc::ptr_eq(fa, fb) && Arc::ptr_eq(ga, gb)
            }
            _ => false,
        }
    }
}

/// A coefficient profile together with its structural constants.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientFamily {
    pub profile: Profile,
    /// Ellipticity lower bound `ν ∈ (0, 1]`.
    pub nu: f64,
    /// Bound `C0` on `|𝒜|` and `|𝒜′|`.
    pub c0: f64,
    /// Growth exponent `γ` in `0 ≤ s𝒜′(s) ≤ γ𝒜(s)`.
    pub gamma: f64,
    /// Whether `𝒜(-s) = 𝒜(s)` is declared.
    pub even: bool,
}

impl CoefficientFamily {
    pub fn identity(gamma: f64) -> Self {
        Self { profile: Profile::Identity, nu: 1.0, c0: 1.0, gamma, even: true }
    }

    pub fn example(gamma: f64) -> Self {
        Self {
            profile: Profile::Example { gamma },
            nu: 1.0,
            c0: example_c0(gamma),
            gamma,
            even: true,
        }
    }

    pub fn even_polynomial(coeffs: Vec<f64>, nu: f64, c0: f64, gamma: f64) -> Self {
        Self { profile: Profile::EvenPolynomial { coeffs }, nu, c0, gamma, even: true }
    }

    pub fn custom(
        name: impl Into<String>,
        a: ScalarFn,
        da: ScalarFn,
        constants: (f64, f64, f64),
        even: bool,
    ) -> Self {
        let (nu, c0, gamma) = constants;
        Self {
            profile: Profile::Custom { name: name.into(), a, da, d2a: None },
            nu,
            c0,
            gamma,
            even,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |r: String| Err(Error::InvalidParams(r));
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return bad(format!("nu must lie in (0, 1], got {}", self.nu));
        }
        // C0 = +inf encodes an unbounded derivative; certify reports it
        if !(self.c0 > 0.0) {
            return bad(format!("C0 must be positive, got {}", self.c0));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        Ok(())
    }

    /// True when `𝒜′ ≡ 0`.
    pub fn is_constant(&self) -> bool {
        matches!(self.profile, Profile::Identity)
    }

    pub fn kind_name(&self) -> &str {
        match &self.profile {
            Profile::Identity => "identity",
            Profile::Example { .. } => "example",
            Profile::EvenPolynomial { .. } => "poly",
            Profile::Custom { name, .. } => name,
        }
    }

    #[inline]
    pub fn eval_a(&self, s: f64) -> f64 {
        match &self.profile {
            Profile::Identity => 1.0,
            Profile::Example { gamma } => {
                let a = s.abs().powf(*gamma);
                1.0 + a / (1.0 + a)
            }
            Profile::EvenPolynomial { coeffs } => {
                let s2 = s * s;
                coeffs.iter().rev().fold(0.0, |acc, c| acc * s2 + c)
            }
            Profile::Custom { a, .. } => a(s),
        }
    }

    #[inline]
    pub fn eval_da(&self, s: f64) -> f64 {
        match &self.profile {
            Profile::Identity => 0.0,
            Profile::Example { gamma } => {
                if s == 0.0 {
                    return 0.0;
                }
                let r = s.abs();
                let a = r.powf(*gamma);
                let d = 1.0 + a;
                // γ|s|^{γ-2}s = γ sign(s) |s|^{γ-1}
                s.signum() * gamma * a / r / (d * d)
            }
            Profile::EvenPolynomial { coeffs } => {
                let s2 = s * s;
                let mut acc = 0.0;
                for (k, c) in coeffs.iter().enumerate().skip(1).rev() {
                    acc = acc * s2 + 2.0 * k as f64 * c;
                }
                acc * s
            }
            Profile::Custom { da, .. } => da(s),
        }
    }

    /// Second derivative; finite differences of `𝒜′` for custom profiles.
    #[inline]
    pub fn eval_d2a(&self, s: f64) -> f64 {
        match &self.profile {
            Profile::Identity => 0.0,
            Profile::Example { gamma } => {
                if s == 0.0 {
                    return 0.0;
                }
                let g = *gamma;
                let r = s.abs();
                let a = r.powf(g);
                let d = 1.0 + a;
                g * (g - 1.0) * a / (r * r) / (d * d) - 2.0 * g * g * a * a / (r * r) / (d * d * d)
            }
            Profile::EvenPolynomial { coeffs } => {
                let s2 = s * s;
                let mut acc = 0.0;
                for (k, c) in coeffs.iter().enumerate().skip(1).rev() {
                    let k = k as f64;
                    acc = acc * s2 + 2.0 * k * (2.0 * k - 1.0) * c;
                }
                acc
            }
            Profile::Custom { d2a: Some(f), .. } => f(s),
            Profile::Custom { da, .. } => {
                let h = 1e-6 * (1.0 + s.abs());
                (da(s + h) - da(s - h)) / (2.0 * h)
            }
        }
    }
}

/// `C0 = max(2, sup |𝒜′|)` for the example profile. The supremum sits at
/// `|s|^γ = (γ-1)/(γ+1)` and is infinite for `γ < 1`.
fn example_c0(gamma: f64) -> f64 {
    if gamma < 1.0 {
        return f64::INFINITY;
    }
    let x = (gamma - 1.0) / (gamma + 1.0);
    let sup = if x == 0.0 {
        gamma
    } else {
        gamma * x.powf((gamma - 1.0) / gamma) / ((1.0 + x) * (1.0 + x))
    };
    sup.max(2.0)
}

pub fn eval_a(family: &CoefficientFamily, s: f64) -> f64 {
    family.eval_a(s)
}

pub fn eval_da(family: &CoefficientFamily, s: f64) -> f64 {
    family.eval_da(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// `|𝒜| ≤ C0`, `|𝒜′| ≤ C0`
    Bounded,
    /// `𝒜 ≥ ν`
    Elliptic,
    /// `0 ≤ s𝒜′ ≤ γ𝒜`
    Growth,
    /// `γ ∈ (0, p - 2)`
    GrowthRange,
    /// `s ↦ s^{3-p}𝒜′(s)` strictly decreasing on `s > 0`
    Monotone,
    /// `𝒜(-s) = 𝒜(s)`, checked only when declared
    Symmetric,
}

impl Condition {
    pub fn label(&self) -> &'static str {
        match self {
            Condition::Bounded => "a1",
            Condition::Elliptic => "a2",
            Condition::Growth => "a3",
            Condition::GrowthRange => "a3_range",
            Condition::Monotone => "a4",
            Condition::Symmetric => "even",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    Pass,
    /// Satisfied only in the degenerate sense (`𝒜′ ≡ 0` on the samples).
    PassDegenerate,
    Fail { witness_s: f64 },
}

impl Verdict {
    pub fn passed(&self) -> bool {
        !matches!(self, Verdict::Fail { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertReport {
    pub rows: Vec<(Condition, Verdict)>,
    pub s_min: f64,
    pub s_max: f64,
    pub samples: usize,
    /// Largest observed `s𝒜′(s)/𝒜(s)`.
    pub max_growth_ratio: f64,
}

impl CertReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|(_, v)| v.passed())
    }

    pub fn verdict(&self, c: Condition) -> Option<Verdict> {
        self.rows.iter().find(|(k, _)| *k == c).map(|(_, v)| *v)
    }

    /// CSV body with header `condition,verdict,witness_s`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("condition,verdict,witness_s\n");
        for (c, v) in &self.rows {
            let (verdict, witness) = match v {
                Verdict::Pass => ("pass".to_string(), String::new()),
                Verdict::PassDegenerate => ("pass(degenerate)".to_string(), String::new()),
                Verdict::Fail { witness_s } => ("fail".to_string(), format!("{witness_s:.16e}")),
            };
            out.push_str(&format!("{},{},{}\n", c.label(), verdict, witness));
        }
        out
    }
}

/// Certifies the hypotheses on `n_samples` equispaced points of `[s_min, s_max]`.
pub fn certify(
    family: &CoefficientFamily,
    p: f64,
    range: (f64, f64),
    n_samples: usize,
) -> Result<CertReport> {
    let (s_min, s_max) = range;
    if !(s_min.is_finite() && s_max.is_finite() && s_min < s_max) {
        return Err(Error::InvalidRange(format!("need s_min < s_max, got [{s_min}, {s_max}]")));
    }
    if n_samples < 100 {
        return Err(Error::InvalidRange(format!("need at least 100 samples, got {n_samples}")));
    }
    let step = (s_max - s_min) / (n_samples - 1) as f64;
    let samples: Vec<f64> = (0..n_samples)
        .map(|k| if k + 1 == n_samples { s_max } else { s_min + step * k as f64 })
        .collect();
    let mut report = certify_samples(family, p, &samples)?;
    report.s_min = s_min;
    report.s_max = s_max;
    Ok(report)
}

/// Certifies on an explicit sample set (sorted internally).
pub fn certify_samples(family: &CoefficientFamily, p: f64, samples: &[f64]) -> Result<CertReport> {
    if samples.is_empty() {
        return Err(Error::InvalidRange("empty sample set".into()));
    }
    let mut s_sorted: Vec<f64> = samples.to_vec();
    if let Some(&bad) = s_sorted.iter().find(|s| !s.is_finite()) {
        return Err(Error::NonFiniteSample(bad));
    }
    s_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut values = Vec::with_capacity(s_sorted.len());
    for &s in &s_sorted {
        let a = family.eval_a(s);
        let da = family.eval_da(s);
        if !a.is_finite() || !da.is_finite() {
            return Err(Error::NonFiniteSample(s));
        }
        values.push((s, a, da));
    }

    let first_fail = |pred: &dyn Fn(f64, f64, f64) -> bool| -> Verdict {
        values
            .iter()
            .find(|(s, a, da)| !pred(*s, *a, *da))
            .map_or(Verdict::Pass, |(s, _, _)| Verdict::Fail { witness_s: *s })
    };

    let c0 = family.c0;
    let nu = family.nu;
    let gamma = family.gamma;
    let bounded = if c0.is_finite() {
        first_fail(&|_, a, da| a.abs() <= c0 && da.abs() <= c0)
    } else {
        // no finite bound declared: witness where |𝒜′| peaks on the samples
        let (s, _, _) = values
            .iter()
            .copied()
            .fold((s_sorted[0], 0.0, f64::NEG_INFINITY), |best, (s, a, da)| {
                if da.abs() > best.2 { (s, a, da.abs()) } else { best }
            });
        Verdict::Fail { witness_s: s }
    };
    let elliptic = first_fail(&|_, a, _| a >= nu);
    let growth = first_fail(&|s, a, da| {
        let r = s * da;
        r >= 0.0 && r <= gamma * a
    });
    let range = if gamma > 0.0 && gamma < p - 2.0 {
        Verdict::Pass
    } else {
        Verdict::Fail { witness_s: s_sorted[0] }
    };

    let max_growth_ratio = values
        .iter()
        .map(|(s, a, da)| s * da / a)
        .fold(f64::NEG_INFINITY, f64::max);

    let positive: Vec<(f64, f64)> = values
        .iter()
        .filter(|(s, _, _)| *s > 0.0)
        .map(|(s, _, da)| (*s, s.powf(3.0 - p) * da))
        .collect();
    let monotone = if positive.iter().all(|(_, f)| *f == 0.0) {
        Verdict::PassDegenerate
    } else {
        positive
            .windows(2)
            .find(|w| !(w[1].1 < w[0].1))
            .map_or(Verdict::Pass, |w| Verdict::Fail { witness_s: w[1].0 })
    };

    let mut rows = vec![
        (Condition::Bounded, bounded),
        (Condition::Elliptic, elliptic),
        (Condition::Growth, growth),
        (Condition::GrowthRange, range),
        (Condition::Monotone, monotone),
    ];
    if family.even {
        let sym = values
            .iter()
            .find(|(s, a, _)| {
                let m = family.eval_a(-s);
                (m - a).abs() > 1e-14 * a.abs().max(1.0)
            })
            .map_or(Verdict::Pass, |(s, _, _)| Verdict::Fail { witness_s: *s });
        rows.push((Condition::Symmetric, sym));
    }

    Ok(CertReport {
        rows,
        s_min: s_sorted[0],
        s_max: *s_sorted.last().unwrap(),
        samples: s_sorted.len(),
        max_growth_ratio,
    })
}
