use super::closed_loop::SimResult;
use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexKind {
    Iae,
    Itae,
    Ise,
    Itse,
    Istes,
    Istse,
    SumAll,
}

impl IndexKind {
    /// The six elementary indices, in weight order.
    pub const BASIC: [IndexKind; 6] = [
        IndexKind::Iae,
        IndexKind::Itae,
        IndexKind::Ise,
        IndexKind::Itse,
        IndexKind::Istes,
        IndexKind::Istse,
    ];

    pub const ALL: [IndexKind; 7] = [
        IndexKind::Iae,
        IndexKind::Itae,
        IndexKind::Ise,
        IndexKind::Itse,
        IndexKind::Istes,
        IndexKind::Istse,
        IndexKind::SumAll,
    ];

    pub fn label(self) -> &'static str {
        match self {
            IndexKind::Iae => "IAE",
            IndexKind::Itae => "ITAE",
            IndexKind::Ise => "ISE",
            IndexKind::Itse => "ITSE",
            IndexKind::Istes => "ISTES",
            IndexKind::Istse => "ISTSE",
            IndexKind::SumAll => "SUM_ALL",
        }
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for IndexKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "iae" => Ok(IndexKind::Iae),
            "itae" => Ok(IndexKind::Itae),
            "ise" => Ok(IndexKind::Ise),
            "itse" => Ok(IndexKind::Itse),
            "istes" => Ok(IndexKind::Istes),
            "istse" => Ok(IndexKind::Istse),
            "sum" | "sum_all" => Ok(IndexKind::SumAll),
            other => Err(Error::Parse(format!("unknown performance index '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexWeights(pub [f64; 6]);

impl Default for IndexWeights {
    fn default() -> Self {
        Self([1.0; 6])
    }
}

impl IndexWeights {
    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(invalid("index weights must be finite and non-negative"));
        }
        if self.0.iter().all(|w| *w == 0.0) {
            return Err(invalid("at least one index weight must be positive"));
        }
        Ok(())
    }
}

/// `[IAE, ITAE, ISE, ITSE, ISTES, ISTSE]` by the trapezoid rule on the
/// uniform grid of `r`; `+inf` for blown-up or non-finite runs.
pub fn all_indices(r: &SimResult) -> [f64; 6] {
    let n = r.e.len();
    if r.overflow || n == 0 || r.e.iter().any(|v| !v.is_finite()) {
        return [f64::INFINITY; 6];
    }
    let dt = r.dt();
    let mut acc = [0.0; 6];
    for (i, (&t, &e)) in r.t.iter().zip(&r.e).enumerate() {
        let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
        let (a, s) = (e.abs(), e * e);
        let t2 = t * t;
        acc[0] += w * a;
        acc[1] += w * t * a;
        acc[2] += w * s;
        acc[3] += w * t * s;
        acc[4] += w * t2 * t2 * s;
        acc[5] += w * t2 * s;
    }
    acc.map(|v| v * dt)
}

pub fn performance_index(r: &SimResult, kind: IndexKind, weights: &IndexWeights) -> f64 {
    let v = all_indices(r);
    match kind {
        IndexKind::SumAll => weights.0.iter().zip(v).map(|(w, x)| if *w == 0.0 { 0.0 } else { w * x }).sum(),
        k => v[IndexKind::BASIC.iter().position(|b| *b == k).expect("basic index")],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn run(e: impl Fn(f64) -> f64, dt: f64, t_end: f64) -> SimResult {
        let n = (t_end / dt).round() as usize + 1;
        let t: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
        let e: Vec<f64> = t.iter().map(|&x| e(x)).collect();
        SimResult { y: e.iter().map(|v| 1.0 - v).collect(), u: vec![0.0; n], e, t, overflow: false }
    }

    #[test]
    fn gamma_integrals_of_decaying_exponential() {
        let r = run(|t| (-t).exp(), 0.001, 60.0);
        let v = all_indices(&r);
        let exact = [1.0, 1.0, 0.5, 0.25, 0.75, 0.25];
        for (k, (a, b)) in v.iter().zip(exact).enumerate() {
            assert!((a - b).abs() < 1e-3, "{}: {a} vs {b}", IndexKind::BASIC[k]);
        }
        let w = IndexWeights::default();
        let sum = performance_index(&r, IndexKind::SumAll, &w);
        assert!((sum - 3.75).abs() < 5e-3);
    }

    #[test]
    fn zero_error_gives_zero() {
        let r = run(|_| 0.0, 0.01, 10.0);
        for k in IndexKind::ALL {
            assert_eq!(performance_index(&r, k, &IndexWeights::default()), 0.0);
        }
    }

    #[test]
    fn overflow_is_infinite() {
        let mut r = run(|t| t, 0.01, 1.0);
        r.overflow = true;
        assert!(performance_index(&r, IndexKind::Iae, &IndexWeights::default()).is_infinite());
    }

    #[test]
    fn weights_select_components() {
        let r = run(|t| (-2.0 * t).exp(), 0.001, 30.0);
        let mut w = [0.0; 6];
        w[3] = 1.0;
        let v = performance_index(&r, IndexKind::SumAll, &IndexWeights(w));
        assert_eq!(v, performance_index(&r, IndexKind::Itse, &IndexWeights::default()));
        assert!(IndexWeights([0.0; 6]).validate().is_err());
        assert!(IndexWeights([1.0, -1.0, 0.0, 0.0, 0.0, 0.0]).validate().is_err());
    }

    #[test]
    fn parse_names() {
        assert_eq!("ITAE".parse::<IndexKind>().unwrap(), IndexKind::Itae);
        assert_eq!("sum".parse::<IndexKind>().unwrap(), IndexKind::SumAll);
        assert!("foo".parse::<IndexKind>().is_err());
    }

    proptest! {
        #[test]
        fn monotone_under_pointwise_increase(a in prop::collection::vec(-2.0f64..2.0, 20), bump in prop::collection::vec(0.0f64..1.0, 20)) {
            let t: Vec<f64> = (0..20).map(|k| k as f64 * 0.1).collect();
            let big: Vec<f64> = a.iter().zip(&bump).map(|(x, b)| x.signum() * (x.abs() + b)).collect();
            let mk = |e: Vec<f64>| SimResult { t: t.clone(), y: vec![0.0; 20], u: vec![0.0; 20], e, overflow: false };
            let lo = all_indices(&mk(a.clone()));
            let hi = all_indices(&mk(big));
            for (l, h) in lo.iter().zip(hi) {
                prop_assert!(*l >= 0.0 && *l <= h + 1e-12);
            }
        }
    }
}
