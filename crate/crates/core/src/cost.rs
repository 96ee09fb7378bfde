//! Closed-form cost model. Everything is in log2.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::circuit::{CircuitStats, Family};
use crate::StabError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Direct,
    Feynman,
    Hybrid,
    RecursivePath,
    StabilizerRank,
    Spir,
    Spc,
}

pub const METHODS: [Method; 7] = [
    Method::Direct,
    Method::Feynman,
    Method::Hybrid,
    Method::RecursivePath,
    Method::StabilizerRank,
    Method::Spir,
    Method::Spc,
];

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Direct => "direct",
            Method::Feynman => "feynman",
            Method::Hybrid => "hybrid",
            Method::RecursivePath => "recursive_path",
            Method::StabilizerRank => "stabilizer_rank",
            Method::Spir => "spir",
            Method::Spc => "spc",
        }
    }
}

impl FromStr for Method {
    type Err = StabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        METHODS
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| StabError::Usage(format!("unknown cost method '{s}'")))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Inputs to [`predicted_cost`]. `k` is log2 of the per-layer projector rank.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CostQuery {
    pub n: usize,
    pub m: Option<usize>,
    pub d: Option<usize>,
    pub d_nc: Option<usize>,
    pub k: Option<f64>,
    pub x: Option<usize>,
    pub t: Option<usize>,
}

impl CostQuery {
    /// Query from circuit statistics; `k` is the largest layer's log2 κ.
    pub fn from_stats(s: &CircuitStats) -> Self {
        CostQuery {
            n: s.n,
            m: Some(s.m),
            d: Some(s.d),
            d_nc: Some(s.d_nc),
            k: Some(s.kappa_log2.iter().copied().fold(0.0, f64::max)),
            x: None,
            t: Some(s.t),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictedCost {
    pub log2_time: f64,
    pub log2_space: f64,
    /// The polynomial part of `log2_time` (the n³ factor where present).
    pub log2_poly: f64,
}

impl PredictedCost {
    pub fn exponent(&self) -> f64 {
        self.log2_time - self.log2_poly
    }
}

fn need<T: Copy>(v: Option<T>, method: Method, field: &str) -> Result<T, StabError> {
    v.ok_or_else(|| StabError::Usage(format!("cost method {method} needs {field}")))
}

pub fn predicted_cost(method: Method, q: &CostQuery) -> Result<PredictedCost, StabError> {
    let n = q.n as f64;
    let n3 = 3.0 * n.max(1.0).log2();
    let (time, space, poly) = match method {
        Method::Direct => {
            let m = need(q.m, method, "m")? as f64;
            (m.max(1.0).log2() + n, n, 0.0)
        }
        Method::Feynman => {
            let m = need(q.m, method, "m")? as f64;
            (2.0 * m, (m + n).max(1.0).log2(), 0.0)
        }
        Method::Hybrid => {
            let x = need(q.x, method, "x")? as f64;
            (n / 2.0 + x, n / 2.0 + 1.0, 0.0)
        }
        Method::RecursivePath => {
            // coefficient log2(2d), as in the supremacy comparison
            let d = need(q.d, method, "d")? as f64;
            (n * (2.0 * d).log2(), (n * d.max(2.0).log2()).log2(), 0.0)
        }
        Method::StabilizerRank => {
            let t = need(q.t, method, "t")? as f64;
            (n3 + 0.47 * t, 0.47 * t, n3)
        }
        Method::Spir => {
            let k = need(q.k, method, "k")?;
            let d = need(q.d_nc, method, "d_nc")? as f64;
            (n3 + k * (2.0 * d.max(1.0)).log2(), (n * d.max(2.0).log2()).log2(), n3)
        }
        Method::Spc => {
            let k = need(q.k, method, "k")?;
            let d = need(q.d_nc, method, "d_nc")? as f64;
            (d.max(1.0).log2() + 2.0 * k + n3, k, n3)
        }
    };
    Ok(PredictedCost {
        log2_time: time,
        log2_space: space,
        log2_poly: poly,
    })
}

fn log2_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2
}

/// log2 of the SPIR inner-product count for layers with the given log2 κ:
/// I(0) = 1, I(1) = κ, otherwise κ_m (I(left) + I(right)) split at m = ⌈d/2⌉.
pub fn spir_inner_products_log2(kappa_log2: &[f64]) -> f64 {
    match kappa_log2.len() {
        0 => 0.0,
        1 => kappa_log2[0],
        d => {
            let m = d.div_ceil(2);
            let left = spir_inner_products_log2(&kappa_log2[..m - 1]);
            let right = spir_inner_products_log2(&kappa_log2[m..]);
            kappa_log2[m - 1] + log2_add(left, right)
        }
    }
}

/// log2 of Σ_j κ_{j-1} κ_j (κ_0 = 1) plus κ_d for the final contraction.
pub fn spc_inner_products_log2(kappa_log2: &[f64]) -> f64 {
    let mut acc = f64::NEG_INFINITY;
    let mut prev = 0.0;
    for &k in kappa_log2 {
        acc = log2_add(acc, prev + k);
        prev = k;
    }
    if kappa_log2.is_empty() {
        0.0
    } else {
        log2_add(acc, prev)
    }
}

/// Smallest depth considered by [`crossover_dnc`]; at d_nc = 1 both
/// inequalities degenerate (log2 1 = 0).
pub const MIN_CROSSOVER_DNC: u64 = 2;
pub const MAX_CROSSOVER_DNC: u64 = 1_000_000;

/// Density of non-Clifford gates above which SPIR scales better than the
/// stabilizer-rank method, for the cz or cs ensemble.
pub fn threshold_p(family: Family, d_nc: u64) -> Result<f64, StabError> {
    let d = d_nc as f64;
    match family {
        Family::Cz => Ok(d.log2() / (0.47 * d)),
        Family::Cs => Ok(2.0 * (d.log2() - d / 4.0) / (0.47 * d)),
        Family::SupremacyLike => Err(StabError::Usage("thresholds exist for cz and cs only".into())),
    }
}

/// Smallest d_nc ≥ 2 with `threshold_p(family, d_nc) ≤ p`, or `None` below 10⁶.
pub fn crossover_dnc(family: Family, p: f64) -> Result<Option<u64>, StabError> {
    for d in MIN_CROSSOVER_DNC..=MAX_CROSSOVER_DNC {
        if threshold_p(family, d)? <= p {
            return Ok(Some(d));
        }
    }
    Ok(None)
}

/// Gate classes of one supremacy cycle with their projector ranks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SupremacyCensus {
    /// fSim·√W·C, rank 12
    pub fsim_w: u64,
    /// fSim·C, rank 4
    pub fsim: u64,
    /// fSim·√W√W, rank 10
    pub fsim_ww: u64,
    /// √W⊗√W without fSim, rank 6
    pub w_pair: u64,
    /// lone √W, rank 3
    pub w_single: u64,
}

impl SupremacyCensus {
    /// The average cycle: 12^10 · 4^10 · 10^2 · 18 with 18 = 6 · 3.
    pub const AVERAGE: SupremacyCensus = SupremacyCensus {
        fsim_w: 10,
        fsim: 10,
        fsim_ww: 2,
        w_pair: 1,
        w_single: 1,
    };
}

pub fn supremacy_cycle_rank(c: &SupremacyCensus) -> f64 {
    [(c.fsim_w, 12.0), (c.fsim, 4.0), (c.fsim_ww, 10.0), (c.w_pair, 6.0), (c.w_single, 3.0_f64)]
        .iter()
        .map(|&(k, r)| k as f64 * r.log2())
        .sum()
}

/// Format with 6 significant digits, fixed notation.
pub fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let decimals = (5 - x.abs().log10().floor() as i32).max(0) as usize;
    format!("{:.*}", decimals, x)
}

/// Threshold table over `d_nc` in `range`, header row first.
pub fn emit_threshold_csv<W: Write>(range: std::ops::RangeInclusive<u64>, out: W) -> Result<usize, StabError> {
    if range.is_empty() {
        return Err(StabError::Usage("empty d_nc range".into()));
    }
    let io = |e: csv::Error| StabError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["d_nc", "p_threshold_cz", "p_threshold_cs"]).map_err(io)?;
    let mut rows = 0;
    for d in range {
        w.write_record([
            d.to_string(),
            sig6(threshold_p(Family::Cz, d)?),
            sig6(threshold_p(Family::Cs, d)?),
        ])
        .map_err(io)?;
        rows += 1;
    }
    w.flush().map_err(|e| StabError::Io(e.to_string()))?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert_eq!(threshold_p(Family::Cs, 16).unwrap(), 0.0);
        assert!((threshold_p(Family::Cz, 20).unwrap() - 0.459_8).abs() < 1e-4);
        assert!((threshold_p(Family::Cz, 2).unwrap() - 1.0 / 0.94).abs() < 1e-12);
        for d in 2..200 {
            assert!(threshold_p(Family::Cz, d).unwrap() > 0.0);
            assert_eq!(threshold_p(Family::Cs, d).unwrap() < 0.0, d > 16);
        }
        assert!(threshold_p(Family::Cz, 1 << 40).unwrap() < 1e-9);
    }

    #[test]
    fn crossovers() {
        assert_eq!(crossover_dnc(Family::Cz, 1.0 / 3.0).unwrap(), Some(32));
        assert_eq!(crossover_dnc(Family::Cs, 1.0 / 3.0).unwrap(), Some(11));
        assert_eq!(crossover_dnc(Family::Cz, 1.1).unwrap(), Some(2));
        assert_eq!(crossover_dnc(Family::Cz, 0.0).unwrap(), None);
        let mut prev = u64::MAX;
        for i in 1..=100 {
            let d = crossover_dnc(Family::Cz, i as f64 / 100.0).unwrap().unwrap_or(u64::MAX);
            assert!(d <= prev);
            prev = d;
        }
    }

    #[test]
    fn supremacy_rank() {
        let r = supremacy_cycle_rank(&SupremacyCensus::AVERAGE);
        assert!((66.66..=66.68).contains(&r), "{r}");
        assert_eq!(supremacy_cycle_rank(&SupremacyCensus::default()), 0.0);
        let c = SupremacyCensus::AVERAGE;
        let twice = SupremacyCensus {
            fsim_w: 2 * c.fsim_w,
            fsim: 2 * c.fsim,
            fsim_ww: 2 * c.fsim_ww,
            w_pair: 2 * c.w_pair,
            w_single: 2 * c.w_single,
        };
        assert!((supremacy_cycle_rank(&twice) - 2.0 * r).abs() < 1e-12);
    }

    #[test]
    fn table_rows() {
        let q = CostQuery {
            n: 53,
            m: Some(1543),
            ..Default::default()
        };
        let c = predicted_cost(Method::Direct, &q).unwrap();
        assert!((c.log2_time - 63.59).abs() < 0.01);
        let q = CostQuery {
            n: 53,
            d_nc: Some(20),
            k: Some(1.25 * 53.0),
            ..Default::default()
        };
        let c = predicted_cost(Method::Spir, &q).unwrap();
        let want = 1.25 * 53.0 * 40f64.log2() + 3.0 * 53f64.log2();
        assert!((c.log2_time - want).abs() < 1e-9);
        assert!((c.exponent() / 53.0 - 6.65).abs() < 0.01);
        assert!(predicted_cost(Method::Hybrid, &q).is_err());
        // spir with k = n and d_nc = d is the recursive path row
        for (n, d) in [(10, 4), (53, 40)] {
            let s = predicted_cost(
                Method::Spir,
                &CostQuery {
                    n,
                    d_nc: Some(d),
                    k: Some(n as f64),
                    ..Default::default()
                },
            )
            .unwrap();
            let r = predicted_cost(
                Method::RecursivePath,
                &CostQuery {
                    n,
                    d: Some(d),
                    ..Default::default()
                },
            )
            .unwrap();
            assert!((s.exponent() - r.exponent()).abs() < 1e-9);
        }
    }

    #[test]
    fn inner_product_recursion() {
        let k = 2f64.log2();
        assert_eq!(spir_inner_products_log2(&[]), 0.0);
        assert_eq!(spir_inner_products_log2(&[k]), 1.0);
        // I(2) = κ(1 + κ) = 6
        assert!((spir_inner_products_log2(&[k, k]) - 6f64.log2()).abs() < 1e-12);
        // κ=1 κ=4 κ=4: 1 + 4 + 16 + 4
        let v = spc_inner_products_log2(&[0.0, 2.0, 2.0]);
        assert!((v - 25f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn csv_rows() {
        let mut buf = Vec::new();
        assert_eq!(emit_threshold_csv(2..=40, &mut buf).unwrap(), 39);
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "d_nc,p_threshold_cz,p_threshold_cs");
        assert_eq!(lines.len(), 40);
        assert!(lines.contains(&"16,0.531915,0"));
        assert_eq!(sig6(1.0 / 0.94), "1.06383");
        assert_eq!(sig6(-0.0123456789), "-0.0123457");
    }
}
