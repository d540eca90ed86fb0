//! Seeded instance generators.
//!
//! Random streams come from `ChaCha8Rng::seed_from_u64(seed)`. A uniform
//! draw is `(next_u64 >> 11)·2⁻⁵³ ∈ [0, 1)`; a standard normal is
//! `√(−2 ln(1 − u₁))·cos(2π u₂)` from two consecutive uniforms.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{FirstStageSet, Matrix, TwoStageInstance, UncertaintySet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    GaussianU1,
    GaussianU2,
    LotSizing,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::GaussianU1, Family::GaussianU2, Family::LotSizing];

    pub fn name(self) -> &'static str {
        match self {
            Family::GaussianU1 => "gaussian_u1",
            Family::GaussianU2 => "gaussian_u2",
            Family::LotSizing => "lot_sizing",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian_u1" | "u1" => Ok(Family::GaussianU1),
            "gaussian_u2" | "u2" => Ok(Family::GaussianU2),
            "lot_sizing" => Ok(Family::LotSizing),
            _ => Err(Error::InvalidSpec(format!("unknown family {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenSpec {
    pub family: Family,
    pub m: usize,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(family: Family, m: usize, seed: u64) -> Self {
        Self { family, m, seed }
    }

    pub fn id(&self) -> String {
        match self.family {
            Family::LotSizing => format!("{}-m{}", self.family, self.m),
            _ => format!("{}-m{}-s{}", self.family, self.m, self.seed),
        }
    }
}

pub fn generate(spec: &GenSpec) -> Result<(TwoStageInstance, UncertaintySet)> {
    match spec.family {
        Family::GaussianU1 | Family::GaussianU2 => gen_gaussian(spec),
        Family::LotSizing => gen_lot_sizing(spec.m),
    }
}

/// Portable uniform and normal draws over ChaCha8.
pub struct Stream(ChaCha8Rng);

impl Stream {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Independent stream `index` under the same seed.
    pub fn substream(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Self(rng)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }
}

/// `A = B = I + G` with `G_ij = |Y_ij|/√m`, unit costs, `X = R₊ᵐ`.
/// Set U₁: `Σ h_i ≤ k`, `k = c√m`, `c ~ U[1, 2]`. Set U₂: `w = |G|/‖G‖₂`.
pub fn gen_gaussian(spec: &GenSpec) -> Result<(TwoStageInstance, UncertaintySet)> {
    let m = spec.m;
    if m == 0 {
        return Err(Error::InvalidSpec("m must be positive".into()));
    }
    let mut rng = Stream::new(spec.seed);
    let sq = (m as f64).sqrt();
    let mut b = Matrix::identity(m);
    for i in 0..m {
        for j in 0..m {
            b[(i, j)] += rng.normal().abs() / sq;
        }
    }
    let u = match spec.family {
        Family::GaussianU1 => {
            let k = (1.0 + rng.uniform()) * sq;
            if k < 1.0 {
                return Err(Error::InvalidSpec(format!("budget k = {k} < 1")));
            }
            UncertaintySet::budget(vec![1.0 / k; m])?
        }
        Family::GaussianU2 => {
            let g: Vec<f64> = (0..m).map(|_| rng.normal()).collect();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let w = g.iter().map(|v| (v.abs() / norm).clamp(f64::MIN_POSITIVE, 1.0)).collect();
            UncertaintySet::budget(w)?
        }
        Family::LotSizing => return Err(Error::InvalidSpec("not a Gaussian family".into())),
    };
    let inst = TwoStageInstance::new(b.clone(), b, vec![1.0; m], vec![1.0; m], FirstStageSet::orthant(m))?;
    Ok((inst, u))
}

/// Two node groups `J₁ = {0..m/2}`, `J₂ = {m/2..m}`; inventory `x ∈ [0,1]^m`
/// costs 0 on `J₁` and 1 on `J₂`; free transport arcs `J₁ → J₂` (variable
/// `i·(m/2) + (j − m/2)` for arc `i → j`). Demand set `Σ h ≤ m/2`.
pub fn gen_lot_sizing(m: usize) -> Result<(TwoStageInstance, UncertaintySet)> {
    if m < 4 || m % 2 != 0 {
        return Err(Error::InvalidSpec(format!("lot sizing needs even m ≥ 4, got {m}")));
    }
    let half = m / 2;
    let mut b = Matrix::zeros(m, half * half);
    for i in 0..half {
        for jj in 0..half {
            let arc = i * half + jj;
            b[(i, arc)] = -1.0;
            b[(half + jj, arc)] = 1.0;
        }
    }
    let c = (0..m).map(|i| if i < half { 0.0 } else { 1.0 }).collect();
    let first = FirstStageSet { f: Matrix::zeros(0, m), g: Vec::new(), upper: Some(vec![1.0; m]) };
    let inst = TwoStageInstance::new(Matrix::identity(m), b, c, vec![0.0; half * half], first)?;
    let u = UncertaintySet::budget(vec![2.0 / m as f64; m])?;
    Ok((inst, u))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_is_reproducible() {
        let spec = GenSpec::new(Family::GaussianU1, 10, 42);
        assert_eq!(gen_gaussian(&spec).unwrap(), gen_gaussian(&spec).unwrap());
        let other = GenSpec::new(Family::GaussianU1, 10, 43);
        assert_ne!(gen_gaussian(&spec).unwrap().0, gen_gaussian(&other).unwrap().0);
    }

    #[test]
    fn gaussian_structure() {
        let (inst, u) = gen_gaussian(&GenSpec::new(Family::GaussianU1, 7, 3)).unwrap();
        assert!((0..7).all(|i| inst.b[(i, i)] >= 1.0));
        assert_eq!(inst.a, inst.b);
        assert!(inst.first_stage.is_cone());
        let UncertaintySet::Budget { w } = u else { panic!("budget expected") };
        let k = 1.0 / w[0];
        assert!(k >= 7f64.sqrt() && k <= 2.0 * 7f64.sqrt());
    }

    #[test]
    fn u2_weights_unit_norm() {
        for seed in 0..5 {
            let (_, u) = gen_gaussian(&GenSpec::new(Family::GaussianU2, 10, seed)).unwrap();
            let UncertaintySet::Budget { w } = u else { panic!("budget expected") };
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() <= 1e-12);
            assert!(w.iter().all(|&v| v > 0.0 && v <= 1.0));
        }
    }

    #[test]
    fn normal_stream_moments() {
        let mut s = Stream::new(1);
        let xs: Vec<f64> = (0..20000).map(|_| s.normal()).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!(mean.abs() < 0.03 && (var - 1.0).abs() < 0.05);
    }

    #[test]
    fn lot_sizing_shape() {
        let (inst, u) = gen_lot_sizing(6).unwrap();
        assert_eq!(inst.n_first(), 6);
        assert_eq!(inst.n_second(), 9);
        assert!(!inst.b_nonnegative());
        assert_eq!(u, UncertaintySet::budget(vec![1.0 / 3.0; 6]).unwrap());
        assert!(gen_lot_sizing(5).is_err());
        assert!(gen_lot_sizing(2).is_err());
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
    }
}
