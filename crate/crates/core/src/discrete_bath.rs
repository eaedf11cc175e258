//! A system oscillator coupled to finitely many bath oscillators.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::damping::PhysicalConstants;
use crate::error::{ensure_non_negative, ensure_positive, Error, Result};
use crate::thermo::{free_osc_energy, free_osc_free_energy};

/// Relative separation below which two normal modes count as degenerate.
pub const MODE_SEPARATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathOscillator {
    pub m: f64,
    pub omega: f64,
    pub c: f64,
}

/// System mass M and frequency ω₀ plus bath oscillators sorted by ω_j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBath")]
pub struct DiscreteBath {
    #[serde(rename = "M")]
    mass: f64,
    omega_0: f64,
    oscillators: Vec<BathOscillator>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBath {
    #[serde(rename = "M")]
    mass: f64,
    omega_0: f64,
    oscillators: Vec<BathOscillator>,
}

impl TryFrom<RawBath> for DiscreteBath {
    type Error = Error;
    fn try_from(r: RawBath) -> Result<Self> {
        Self::new(r.mass, r.omega_0, r.oscillators)
    }
}

impl DiscreteBath {
    pub fn new(mass: f64, omega_0: f64, mut oscillators: Vec<BathOscillator>) -> Result<Self> {
        ensure_positive("M", mass)?;
        ensure_positive("omega_0", omega_0)?;
        for (j, o) in oscillators.iter().enumerate() {
            ensure_positive(&format!("oscillators[{j}].m"), o.m)?;
            ensure_positive(&format!("oscillators[{j}].omega"), o.omega)?;
            if !o.c.is_finite() {
                return Err(Error::Domain(format!("oscillators[{j}].c must be finite")));
            }
        }
        oscillators.sort_by(|a, b| a.omega.total_cmp(&b.omega));
        Ok(Self {
            mass,
            omega_0,
            oscillators,
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }
    pub fn omega_0(&self) -> f64 {
        self.omega_0
    }
    pub fn oscillators(&self) -> &[BathOscillator] {
        &self.oscillators
    }
    pub fn len(&self) -> usize {
        self.oscillators.len()
    }
    pub fn is_empty(&self) -> bool {
        self.oscillators.is_empty()
    }

    /// Counter-term frequency shift Σ c_j²/(M m_j ω_j²).
    pub fn counter_term(&self) -> f64 {
        self.oscillators
            .iter()
            .map(|o| o.c * o.c / (self.mass * o.m * o.omega * o.omega))
            .sum()
    }

    /// γ̃(ω) = −(i/M) Σ_j (c_j²/m_jω_j²) ω/(ω_j² − ω²).
    pub fn gamma_tilde(&self, omega: Complex64) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for o in &self.oscillators {
            s += o.c * o.c / (o.m * o.omega * o.omega) * omega / (o.omega * o.omega - omega * omega);
        }
        -Complex64::i() * s / self.mass
    }

    /// Relative residual of ω₀² − ω² − iωγ̃(ω) = 0, scaled by the size of
    /// its terms.
    pub fn secular_residual(&self, omega: f64) -> f64 {
        let w = Complex64::new(omega, 0.0);
        let coupling = -Complex64::i() * w * self.gamma_tilde(w);
        let r = self.omega_0 * self.omega_0 - omega * omega + coupling;
        r.norm() / (self.omega_0 * self.omega_0 + omega * omega + coupling.norm())
    }

    /// Mass-weighted stiffness matrix of the full quadratic Hamiltonian.
    pub fn dynamical_matrix(&self) -> DMatrix<f64> {
        let n = self.len() + 1;
        let mut d = DMatrix::zeros(n, n);
        d[(0, 0)] = self.omega_0 * self.omega_0 + self.counter_term();
        for (j, o) in self.oscillators.iter().enumerate() {
            let off = -o.c / (self.mass * o.m).sqrt();
            d[(0, j + 1)] = off;
            d[(j + 1, 0)] = off;
            d[(j + 1, j + 1)] = o.omega * o.omega;
        }
        d
    }
}

/// Normal-mode frequencies ω̄_k (ascending) and the system component of
/// each normalized mode vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalModes {
    pub omega_bar: Vec<f64>,
    #[serde(skip)]
    system_weight: Vec<f64>,
}

impl NormalModes {
    /// U_{0k}², the weight of the system coordinate in mode k.
    pub fn system_weight(&self) -> &[f64] {
        &self.system_weight
    }

    /// ω̄₀ ≤ ω₁ ≤ ω̄₁ ≤ … ≤ ω_N ≤ ω̄_N and ω̄₀ ≤ ω₀ ≤ ω̄_N.
    pub fn interlaces(&self, bath: &DiscreteBath) -> bool {
        let slack = |x: f64| x * (1.0 + 1e-12);
        let wb = &self.omega_bar;
        let ok_bath = bath
            .oscillators()
            .iter()
            .enumerate()
            .all(|(j, o)| wb[j] <= slack(o.omega) && o.omega <= slack(wb[j + 1]));
        let first = wb[0];
        let last = *wb.last().expect("at least one mode");
        ok_bath && first <= slack(bath.omega_0()) && bath.omega_0() <= slack(last)
    }

    /// First consecutive pair closer than [`MODE_SEPARATION_TOL`].
    pub fn degeneracy(&self) -> Option<(usize, f64)> {
        self.omega_bar.windows(2).enumerate().find_map(|(k, w)| {
            let sep = (w[1] - w[0]) / w[1];
            (sep < MODE_SEPARATION_TOL).then_some((k, sep))
        })
    }
}

pub fn normal_modes(bath: &DiscreteBath) -> Result<NormalModes> {
    let eig = SymmetricEigen::new(bath.dynamical_matrix());
    let mut pairs: Vec<(f64, f64)> = eig
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(k, &l)| (l, eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let min = pairs[0].0;
    if min <= 0.0 {
        return Err(Error::NotPositiveDefinite { min_eigenvalue: min });
    }
    Ok(NormalModes {
        omega_bar: pairs.iter().map(|p| p.0.sqrt()).collect(),
        system_weight: pairs.iter().map(|p| p.1).collect(),
    })
}

/// E_s = ½ Σ_k e(ω̄_k){1 + (ω₀/ω̄_k)²} Π_j(ω̄_k² − ω_j²)/Π_{k′≠k}(ω̄_k² − ω̄_k′²).
pub fn energy_exact(bath: &DiscreteBath, temperature: f64, consts: &PhysicalConstants) -> Result<f64> {
    ensure_non_negative("T", temperature)?;
    let modes = normal_modes(bath)?;
    if let Some((k, separation)) = modes.degeneracy() {
        return Err(Error::DegenerateModes {
            k,
            k_next: k + 1,
            separation,
        });
    }
    let w02 = bath.omega_0() * bath.omega_0();
    let wb = &modes.omega_bar;
    let mut total = 0.0;
    for (k, &w) in wb.iter().enumerate() {
        let w2 = w * w;
        let mut residue = 1.0;
        for (j, o) in bath.oscillators().iter().enumerate() {
            // interleave factors to keep the running product of order one
            residue *= (w2 - o.omega * o.omega) / (w2 - wb[if j < k { j } else { j + 1 }].powi(2));
        }
        total += 0.5 * free_osc_energy(w, temperature, consts)? * (1.0 + w02 / w2) * residue;
    }
    Ok(total)
}

/// ⟨Ĥ_s⟩ from the per-mode variances in normal coordinates.
pub fn energy_oracle(bath: &DiscreteBath, temperature: f64, consts: &PhysicalConstants) -> Result<f64> {
    ensure_non_negative("T", temperature)?;
    let modes = normal_modes(bath)?;
    let w02 = bath.omega_0() * bath.omega_0();
    let mut p2 = 0.0; // ⟨p̂²⟩/M
    let mut q2 = 0.0; // M⟨q̂²⟩
    for (&w, &u2) in modes.omega_bar.iter().zip(modes.system_weight()) {
        let e = free_osc_energy(w, temperature, consts)?;
        p2 += u2 * e;
        q2 += u2 * e / (w * w);
    }
    Ok(0.5 * p2 + 0.5 * w02 * q2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyEvaluation {
    pub value: f64,
    /// Set when degenerate normal modes forced the diagonalization route.
    pub oracle_fallback: bool,
}

/// [`energy_exact`], falling back to [`energy_oracle`] on degenerate modes.
pub fn energy(bath: &DiscreteBath, temperature: f64, consts: &PhysicalConstants) -> Result<EnergyEvaluation> {
    match energy_exact(bath, temperature, consts) {
        Ok(value) => Ok(EnergyEvaluation {
            value,
            oracle_fallback: false,
        }),
        Err(Error::DegenerateModes { .. }) => Ok(EnergyEvaluation {
            value: energy_oracle(bath, temperature, consts)?,
            oracle_fallback: true,
        }),
        Err(e) => Err(e),
    }
}

/// 𝓕_s = Σ_k f(ω̄_k) − Σ_j f(ω_j).
pub fn coupling_free_energy(bath: &DiscreteBath, temperature: f64, consts: &PhysicalConstants) -> Result<f64> {
    let modes = normal_modes(bath)?;
    difference(bath, &modes, |w| free_osc_free_energy(w, temperature, consts))
}

/// 𝓕_s = −(1/β) ln 𝒵_β with 𝒵_β = Π_j 2 sinh(βℏω_j/2) / Π_k 2 sinh(βℏω̄_k/2).
pub fn coupling_free_energy_partition(
    bath: &DiscreteBath,
    temperature: f64,
    consts: &PhysicalConstants,
) -> Result<f64> {
    ensure_non_negative("T", temperature)?;
    let modes = normal_modes(bath)?;
    if temperature == 0.0 {
        let s: f64 = modes.omega_bar.iter().sum::<f64>() - bath.oscillators().iter().map(|o| o.omega).sum::<f64>();
        return Ok(0.5 * consts.hbar * s);
    }
    let beta = consts.beta(temperature)?;
    let bh = consts.beta_hbar(temperature)?;
    let ln_2sinh = |w: f64| {
        let x = 0.5 * bh * w;
        if x < 20.0 {
            (2.0 * x.sinh()).ln()
        } else {
            x + (-(-2.0 * x).exp()).ln_1p()
        }
    };
    let ln_z: f64 = bath.oscillators().iter().map(|o| ln_2sinh(o.omega)).sum::<f64>()
        - modes.omega_bar.iter().map(|&w| ln_2sinh(w)).sum::<f64>();
    Ok(-ln_z / beta)
}

/// ℰ_s = Σ_k e(ω̄_k) − Σ_j e(ω_j).
pub fn coupling_energy(bath: &DiscreteBath, temperature: f64, consts: &PhysicalConstants) -> Result<f64> {
    let modes = normal_modes(bath)?;
    difference(bath, &modes, |w| free_osc_energy(w, temperature, consts))
}

fn difference<F: Fn(f64) -> Result<f64>>(bath: &DiscreteBath, modes: &NormalModes, f: F) -> Result<f64> {
    let mut s = 0.0;
    for &w in &modes.omega_bar {
        s += f(w)?;
    }
    for o in bath.oscillators() {
        s -= f(o.omega)?;
    }
    Ok(s)
}

/// K = 𝓕_s − f(ω₀) − E_s + e(ω₀).
pub fn second_law_gap(bath: &DiscreteBath, temperature: f64, consts: &PhysicalConstants) -> Result<f64> {
    let w = bath.omega_0();
    let e = energy(bath, temperature, consts)?.value;
    Ok(
        coupling_free_energy(bath, temperature, consts)? - free_osc_free_energy(w, temperature, consts)? - e
            + free_osc_energy(w, temperature, consts)?,
    )
}

/// Per-temperature report entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BathPoint {
    #[serde(rename = "T")]
    pub temperature: f64,
    #[serde(rename = "E_s")]
    pub energy: f64,
    #[serde(rename = "E_s_oracle")]
    pub energy_oracle: f64,
    pub energy_delta: f64,
    pub oracle_fallback: bool,
    #[serde(rename = "F_cal")]
    pub coupling_free_energy: f64,
    #[serde(rename = "E_cal")]
    pub coupling_energy: f64,
    #[serde(rename = "K")]
    pub gap: f64,
}

pub fn evaluate(bath: &DiscreteBath, temperature: f64, consts: &PhysicalConstants) -> Result<BathPoint> {
    let e = energy(bath, temperature, consts)?;
    let oracle = energy_oracle(bath, temperature, consts)?;
    let w = bath.omega_0();
    let fc = coupling_free_energy(bath, temperature, consts)?;
    Ok(BathPoint {
        temperature,
        energy: e.value,
        energy_oracle: oracle,
        energy_delta: e.value - oracle,
        oracle_fallback: e.oracle_fallback,
        coupling_free_energy: fc,
        coupling_energy: coupling_energy(bath, temperature, consts)?,
        gap: fc - free_osc_free_energy(w, temperature, consts)? - e.value + free_osc_energy(w, temperature, consts)?,
    })
}

/// Random bath: ω_j log-uniform in [0.1ω₀, 10ω₀], m_j in [0.5, 2], and
/// couplings sharing a counter-term budget Σ c_j²/(2m_jω_j²) ≤ Mω₀².
pub fn random_bath<R: Rng + ?Sized>(rng: &mut R, n: usize, mass: f64, omega_0: f64) -> Result<DiscreteBath> {
    let budget = rng.gen_range(0.05..0.9) * mass * omega_0 * omega_0;
    let shares: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = shares.iter().sum();
    let oscillators = shares
        .iter()
        .map(|s| {
            let omega = omega_0 * 10f64.powf(rng.gen_range(-1.0..1.0));
            let m = rng.gen_range(0.5..2.0);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let c = sign * (2.0 * m * omega * omega * budget * s / total).sqrt();
            BathOscillator { m, omega, c }
        })
        .collect();
    DiscreteBath::new(mass, omega_0, oscillators)
}

/// [`random_bath`] from a ChaCha stream seeded with `seed`.
pub fn seeded_random_bath(seed: u64, n: usize, mass: f64, omega_0: f64) -> Result<DiscreteBath> {
    random_bath(&mut ChaCha8Rng::seed_from_u64(seed), n, mass, omega_0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    fn osc(m: f64, omega: f64, c: f64) -> BathOscillator {
        BathOscillator { m, omega, c }
    }

    #[test]
    fn decoupled_modes() {
        let b = DiscreteBath::new(1.0, 1.3, vec![osc(1.0, 2.0, 0.0), osc(2.0, 0.4, 0.0)]).unwrap();
        let m = normal_modes(&b).unwrap();
        let expect = [0.4, 1.3, 2.0];
        for (a, e) in m.omega_bar.iter().zip(expect) {
            assert!((a - e).abs() < 1e-14);
        }
        for t in [0.0, 0.5, 4.0] {
            let e = free_osc_energy(1.3, t, &unit()).unwrap();
            assert!((energy_exact(&b, t, &unit()).unwrap() - e).abs() < 1e-14);
            assert!((energy_oracle(&b, t, &unit()).unwrap() - e).abs() < 1e-14);
            let f = free_osc_free_energy(1.3, t, &unit()).unwrap();
            assert!((coupling_free_energy(&b, t, &unit()).unwrap() - f).abs() < 1e-13);
            assert!((coupling_energy(&b, t, &unit()).unwrap() - e).abs() < 1e-13);
            assert!(second_law_gap(&b, t, &unit()).unwrap().abs() < 1e-13);
        }
    }

    #[test]
    fn two_by_two_eigenproblem() {
        let b = DiscreteBath::new(1.0, 1.0, vec![osc(1.0, 1.0, 0.5)]).unwrap();
        // [[1.25, −0.5], [−0.5, 1]]
        let tr: f64 = 2.25;
        let det = 1.25 - 0.25;
        let disc = (tr * tr / 4.0 - det).sqrt();
        let m = normal_modes(&b).unwrap();
        assert!((m.omega_bar[0] - (tr / 2.0 - disc).sqrt()).abs() < 1e-15);
        assert!((m.omega_bar[1] - (tr / 2.0 + disc).sqrt()).abs() < 1e-15);
        assert!(m.interlaces(&b));
    }

    #[test]
    fn symmetric_pair_by_hand() {
        // M = m = ω₀ = ω₁ = 1: stiffness [[1 + c², −c], [−c, 1]]
        let c = 0.6f64;
        let b = DiscreteBath::new(1.0, 1.0, vec![osc(1.0, 1.0, c)]).unwrap();
        let d = c * c;
        let tr = 2.0 + d;
        let disc = (d * d / 4.0 + c * c).sqrt();
        let l = [tr / 2.0 - disc, tr / 2.0 + disc];
        // eigenvector (u₀, u₁) with u₁ = c·u₀/(1 − λ)
        let u2 = l.map(|x| (1.0 - x).powi(2) / ((1.0 - x).powi(2) + c * c));
        let t = 0.7;
        let hand: f64 = (0..2)
            .map(|k| {
                let w = l[k].sqrt();
                0.5 * u2[k] * free_osc_energy(w, t, &unit()).unwrap() * (1.0 + 1.0 / l[k])
            })
            .sum();
        assert!((energy_oracle(&b, t, &unit()).unwrap() - hand).abs() < 1e-14);
        assert!((energy_exact(&b, t, &unit()).unwrap() - hand).abs() < 1e-13);
    }

    #[test]
    fn random_baths_agree_and_interlace() {
        for seed in 0..50u64 {
            let n = 1 + (seed % 6) as usize;
            let b = seeded_random_bath(seed, n, 1.0, 1.0).unwrap();
            let m = normal_modes(&b).unwrap();
            assert!(m.interlaces(&b), "seed {seed}");
            for &w in &m.omega_bar {
                assert!(b.secular_residual(w) < 1e-8, "seed {seed}");
            }
            for t in [0.0, 0.1, 1.0, 10.0] {
                let a = energy_exact(&b, t, &unit()).unwrap();
                let o = energy_oracle(&b, t, &unit()).unwrap();
                assert!((a - o).abs() < 1e-9 * o, "seed {seed} T {t}: {a} vs {o}");
                let k = second_law_gap(&b, t, &unit()).unwrap();
                assert!(k >= -1e-9, "seed {seed} T {t}: K = {k}");
                let fp = coupling_free_energy_partition(&b, t, &unit()).unwrap();
                let fc = coupling_free_energy(&b, t, &unit()).unwrap();
                assert!((fp - fc).abs() < 1e-12 * (1.0 + fc.abs()));
            }
        }
    }

    #[test]
    fn zero_temperature_relations() {
        let b = seeded_random_bath(7, 3, 1.0, 1.0).unwrap();
        let m = normal_modes(&b).unwrap();
        let half: f64 = 0.5 * (m.omega_bar.iter().sum::<f64>() - b.oscillators().iter().map(|o| o.omega).sum::<f64>());
        let f0 = coupling_free_energy(&b, 0.0, &unit()).unwrap();
        assert!((f0 - half).abs() < 1e-14);
        assert_eq!(f0, coupling_energy(&b, 0.0, &unit()).unwrap());
        assert!(f0 >= energy_exact(&b, 0.0, &unit()).unwrap());
    }

    #[test]
    fn high_temperature_gap_vanishes() {
        let b = seeded_random_bath(3, 4, 1.0, 1.0).unwrap();
        assert!(second_law_gap(&b, 100.0, &unit()).unwrap() < 1e-2);
    }

    #[test]
    fn degenerate_modes_fall_back() {
        // two decoupled identical bath oscillators give a repeated mode
        let b = DiscreteBath::new(
            1.0,
            1.0,
            vec![osc(1.0, 2.0, 0.0), osc(1.0, 2.0, 0.0), osc(1.0, 0.5, 0.3)],
        )
        .unwrap();
        assert!(matches!(
            energy_exact(&b, 1.0, &unit()),
            Err(Error::DegenerateModes { .. })
        ));
        let e = energy(&b, 1.0, &unit()).unwrap();
        assert!(e.oracle_fallback);
        assert_eq!(e.value, energy_oracle(&b, 1.0, &unit()).unwrap());
    }

    #[test]
    fn json_round_trip_sorts() {
        let j = r#"{"M": 1.0, "omega_0": 1.0, "oscillators": [{"m": 1, "omega": 3, "c": 0.1}, {"m": 1, "omega": 0.5, "c": 0.2}]}"#;
        let b: DiscreteBath = serde_json::from_str(j).unwrap();
        assert_eq!(b.oscillators()[0].omega, 0.5);
        let back: DiscreteBath = serde_json::from_str(&serde_json::to_string(&b).unwrap()).unwrap();
        assert_eq!(b, back);
        assert!(serde_json::from_str::<DiscreteBath>(r#"{"M": -1, "omega_0": 1, "oscillators": []}"#).is_err());
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        assert_eq!(
            seeded_random_bath(42, 5, 1.0, 1.0).unwrap(),
            seeded_random_bath(42, 5, 1.0, 1.0).unwrap()
        );
        let b = seeded_random_bath(42, 6, 2.0, 1.5).unwrap();
        let budget: f64 = b
            .oscillators()
            .iter()
            .map(|o| o.c * o.c / (2.0 * o.m * o.omega * o.omega))
            .sum();
        assert!(budget <= 2.0 * 1.5 * 1.5);
    }
}
