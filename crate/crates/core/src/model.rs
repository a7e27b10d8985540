//! Level schemes: the three chain models (with and without spontaneous
//! decay) plus the interaction-picture transformation that justifies their
//! time-independent interaction Hamiltonians.
//!
//! All couplings are resonant and real; energies and rates are measured in
//! units of the leakage coupling xi, times in 1/xi.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::operator::{Operator, STRUCTURAL_TOL};

/// Largest allowed ratio of outside-space rates to xi before integration
/// becomes needlessly stiff for the explicit solver.
pub const STIFFNESS_CAP: f64 = 1e4;

/// Physical parameters of a level scheme. `xi` couples the controlled
/// subspace to the outside, `omega` drives transitions inside the outside
/// space, `gamma` is the spontaneous decay rate of each decaying level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub xi: f64,
    pub omega: f64,
    pub gamma: f64,
}

impl ModelParams {
    pub fn new(xi: f64, omega: f64, gamma: f64) -> Result<Self> {
        let p = Self { xi, omega, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("xi", self.xi),
            ("omega", self.omega),
            ("gamma", self.gamma),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        if self.xi > 0.0
            && (self.omega > STIFFNESS_CAP * self.xi || self.gamma > STIFFNESS_CAP * self.xi)
        {
            return Err(Error::InvalidParams(format!(
                "omega/gamma exceed the stiffness cap of {STIFFNESS_CAP} * xi \
                 (xi = {}, omega = {}, gamma = {})",
                self.xi, self.omega, self.gamma
            )));
        }
        Ok(())
    }
}

/// The named toy models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// One controlled state coupled to one outside state.
    TwoLevel,
    /// Outside space of two chained states; omega drives 1-2.
    ThreeLevelChain,
    /// Outside space of three chained states; omega drives 1-2 and 2-3.
    FourLevelChain,
}

impl ModelKind {
    pub fn dim(self) -> usize {
        match self {
            ModelKind::TwoLevel => 2,
            ModelKind::ThreeLevelChain => 3,
            ModelKind::FourLevelChain => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::TwoLevel => "two_level",
            ModelKind::ThreeLevelChain => "three_level_chain",
            ModelKind::FourLevelChain => "four_level_chain",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_level" => Ok(ModelKind::TwoLevel),
            "three_level_chain" => Ok(ModelKind::ThreeLevelChain),
            "four_level_chain" => Ok(ModelKind::FourLevelChain),
            other => Err(Error::UnknownModel(other.to_string())),
        }
    }
}

/// A concrete scheme: interaction Hamiltonian, collapse operators and the
/// projector onto the controlled subspace. Immutable after construction.
#[derive(Debug, Clone)]
pub struct LevelScheme {
    kind: Option<ModelKind>,
    dim: usize,
    h_int: Operator,
    collapse_ops: Vec<Operator>,
    p_cs: Operator,
    params: ModelParams,
}

impl LevelScheme {
    /// Assemble a scheme from raw operators. The Hamiltonian must be
    /// Hermitian and `p_cs` a Hermitian projector of matching dimension.
    pub fn custom(
        h_int: Operator,
        collapse_ops: Vec<Operator>,
        p_cs: Operator,
        params: ModelParams,
    ) -> Result<Self> {
        params.validate()?;
        let dim = h_int.dim();
        let herm = h_int.hermiticity_residual();
        if herm > STRUCTURAL_TOL {
            return Err(Error::NotHermitian(herm));
        }
        if p_cs.dim() != dim {
            return Err(Error::DimensionMismatch(p_cs.dim(), dim));
        }
        let herm = p_cs.hermiticity_residual();
        if herm > STRUCTURAL_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let idem = p_cs.projector_residual();
        if idem > 1e-10 {
            return Err(Error::NotProjector(idem));
        }
        for c in &collapse_ops {
            if c.dim() != dim {
                return Err(Error::DimensionMismatch(c.dim(), dim));
            }
        }
        Ok(Self {
            kind: None,
            dim,
            h_int,
            collapse_ops,
            p_cs,
            params,
        })
    }

    pub fn kind(&self) -> Option<ModelKind> {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h_int(&self) -> &Operator {
        &self.h_int
    }

    pub fn collapse_ops(&self) -> &[Operator] {
        &self.collapse_ops
    }

    pub fn p_cs(&self) -> &Operator {
        &self.p_cs
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    /// Sum over channels of C_k^dag C_k (the total decay-rate operator).
    pub fn decay_rate_operator(&self) -> Operator {
        let mut w = Operator::zeros(self.dim);
        for c in &self.collapse_ops {
            w = &w + &c.dagger().matmul(c);
        }
        w
    }

    /// Non-Hermitian generator H - (i/2) sum_k C_k^dag C_k driving the
    /// no-jump evolution of trajectories.
    pub fn effective_generator(&self) -> Operator {
        let w = self.decay_rate_operator();
        &self.h_int + &w.scale(C64::new(0.0, -0.5))
    }
}

fn coupling(dim: usize, j: usize, k: usize, amp: f64) -> Operator {
    (&Operator::ket_bra(dim, j, k) + &Operator::ket_bra(dim, k, j)).scale_re(amp)
}

/// Build one of the named schemes. A zero decay rate yields the coherent
/// variant (no collapse channels); gamma > 0 attaches sqrt(gamma) |j><k|
/// collapse operators to each decaying transition of the chain.
pub fn build_model(kind: ModelKind, params: ModelParams) -> Result<LevelScheme> {
    params.validate()?;
    let ModelParams { xi, omega, gamma } = params;
    let dim = kind.dim();
    let (h_int, collapse_ops) = match kind {
        ModelKind::TwoLevel => {
            let h = coupling(dim, 0, 1, xi);
            let c = if gamma > 0.0 {
                vec![Operator::ket_bra(dim, 0, 1).scale_re(gamma.sqrt())]
            } else {
                vec![]
            };
            (h, c)
        }
        ModelKind::ThreeLevelChain => {
            let h = &coupling(dim, 0, 1, xi) + &coupling(dim, 1, 2, omega);
            let c = if gamma > 0.0 {
                vec![Operator::ket_bra(dim, 1, 2).scale_re(gamma.sqrt())]
            } else {
                vec![]
            };
            (h, c)
        }
        ModelKind::FourLevelChain => {
            let h = &(&coupling(dim, 0, 1, xi) + &coupling(dim, 1, 2, omega))
                + &coupling(dim, 2, 3, omega);
            let c = if gamma > 0.0 {
                vec![
                    Operator::ket_bra(dim, 1, 2).scale_re(gamma.sqrt()),
                    Operator::ket_bra(dim, 2, 3).scale_re(gamma.sqrt()),
                ]
            } else {
                vec![]
            };
            (h, c)
        }
    };
    Ok(LevelScheme {
        kind: Some(kind),
        dim,
        h_int,
        collapse_ops,
        p_cs: Operator::projector(dim, 0),
        params,
    })
}

/// The slow (xi) and fast (omega) parts of a named scheme's Hamiltonian,
/// as used by the dark-state analysis.
pub fn canonical_split(scheme: &LevelScheme) -> Result<(Operator, Operator)> {
    let kind = scheme.kind().ok_or(Error::WrongScheme {
        expected: "named (two_level / three_level_chain / four_level_chain)",
    })?;
    let ModelParams { xi, omega, .. } = scheme.params();
    let dim = kind.dim();
    let slow = coupling(dim, 0, 1, xi);
    let fast = match kind {
        ModelKind::TwoLevel => Operator::zeros(dim),
        ModelKind::ThreeLevelChain => coupling(dim, 1, 2, omega),
        ModelKind::FourLevelChain => &coupling(dim, 1, 2, omega) + &coupling(dim, 2, 3, omega),
    };
    Ok((slow, fast))
}

/// One rotating coupling of a lab-frame Hamiltonian:
/// amplitude * e^{i frequency t} |bra><ket| + h.c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveTerm {
    pub bra: usize,
    pub ket: usize,
    pub amplitude: f64,
    pub frequency: f64,
}

/// Transform a lab-frame Hamiltonian (rotating couplings plus diagonal free
/// energies) into the frame rotating with the free Hamiltonian, checking at
/// the sample times that the result is time independent. Resonant couplings
/// (frequency equal to the level-energy difference) pass; anything else
/// fails with the offending term.
pub fn interaction_picture(
    terms: &[DriveTerm],
    energies: &[f64],
    sample_times: &[f64],
) -> Result<Operator> {
    let dim = energies.len();
    if dim == 0 {
        return Err(Error::InvalidParams("empty energy list".into()));
    }
    if sample_times.is_empty() {
        return Err(Error::InvalidParams("need at least one sample time".into()));
    }
    for term in terms {
        if term.bra >= dim || term.ket >= dim {
            return Err(Error::InvalidParams(format!(
                "drive term level ({}, {}) out of range for dimension {dim}",
                term.bra, term.ket
            )));
        }
    }

    // e^{iH0 t} |b><k| e^{-iH0 t} = e^{i(E_b - E_k) t} |b><k|, so the term
    // rotates at frequency + E_bra - E_ket in the new frame.
    let at = |t: f64| -> Operator {
        let mut h = Operator::zeros(dim);
        for term in terms {
            let phase = term.frequency + energies[term.bra] - energies[term.ket];
            let z = C64::from_polar(term.amplitude, phase * t);
            let fwd = Operator::ket_bra(dim, term.bra, term.ket).scale(z);
            h = &(&h + &fwd) + &fwd.dagger();
        }
        h
    };

    let reference = at(sample_times[0]);
    let mut worst = 0.0f64;
    for &t in &sample_times[1..] {
        worst = worst.max(at(t).max_abs_diff(&reference));
    }
    if worst > 1e-10 {
        // identify the first non-resonant term for the error report
        for term in terms {
            let detuning = term.frequency + energies[term.bra] - energies[term.ket];
            if detuning.abs() * term.amplitude.abs() > 1e-12 {
                return Err(Error::NonResonant {
                    bra: term.bra,
                    ket: term.ket,
                    frequency: term.frequency,
                    residual: worst,
                });
            }
        }
        return Err(Error::NonResonant {
            bra: 0,
            ket: 0,
            frequency: 0.0,
            residual: worst,
        });
    }
    Ok(reference)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_level_coherent() {
        let scheme = build_model(
            ModelKind::TwoLevel,
            ModelParams::new(1.0, 0.0, 0.0).unwrap(),
        )
        .unwrap();
        assert_eq!(scheme.dim(), 2);
        assert!(scheme.collapse_ops().is_empty());
        assert_abs_diff_eq!(scheme.h_int().get(0, 1).re, 1.0);
        assert_abs_diff_eq!(scheme.h_int().get(1, 0).re, 1.0);
        assert_abs_diff_eq!(scheme.h_int().get(0, 0).norm(), 0.0);
    }

    #[test]
    fn three_level_collapse_operator() {
        let scheme = build_model(
            ModelKind::ThreeLevelChain,
            ModelParams::new(1.0, 10.0, 10.0).unwrap(),
        )
        .unwrap();
        assert_eq!(scheme.collapse_ops().len(), 1);
        let c = &scheme.collapse_ops()[0];
        assert_abs_diff_eq!(c.get(1, 2).re, 10.0f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(c.max_abs(), 10.0f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn four_level_zero_params_is_null() {
        let scheme = build_model(
            ModelKind::FourLevelChain,
            ModelParams::new(0.0, 0.0, 0.0).unwrap(),
        )
        .unwrap();
        assert_eq!(scheme.h_int().max_abs(), 0.0);
        assert!(scheme.collapse_ops().is_empty());
    }

    #[test]
    fn dissipation_does_not_alter_hamiltonian() {
        for kind in [
            ModelKind::TwoLevel,
            ModelKind::ThreeLevelChain,
            ModelKind::FourLevelChain,
        ] {
            let coh = build_model(kind, ModelParams::new(1.3, 7.1, 0.0).unwrap()).unwrap();
            let dis = build_model(kind, ModelParams::new(1.3, 7.1, 4.7).unwrap()).unwrap();
            assert_eq!(coh.h_int().max_abs_diff(dis.h_int()), 0.0);
        }
    }

    #[test]
    fn scheme_invariants_hold_for_all_models() {
        for kind in [
            ModelKind::TwoLevel,
            ModelKind::ThreeLevelChain,
            ModelKind::FourLevelChain,
        ] {
            let scheme = build_model(kind, ModelParams::new(0.9, 12.0, 8.0).unwrap()).unwrap();
            assert!(scheme.h_int().is_hermitian(STRUCTURAL_TOL));
            assert!(scheme.p_cs().is_hermitian(STRUCTURAL_TOL));
            assert!(scheme.p_cs().projector_residual() <= STRUCTURAL_TOL);
            // no self-coupling inside the controlled subspace
            let php = scheme.p_cs().matmul(scheme.h_int()).matmul(scheme.p_cs());
            assert_eq!(php.max_abs(), 0.0);
            // collapse operators are nilpotent of order 2
            for c in scheme.collapse_ops() {
                assert_eq!(c.matmul(c).max_abs(), 0.0);
            }
        }
    }

    #[test]
    fn stiffness_cap_enforced() {
        assert!(ModelParams::new(1.0, 2e4, 0.0).is_err());
        assert!(ModelParams::new(1.0, 0.0, 2e4).is_err());
        assert!(ModelParams::new(0.0, 5.0, 5.0).is_ok());
    }

    #[test]
    fn interaction_picture_resonant_two_level() {
        // amplitude xi at frequency E1 - E0 lands on xi (|0><1| + h.c.)
        let terms = [DriveTerm {
            bra: 0,
            ket: 1,
            amplitude: 1.7,
            frequency: 2.5 - 0.4,
        }];
        let times: Vec<f64> = (0..60).map(|i| 0.37 * i as f64).collect();
        let h = interaction_picture(&terms, &[0.4, 2.5], &times).unwrap();
        let expect = coupling(2, 0, 1, 1.7);
        assert!(h.max_abs_diff(&expect) <= 1e-12);
    }

    #[test]
    fn interaction_picture_four_level_chain() {
        let energies = [0.0, 1.1, 2.9, 4.0];
        let omega = 11.0;
        let terms = [
            DriveTerm {
                bra: 0,
                ket: 1,
                amplitude: 1.0,
                frequency: energies[1] - energies[0],
            },
            DriveTerm {
                bra: 1,
                ket: 2,
                amplitude: omega,
                frequency: energies[2] - energies[1],
            },
            DriveTerm {
                bra: 2,
                ket: 3,
                amplitude: omega,
                frequency: energies[3] - energies[2],
            },
        ];
        let times: Vec<f64> = (0..40).map(|i| 0.21 * i as f64).collect();
        let h = interaction_picture(&terms, &energies, &times).unwrap();
        let expect = build_model(
            ModelKind::FourLevelChain,
            ModelParams::new(1.0, omega, 0.0).unwrap(),
        )
        .unwrap()
        .h_int()
        .clone();
        assert!(h.max_abs_diff(&expect) <= 1e-10);
    }

    #[test]
    fn interaction_picture_zero_amplitudes() {
        let terms = [DriveTerm {
            bra: 0,
            ket: 1,
            amplitude: 0.0,
            frequency: 123.0,
        }];
        let h = interaction_picture(&terms, &[0.0, 1.0], &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(h.max_abs(), 0.0);
    }

    #[test]
    fn interaction_picture_rejects_detuned_coupling() {
        let terms = [DriveTerm {
            bra: 0,
            ket: 1,
            amplitude: 1.0,
            frequency: 1.5, // detuned: resonance would be 1.0
        }];
        let times: Vec<f64> = (0..20).map(|i| 0.5 * i as f64).collect();
        let err = interaction_picture(&terms, &[0.0, 1.0], &times).unwrap_err();
        match err {
            Error::NonResonant { bra, ket, .. } => {
                assert_eq!((bra, ket), (0, 1));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn unknown_model_name() {
        assert!(matches!(
            "five_level_ring".parse::<ModelKind>(),
            Err(Error::UnknownModel(_))
        ));
        assert_eq!(
            "three_level_chain".parse::<ModelKind>().unwrap(),
            ModelKind::ThreeLevelChain
        );
    }
}
