//! Two-photon source, birefringent delays and the experiments built on them.
//!
//! A photon pair is tracked as a list of [`Branch`]es: one amplitude per
//! polarization pair, tagged with the relative delay (photon 1 minus photon
//! 2, in units of the single-photon coherence length) picked up in
//! birefringent elements. Tracing over timing gives the effective
//! polarization state, where two branches interfere with weight
//! `κ(Δdelay)`.

pub mod compare;
pub mod config;
pub mod run;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{waveplate_matrix, QuantumProcess};
use crate::error::{QptError, Result};
use crate::linalg::{self, c, partial_trace, ComplexMatrix, Subsystem, PHYSICAL_TOL};
use crate::process::{aapt, sqpt, ProcessEstimate, SqptInput};
use crate::state::DensityMatrix;

pub use compare::{run_method_comparison, ComparisonOptions, ComparisonReport, MethodSummary};
pub use config::{load_config, parse_config, ScenarioConfig};

/// Branch delays closer than this are the same delay.
const DELAY_TOL: f64 = 1e-12;
/// Branches with smaller amplitude are dropped after mixing.
const AMPLITUDE_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Photon {
    Photon1,
    Photon2,
}

/// Which polarization travels on the slow axis of a delay element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlowAxis {
    SlowV,
    SlowH,
}

impl SlowAxis {
    fn delayed_bit(self) -> usize {
        match self {
            SlowAxis::SlowH => 0,
            SlowAxis::SlowV => 1,
        }
    }

    pub fn perpendicular(self) -> SlowAxis {
        match self {
            SlowAxis::SlowH => SlowAxis::SlowV,
            SlowAxis::SlowV => SlowAxis::SlowH,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind {
    PolarizationUnitary(ComplexMatrix),
    DelayShift { axis: SlowAxis, shift: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpticalElement {
    pub target: Photon,
    pub kind: ElementKind,
}

impl OpticalElement {
    pub fn unitary(target: Photon, u: ComplexMatrix) -> Result<Self> {
        linalg::expect_shape(&u, 2, "2x2 unitary")?;
        let dev = linalg::max_abs_diff(&(u.adjoint() * &u), &linalg::identity(2));
        if dev > 1e-10 {
            return Err(QptError::InvalidParameter { name: "unitary", value: dev, range: "U†U = I within 1e-10" });
        }
        Ok(OpticalElement { target, kind: ElementKind::PolarizationUnitary(u) })
    }

    /// Half-wave plate with its axis at `angle` from horizontal.
    pub fn half_wave_plate(target: Photon, angle: f64) -> Self {
        OpticalElement { target, kind: ElementKind::PolarizationUnitary(waveplate_matrix(std::f64::consts::PI, angle)) }
    }

    pub fn delay(target: Photon, axis: SlowAxis, shift: f64) -> Self {
        OpticalElement { target, kind: ElementKind::DelayShift { axis, shift } }
    }
}

/// Mutual coherence of two wavepackets as a function of their delay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// `max(0, 1 − |Δ|)`, the autocorrelation of a boxcar wavepacket.
    #[default]
    Triangular,
    /// `exp(−Δ²/2)`.
    Gaussian,
}

impl Kernel {
    pub fn eval(self, delta: f64) -> f64 {
        match self {
            Kernel::Triangular => (1.0 - delta.abs()).max(0.0),
            Kernel::Gaussian => (-0.5 * delta * delta).exp(),
        }
    }
}

/// One polarization term of the pair. `pol_index` is HH, HV, VH, VV = 0..3
/// with photon 1 as the high bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub pol_index: usize,
    pub amplitude: Complex64,
    pub rel_delay: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchState {
    pub branches: Vec<Branch>,
    pub kernel: Kernel,
}

impl BranchState {
    /// Pure state with every branch at zero delay.
    pub fn from_amplitudes(amplitudes: [Complex64; 4], kernel: Kernel) -> Self {
        let branches = amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > AMPLITUDE_TOL)
            .map(|(pol_index, &amplitude)| Branch { pol_index, amplitude, rel_delay: 0.0 })
            .collect();
        BranchState { branches, kernel }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.branches.iter().map(|b| b.amplitude.norm_sqr()).sum()
    }

    fn insert(branches: &mut Vec<Branch>, new: Branch) {
        match branches
            .iter_mut()
            .find(|b| b.pol_index == new.pol_index && (b.rel_delay - new.rel_delay).abs() <= DELAY_TOL)
        {
            Some(b) => b.amplitude += new.amplitude,
            None => branches.push(new),
        }
    }

    fn normalize_order(mut branches: Vec<Branch>) -> Vec<Branch> {
        branches.retain(|b| b.amplitude.norm() > AMPLITUDE_TOL);
        branches.sort_by(|a, b| a.pol_index.cmp(&b.pol_index).then(a.rel_delay.total_cmp(&b.rel_delay)));
        branches
    }

    pub fn apply(&self, element: &OpticalElement) -> BranchState {
        let shift_bit = match element.target {
            Photon::Photon1 => 1,
            Photon::Photon2 => 0,
        };
        let mut out = Vec::with_capacity(self.branches.len() * 2);
        for b in &self.branches {
            let own = (b.pol_index >> shift_bit) & 1;
            match &element.kind {
                ElementKind::PolarizationUnitary(u) => {
                    for new_bit in 0..2 {
                        let pol_index = (b.pol_index & !(1 << shift_bit)) | (new_bit << shift_bit);
                        let amplitude = u[(new_bit, own)] * b.amplitude;
                        Self::insert(&mut out, Branch { pol_index, amplitude, rel_delay: b.rel_delay });
                    }
                }
                ElementKind::DelayShift { axis, shift } => {
                    let mut moved = *b;
                    if own == axis.delayed_bit() {
                        moved.rel_delay += match element.target {
                            Photon::Photon1 => *shift,
                            Photon::Photon2 => -*shift,
                        };
                    }
                    Self::insert(&mut out, moved);
                }
            }
        }
        BranchState { branches: Self::normalize_order(out), kernel: self.kernel }
    }

    pub fn apply_all<'a>(&self, elements: impl IntoIterator<Item = &'a OpticalElement>) -> BranchState {
        elements.into_iter().fold(self.clone(), |s, e| s.apply(e))
    }
}

/// Downconversion source `|HH⟩ + r e^{iφ} |VV⟩`, normalized, where `r` is
/// the amplitude ratio |VV|/|HH|.
pub fn source_state(pump_ratio: f64, phase: f64) -> Result<BranchState> {
    if !(pump_ratio >= 0.0 && pump_ratio.is_finite()) {
        return Err(QptError::InvalidParameter { name: "pump_ratio", value: pump_ratio, range: ">= 0" });
    }
    let norm = (1.0 + pump_ratio * pump_ratio).sqrt();
    let vv = Complex64::from_polar(pump_ratio / norm, phase);
    Ok(BranchState::from_amplitudes([c(1.0 / norm, 0.0), linalg::ZERO, linalg::ZERO, vv], Kernel::default()))
}

/// `(|HH⟩ − |VV⟩)/√2`.
pub fn bell_source() -> BranchState {
    source_state(1.0, std::f64::consts::PI).expect("valid ratio")
}

/// Pump ratio that, after half-wave plates at 22.5° on both arms, gives
/// amplitudes (√⅓, √⅙, √⅙, √⅓).
pub fn werner_pump_ratio() -> f64 {
    (2f64.sqrt() - 1.0).powi(2)
}

/// `ρ_ij = Σ a_b a_b'* κ(r_b − r_b')` over branches with polarizations i, j.
pub fn effective_density(state: &BranchState) -> Result<DensityMatrix> {
    let mut rho = ComplexMatrix::zeros(4, 4);
    for a in &state.branches {
        for b in &state.branches {
            let k = state.kernel.eval(a.rel_delay - b.rel_delay);
            if k != 0.0 {
                rho[(a.pol_index, b.pol_index)] += a.amplitude * b.amplitude.conj() * k;
            }
        }
    }
    let min = linalg::min_eigenvalue(&rho);
    if min < -PHYSICAL_TOL {
        return Err(QptError::NotPositive(min));
    }
    DensityMatrix::new(rho)
}

/// Source, half-wave plates at 22.5°, then decoherers: photon 1 slow-V 1.0,
/// photon 2 slow-V 1.0 and slow-V 0.5.
pub fn werner_elements() -> Vec<OpticalElement> {
    let hwp = std::f64::consts::PI / 8.0;
    vec![
        OpticalElement::half_wave_plate(Photon::Photon1, hwp),
        OpticalElement::half_wave_plate(Photon::Photon2, hwp),
        OpticalElement::delay(Photon::Photon1, SlowAxis::SlowV, 1.0),
        OpticalElement::delay(Photon::Photon2, SlowAxis::SlowV, 1.0),
        OpticalElement::delay(Photon::Photon2, SlowAxis::SlowV, 0.5),
    ]
}

pub fn werner_branch_state(kernel: Kernel) -> BranchState {
    let mut source = source_state(werner_pump_ratio(), 0.0).expect("valid ratio");
    source.kernel = kernel;
    source.apply_all(&werner_elements())
}

pub fn prepare_werner() -> Result<DensityMatrix> {
    effective_density(&werner_branch_state(Kernel::Triangular))
}

/// The decoherer under test: photon 1, slow axis perpendicular to the
/// preparation decoherer.
pub fn recoherer_element() -> OpticalElement {
    OpticalElement::delay(Photon::Photon1, SlowAxis::SlowH, 1.0)
}

#[derive(Debug, Clone)]
pub struct RecohererResult {
    pub sigma: DensityMatrix,
    pub sigma_prime: DensityMatrix,
    pub estimate: ProcessEstimate,
}

/// AAPT of [`recoherer_element`] with the delay-carrying Werner state as input.
pub fn recoherer_scenario() -> Result<RecohererResult> {
    let branches = werner_branch_state(Kernel::Triangular);
    let sigma = effective_density(&branches)?;
    let sigma_prime = effective_density(&branches.apply(&recoherer_element()))?;
    let estimate = aapt(&sigma, &sigma_prime)?;
    Ok(RecohererResult { sigma, sigma_prime, estimate })
}

/// Optical elements acting on photon 1 of a fresh pair whose photon 2 is a
/// horizontal trigger. Mixed inputs are split into their eigenstates.
#[derive(Debug, Clone)]
pub struct BranchProcess {
    pub elements: Vec<OpticalElement>,
    pub kernel: Kernel,
}

impl QuantumProcess for BranchProcess {
    fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != 2 {
            return Err(QptError::DimensionMismatch { expected: "1-qubit state".into(), got: format!("{0}x{0}", rho.dim()) });
        }
        let (values, vectors) = linalg::hermitian_eigen(rho.matrix());
        let mut out = ComplexMatrix::zeros(2, 2);
        for (k, &lambda) in values.iter().enumerate() {
            if lambda <= AMPLITUDE_TOL {
                continue;
            }
            let psi = [vectors[(0, k)], vectors[(1, k)]];
            let pair = BranchState::from_amplitudes([psi[0], linalg::ZERO, psi[1], linalg::ZERO], self.kernel);
            let rho2 = effective_density(&pair.apply_all(&self.elements))?;
            out += partial_trace(rho2.matrix(), Subsystem::B)?.scale(lambda);
        }
        DensityMatrix::new_unchecked(out)
    }
}

/// SQPT of the recoherer element on inputs with no delay history.
pub fn recoherer_sqpt() -> Result<ProcessEstimate> {
    let process = BranchProcess { elements: vec![recoherer_element()], kernel: Kernel::Triangular };
    sqpt(&SqptInput::from_process(&process)?)
}
