//! Exact state and observable algebra for one- and two-photon polarization.
//!
//! Basis conventions: single photon `(|+⟩, |−⟩)`; two photons
//! `(|++⟩, |+−⟩, |−+⟩, |−−⟩)` with photon 1 as the left tensor factor.
//!
//! Analyzer convention: the polarizer at angle `θ` is the dichotomic
//! observable `cos 2θ·Z + sin 2θ·X`. With it the Bell-state correlation is
//! `cos 2(θa − θb)` and analyzers are π-periodic. Every angle-dependent
//! number in this crate depends on that choice.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::Outcome;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Tolerance for structural invariants (Hermiticity, trace, norm).
pub const STRUCTURAL_TOL: f64 = 1e-12;
/// Tolerance for spectral and derived equalities.
pub const SPECTRAL_TOL: f64 = 1e-10;
/// Born probabilities this far below zero are float noise and clamp to 0.
pub const PROBABILITY_CLAMP: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Largest entrywise modulus of `a − b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs_diff(m, &m.adjoint())
}

fn check_dim(found: usize, expected: usize) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn check_square_2_or_4(m: &CMatrix) -> Result<usize> {
    let (r, c) = m.shape();
    if r != c {
        return Err(Error::DimensionMismatch {
            expected: r,
            found: c,
        });
    }
    if r != 2 && r != 4 {
        return Err(Error::DimensionMismatch {
            expected: if r < 3 { 2 } else { 4 },
            found: r,
        });
    }
    Ok(r)
}

/// Analyzer orientation, canonicalized to `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(from = "f64", into = "f64")]
pub struct Angle(f64);

impl Angle {
    pub fn new(theta: f64) -> Self {
        let r = theta.rem_euclid(PI);
        // rem_euclid can round up to exactly π for tiny negative inputs.
        Angle(if r >= PI { 0.0 } else { r })
    }

    pub fn radians(self) -> f64 {
        self.0
    }
}

impl From<f64> for Angle {
    fn from(theta: f64) -> Self {
        Angle::new(theta)
    }
}

impl From<Angle> for f64 {
    fn from(a: Angle) -> f64 {
        a.0
    }
}

/// Normalized state vector of dimension 2 or 4.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let d = amplitudes.len();
        if d != 2 && d != 4 {
            return Err(Error::DimensionMismatch {
                expected: if d < 3 { 2 } else { 4 },
                found: d,
            });
        }
        let v = CVector::from_vec(amplitudes);
        let norm = v.norm();
        if (norm - 1.0).abs() > STRUCTURAL_TOL {
            return Err(Error::InvalidState(format!("norm {norm} differs from 1")));
        }
        Ok(PureState { amplitudes: v })
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn density(&self) -> DensityOperator {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityOperator::new(m).expect("projector onto a unit vector is a valid state")
    }
}

/// Hermitian, positive, unit-trace matrix of dimension 2 or 4.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: CMatrix,
}

impl DensityOperator {
    /// Validates Hermiticity and unit trace within 1e−12 and rejects
    /// eigenvalues below −1e−10.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_square_2_or_4(&matrix)?;
        let herm = hermiticity_defect(&matrix);
        if herm > STRUCTURAL_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (defect {herm:e})"
            )));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > STRUCTURAL_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min = raw_eigenvalues(&matrix)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        if min < -SPECTRAL_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(DensityOperator { matrix })
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        if dim != 2 && dim != 4 {
            return Err(Error::DimensionMismatch {
                expected: 4,
                found: dim,
            });
        }
        DensityOperator::new(CMatrix::identity(dim, dim) * real(1.0 / dim as f64))
    }

    /// Random full-rank state `G G† / tr(G G†)` with entries of `G` uniform
    /// in the unit square.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Self {
        let g = random_complex_matrix(rng, dim);
        let m = &g * g.adjoint();
        let tr = m.trace();
        let mut m = m / tr;
        symmetrize(&mut m);
        DensityOperator::new(m).expect("Gram matrix is a valid state")
    }

    /// `ρ₁ ⊗ ρ₂`; both factors must be single-photon states.
    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        check_dim(self.dim(), 2)?;
        check_dim(other.dim(), 2)?;
        DensityOperator::new(self.matrix.kronecker(&other.matrix))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// Ascending eigenvalues with float-noise negatives clamped to zero.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = raw_eigenvalues(&self.matrix)
            .into_iter()
            .map(|v| if v < 0.0 { 0.0 } else { v })
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// Number of eigenvalues above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        self.eigenvalues().into_iter().filter(|&v| v > tol).count()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.matrix)
    }

    pub fn max_abs_diff(&self, other: &DensityOperator) -> f64 {
        max_abs_diff(&self.matrix, &other.matrix)
    }
}

fn raw_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut h = m.clone();
    symmetrize(&mut h);
    h.symmetric_eigenvalues().iter().copied().collect()
}

/// Replaces `m` by `(m + m†)/2`.
fn symmetrize(m: &mut CMatrix) {
    let adj = m.adjoint();
    *m += adj;
    *m *= real(0.5);
}

fn random_complex_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// Hermitian matrix squaring to the identity: spectrum within `{−1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: CMatrix,
}

impl Observable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let d = check_square_2_or_4(&matrix)?;
        let herm = hermiticity_defect(&matrix);
        if herm > SPECTRAL_TOL {
            return Err(Error::InvalidObservable(format!(
                "not Hermitian (defect {herm:e})"
            )));
        }
        let sq = &matrix * &matrix;
        let defect = max_abs_diff(&sq, &CMatrix::identity(d, d));
        if defect > SPECTRAL_TOL {
            return Err(Error::InvalidObservable(format!(
                "square differs from identity by {defect:e}"
            )));
        }
        Ok(Observable { matrix })
    }

    pub fn pauli_z() -> Self {
        Observable {
            matrix: CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        }
    }

    pub fn pauli_x() -> Self {
        Observable {
            matrix: CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        }
    }

    /// `U diag(±1) U†` for a random unitary `U` and random signs, keeping at
    /// least one eigenvalue of each sign.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Self {
        let q = random_complex_matrix(rng, dim).qr().q();
        let mut signs: Vec<f64> = (0..dim)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        signs[0] = 1.0;
        signs[dim - 1] = -1.0;
        let diag =
            CMatrix::from_diagonal(&CVector::from_iterator(dim, signs.into_iter().map(real)));
        let mut m = &q * diag * q.adjoint();
        symmetrize(&mut m);
        Observable::new(m).expect("unitary conjugate of a sign matrix is dichotomic")
    }

    /// `a ⊗ b` for single-photon observables.
    pub fn tensor(a: &Observable, b: &Observable) -> Result<Observable> {
        check_dim(a.dim(), 2)?;
        check_dim(b.dim(), 2)?;
        Ok(Observable {
            matrix: a.matrix.kronecker(&b.matrix),
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Eigenspace projectors `(I + O)/2` and `(I − O)/2`, in that order.
    ///
    /// These are projectors onto whole eigenspaces, so degenerate spectra
    /// (e.g. `Z ⊗ Z`) are handled without choosing eigenvectors.
    pub fn projectors(&self) -> [CMatrix; 2] {
        let d = self.dim();
        let id = CMatrix::identity(d, d);
        let half = real(0.5);
        [(&id + &self.matrix) * half, (&id - &self.matrix) * half]
    }

    pub fn projector(&self, outcome: Outcome) -> CMatrix {
        let [plus, minus] = self.projectors();
        match outcome {
            Outcome::Plus => plus,
            Outcome::Minus => minus,
        }
    }
}

/// The analyzer at `angle`: `cos 2θ·Z + sin 2θ·X`.
pub fn polarizer_observable(angle: Angle) -> Observable {
    let (s, c) = (2.0 * angle.radians()).sin_cos();
    Observable {
        matrix: CMatrix::from_row_slice(2, 2, &[real(c), real(s), real(s), real(-c)]),
    }
}

/// Eigenvectors `|+,θ⟩ = (cos θ, sin θ)` and `|−,θ⟩ = (−sin θ, cos θ)` of
/// [`polarizer_observable`].
pub fn polarizer_eigenvectors(angle: Angle) -> (CVector, CVector) {
    let (s, c) = angle.radians().sin_cos();
    (
        CVector::from_vec(vec![real(c), real(s)]),
        CVector::from_vec(vec![real(-s), real(c)]),
    )
}

/// `(|++⟩ + |−−⟩)/√2`.
pub fn bell_state() -> PureState {
    PureState {
        amplitudes: CVector::from_vec(vec![real(FRAC_1_SQRT_2), ZERO, ZERO, real(FRAC_1_SQRT_2)]),
    }
}

/// `|Φ_θ⟩⟨Φ_θ|` with `|Φ_θ⟩ = (|+,θ⟩|+,θ⟩ + |−,θ⟩|−,θ⟩)/√2`. Equal to the
/// Bell state for every θ.
pub fn rotated_bell_state(angle: Angle) -> DensityOperator {
    let (plus, minus) = polarizer_eigenvectors(angle);
    let phi = (plus.kronecker(&plus) + minus.kronecker(&minus)) * real(FRAC_1_SQRT_2);
    let mut m = &phi * phi.adjoint();
    symmetrize(&mut m);
    DensityOperator::new(m).expect("projector onto a unit vector is a valid state")
}

/// `tr(ρ O)`.
pub fn expectation(state: &DensityOperator, obs: &Observable) -> Result<f64> {
    check_dim(obs.dim(), state.dim())?;
    let tr = (state.matrix() * obs.matrix()).trace();
    if tr.im.abs() > SPECTRAL_TOL {
        return Err(Error::InvalidState(format!(
            "expectation has imaginary part {:e}",
            tr.im
        )));
    }
    Ok(tr.re)
}

fn sandwich_sum(state: &CMatrix, projectors: &[CMatrix]) -> CMatrix {
    let d = state.nrows();
    let mut out = CMatrix::zeros(d, d);
    for p in projectors {
        out += p * state * p;
    }
    symmetrize(&mut out);
    out
}

/// `Σ_a P_a ρ P_a` over the eigenspace projectors of `obs`.
pub fn dephase(state: &DensityOperator, obs: &Observable) -> Result<DensityOperator> {
    check_dim(obs.dim(), state.dim())?;
    DensityOperator::new(sandwich_sum(state.matrix(), &obs.projectors()))
}

/// Which photon of a two-photon state an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    First,
    Second,
}

impl TryFrom<u8> for Subsystem {
    type Error = Error;

    fn try_from(index: u8) -> Result<Self> {
        match index {
            1 => Ok(Subsystem::First),
            2 => Ok(Subsystem::Second),
            other => Err(Error::InvalidSubsystem(other)),
        }
    }
}

fn lift(p: &CMatrix, subsystem: Subsystem) -> CMatrix {
    let id = CMatrix::identity(2, 2);
    match subsystem {
        Subsystem::First => p.kronecker(&id),
        Subsystem::Second => id.kronecker(p),
    }
}

/// Dephases one photon of a two-photon state: `Σ_a (P_a ⊗ I) ρ (P_a ⊗ I)`
/// for the first photon, `Σ_a (I ⊗ P_a) ρ (I ⊗ P_a)` for the second.
pub fn partial_dephase(
    state: &DensityOperator,
    obs: &Observable,
    subsystem: Subsystem,
) -> Result<DensityOperator> {
    check_dim(state.dim(), 4)?;
    check_dim(obs.dim(), 2)?;
    let lifted: Vec<CMatrix> = obs
        .projectors()
        .iter()
        .map(|p| lift(p, subsystem))
        .collect();
    DensityOperator::new(sandwich_sum(state.matrix(), &lifted))
}

/// Unrecorded measurement of photon 1 along `angle`.
pub fn measure_collapse(state: &DensityOperator, angle: Angle) -> Result<DensityOperator> {
    partial_dephase(state, &polarizer_observable(angle), Subsystem::First)
}

/// Born probabilities of the four outcome combinations for analyzers at
/// `angle_a` (photon 1) and `angle_b` (photon 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointProbabilities {
    pub plus_plus: f64,
    pub plus_minus: f64,
    pub minus_plus: f64,
    pub minus_minus: f64,
}

impl JointProbabilities {
    pub fn get(&self, a: Outcome, b: Outcome) -> f64 {
        match (a, b) {
            (Outcome::Plus, Outcome::Plus) => self.plus_plus,
            (Outcome::Plus, Outcome::Minus) => self.plus_minus,
            (Outcome::Minus, Outcome::Plus) => self.minus_plus,
            (Outcome::Minus, Outcome::Minus) => self.minus_minus,
        }
    }

    /// Order `(++, +−, −+, −−)`.
    pub fn as_array(&self) -> [f64; 4] {
        [
            self.plus_plus,
            self.plus_minus,
            self.minus_plus,
            self.minus_minus,
        ]
    }

    /// `p(++) + p(−−) − p(+−) − p(−+)`.
    pub fn correlation(&self) -> f64 {
        self.plus_plus + self.minus_minus - self.plus_minus - self.minus_plus
    }
}

pub fn joint_probabilities(
    state: &DensityOperator,
    angle_a: Angle,
    angle_b: Angle,
) -> Result<JointProbabilities> {
    check_dim(state.dim(), 4)?;
    let pa = polarizer_observable(angle_a).projectors();
    let pb = polarizer_observable(angle_b).projectors();
    let mut p = [0.0; 4];
    for (i, a) in pa.iter().enumerate() {
        for (j, b) in pb.iter().enumerate() {
            let v = (state.matrix() * a.kronecker(b)).trace().re;
            if v < -PROBABILITY_CLAMP {
                return Err(Error::InvalidState(format!("negative probability {v:e}")));
            }
            p[2 * i + j] = v.max(0.0);
        }
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > SPECTRAL_TOL {
        return Err(Error::InvalidState(format!("probabilities sum to {total}")));
    }
    Ok(JointProbabilities {
        plus_plus: p[0],
        plus_minus: p[1],
        minus_plus: p[2],
        minus_minus: p[3],
    })
}

/// Row-major text form: one row per line, entries `(re,im)` separated by a
/// space, each part with 17 significant digits.
pub fn format_matrix(m: &CMatrix) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(' ');
            }
            let z = m[(r, c)];
            // `+ 0.0` folds negative zero into zero
            let _ = write!(out, "({:.16e},{:.16e})", z.re + 0.0, z.im + 0.0);
        }
        out.push('\n');
    }
    out
}

/// Inverse of [`format_matrix`].
pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    let bad = |msg: String| Error::InvalidState(format!("matrix text: {msg}"));
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let row = line
            .split_whitespace()
            .map(|tok| {
                let inner = tok
                    .strip_prefix('(')
                    .and_then(|t| t.strip_suffix(')'))
                    .ok_or_else(|| bad(format!("entry {tok:?} is not (re,im)")))?;
                let (re, im) = inner
                    .split_once(',')
                    .ok_or_else(|| bad(format!("entry {tok:?} is not (re,im)")))?;
                let re: f64 = re.parse().map_err(|e| bad(format!("{re:?}: {e}")))?;
                let im: f64 = im.parse().map_err(|e| bad(format!("{im:?}: {e}")))?;
                Ok(Complex64::new(re, im))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != rows[0].len()) {
        return Err(bad("ragged or empty".into()));
    }
    let cols = rows[0].len();
    Ok(CMatrix::from_row_iterator(
        n,
        cols,
        rows.into_iter().flatten(),
    ))
}
