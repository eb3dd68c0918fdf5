// SPDX-License-Identifier: Apache-2.0

//! Truncated-Fock-space linear algebra.
//!
//! The state space is always a spin-1/2 factor followed by one or two bosonic
//! modes, each truncated to the Fock states `|0⟩ … |N−1⟩`. The basis ordering
//! is fixed: the spin index varies slowest, then mode x, then mode y. With
//! spin index 0 = `|↑⟩` the flat index of `|s, n_x, n_y⟩` is
//! `s·N_x·N_y + n_x·N_y + n_y`. CSV dumps of states depend on this ordering.
//!
//! Bosonic operators are the exact projections of their infinite-dimensional
//! counterparts, so commutation identities only fail on the top Fock level.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Populations of the top Fock level above this value trigger a warning.
pub const TAIL_WARNING: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn index(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpinOp {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

impl SpinOp {
    /// 2×2 matrix in the `{|↑⟩, |↓⟩}` basis with σ⁺ = |↑⟩⟨↓| and
    /// σ_y = i(σ⁻ − σ⁺).
    pub fn matrix(self) -> CMatrix {
        let m = |a: [Complex64; 4]| CMatrix::from_row_slice(2, 2, &a);
        match self {
            SpinOp::X => m([ZERO, ONE, ONE, ZERO]),
            SpinOp::Y => m([ZERO, -I, I, ZERO]),
            SpinOp::Z => m([ONE, ZERO, ZERO, -ONE]),
            SpinOp::Plus => m([ZERO, ONE, ZERO, ZERO]),
            SpinOp::Minus => m([ZERO, ZERO, ONE, ZERO]),
        }
    }
}

/// Spin ⊗ mode_x [⊗ mode_y] with a Fock cutoff per mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct HilbertSpace {
    cutoffs: Vec<usize>,
}

impl HilbertSpace {
    pub const SPIN_DIM: usize = 2;

    pub fn new(cutoffs: impl Into<Vec<usize>>) -> Result<Self> {
        let cutoffs = cutoffs.into();
        if cutoffs.is_empty() {
            return Err(Error::InvalidSpace(
                "at least one bosonic mode is required".into(),
            ));
        }
        if let Some(&c) = cutoffs.iter().find(|&&c| c < 2) {
            return Err(Error::InvalidSpace(format!("mode cutoff {c} is below 2")));
        }
        Ok(Self { cutoffs })
    }

    pub fn single_mode(cutoff: usize) -> Result<Self> {
        Self::new(vec![cutoff])
    }

    pub fn two_mode(cutoff_x: usize, cutoff_y: usize) -> Result<Self> {
        Self::new(vec![cutoff_x, cutoff_y])
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn num_modes(&self) -> usize {
        self.cutoffs.len()
    }

    /// Dimension of the motional factor alone.
    pub fn motional_dim(&self) -> usize {
        self.cutoffs.iter().product()
    }

    pub fn dim(&self) -> usize {
        Self::SPIN_DIM * self.motional_dim()
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.num_modes() {
            Ok(())
        } else {
            Err(Error::InvalidMode {
                index: mode,
                modes: self.num_modes(),
            })
        }
    }

    /// Flat motional index of the occupation tuple.
    pub fn motional_index(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.num_modes() {
            return Err(Error::InvalidParameter(format!(
                "expected {} occupations, got {}",
                self.num_modes(),
                occupations.len()
            )));
        }
        let mut idx = 0;
        for (mode, (&n, &cutoff)) in occupations.iter().zip(&self.cutoffs).enumerate() {
            if n >= cutoff {
                return Err(Error::OccupationOutOfRange {
                    mode,
                    occupation: n,
                    cutoff,
                });
            }
            idx = idx * cutoff + n;
        }
        Ok(idx)
    }

    pub fn index(&self, spin: Spin, occupations: &[usize]) -> Result<usize> {
        Ok(spin.index() * self.motional_dim() + self.motional_index(occupations)?)
    }

    /// Inverse of [`HilbertSpace::index`].
    pub fn label(&self, index: usize) -> (Spin, Vec<usize>) {
        let m = self.motional_dim();
        let spin = if index < m { Spin::Up } else { Spin::Down };
        (spin, self.occupations_of(index % m))
    }

    fn occupations_of(&self, motional_index: usize) -> Vec<usize> {
        let mut rest = motional_index;
        let mut occ = vec![0; self.num_modes()];
        for (k, &cutoff) in self.cutoffs.iter().enumerate().rev() {
            occ[k] = rest % cutoff;
            rest /= cutoff;
        }
        occ
    }

    /// Basis indices whose occupations all stay `margin` levels below the
    /// cutoff. Truncation artifacts live on the excluded rows and columns.
    pub fn safe_indices(&self, margin: usize) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| {
                let (_, occ) = self.label(i);
                occ.iter().zip(&self.cutoffs).all(|(&n, &c)| n + margin < c)
            })
            .collect()
    }

    /// Embeds a single-mode operator on `mode`, identity elsewhere.
    fn embed_mode(&self, mode: usize, local: &CMatrix) -> CMatrix {
        let mut m = CMatrix::identity(Self::SPIN_DIM, Self::SPIN_DIM);
        for (k, &cutoff) in self.cutoffs.iter().enumerate() {
            let factor = if k == mode {
                local.clone()
            } else {
                CMatrix::identity(cutoff, cutoff)
            };
            m = m.kronecker(&factor);
        }
        m
    }

    fn embed_spin(&self, local: &CMatrix) -> CMatrix {
        local.kronecker(&CMatrix::identity(self.motional_dim(), self.motional_dim()))
    }
}

impl fmt::Display for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "spin")?;
        for c in &self.cutoffs {
            write!(f, " ⊗ fock({c})")?;
        }
        Ok(())
    }
}

/// Dense complex operator tagged with its space.
///
/// Arithmetic between operators on different spaces is a programming error
/// and panics, in the same way nalgebra panics on mismatched shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    matrix: CMatrix,
}

impl Operator {
    pub fn from_matrix(space: &HilbertSpace, matrix: CMatrix) -> Result<Self> {
        let d = space.dim();
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::InvalidParameter(format!(
                "matrix is {}×{}, space dimension is {d}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            space: space.clone(),
            matrix,
        })
    }

    pub fn zeros(space: &HilbertSpace) -> Self {
        let d = space.dim();
        Self {
            space: space.clone(),
            matrix: CMatrix::zeros(d, d),
        }
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        let d = space.dim();
        Self {
            space: space.clone(),
            matrix: CMatrix::identity(d, d),
        }
    }

    /// Annihilation operator â of `mode`, with ⟨n−1|â|n⟩ = √n.
    pub fn lowering(space: &HilbertSpace, mode: usize) -> Result<Self> {
        space.check_mode(mode)?;
        let n = space.cutoffs[mode];
        let mut local = CMatrix::zeros(n, n);
        for k in 1..n {
            local[(k - 1, k)] = Complex64::from((k as f64).sqrt());
        }
        Ok(Self {
            space: space.clone(),
            matrix: space.embed_mode(mode, &local),
        })
    }

    pub fn raising(space: &HilbertSpace, mode: usize) -> Result<Self> {
        Ok(Self::lowering(space, mode)?.adjoint())
    }

    /// Number operator â†â of `mode`, built directly as a diagonal.
    pub fn number(space: &HilbertSpace, mode: usize) -> Result<Self> {
        space.check_mode(mode)?;
        let n = space.cutoffs[mode];
        let local = CMatrix::from_diagonal(&CVector::from_fn(n, |k, _| Complex64::from(k as f64)));
        Ok(Self {
            space: space.clone(),
            matrix: space.embed_mode(mode, &local),
        })
    }

    /// Position-like quadrature â† + â.
    pub fn quadrature(space: &HilbertSpace, mode: usize) -> Result<Self> {
        let a = Self::lowering(space, mode)?;
        Ok(&a.adjoint() + &a)
    }

    /// Anti-Hermitian combination â − â†.
    pub fn displacement_generator(space: &HilbertSpace, mode: usize) -> Result<Self> {
        let a = Self::lowering(space, mode)?;
        Ok(&a - &a.adjoint())
    }

    pub fn spin(space: &HilbertSpace, which: SpinOp) -> Self {
        Self {
            space: space.clone(),
            matrix: space.embed_spin(&which.matrix()),
        }
    }

    /// Projector onto a spin state, identity on the modes.
    pub fn spin_projector(space: &HilbertSpace, spin: Spin) -> Self {
        let mut local = CMatrix::zeros(2, 2);
        local[(spin.index(), spin.index())] = ONE;
        Self {
            space: space.clone(),
            matrix: space.embed_spin(&local),
        }
    }

    /// Embeds a motional-factor operator (dimension `motional_dim`).
    pub fn from_motional(space: &HilbertSpace, motional: &CMatrix) -> Result<Self> {
        let m = space.motional_dim();
        if motional.nrows() != m || motional.ncols() != m {
            return Err(Error::InvalidParameter(format!(
                "motional operator must be {m}×{m}"
            )));
        }
        Ok(Self {
            space: space.clone(),
            matrix: CMatrix::identity(2, 2).kronecker(motional),
        })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, c: impl Into<Complex64>) -> Self {
        let c = c.into();
        Self {
            space: self.space.clone(),
            matrix: &self.matrix * c,
        }
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Operator) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.matrix)
    }

    /// `‖A − A†‖_max / ‖A‖_max`, zero for the zero operator.
    pub fn hermiticity_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        max_abs(&(&self.matrix - self.matrix.adjoint())) / scale
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermiticity_defect() <= rel_tol
    }

    /// Submatrix on the given basis indices.
    pub fn restrict(&self, indices: &[usize]) -> CMatrix {
        restrict(&self.matrix, indices)
    }

    pub fn is_finite(&self) -> bool {
        self.matrix
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    fn assert_same_space(&self, other: &Operator) {
        assert_eq!(
            self.space, other.space,
            "operator arithmetic across different Hilbert spaces"
        );
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.assert_same_space(rhs);
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.assert_same_space(rhs);
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.assert_same_space(rhs);
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix * &rhs.matrix,
        }
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<Complex64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: Complex64) -> Operator {
        self.scale(rhs)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(-1.0)
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        self.assert_same_space(rhs);
        self.matrix += &rhs.matrix;
    }
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Spectral norm (largest singular value).
pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

pub fn restrict(m: &CMatrix, indices: &[usize]) -> CMatrix {
    CMatrix::from_fn(indices.len(), indices.len(), |r, c| {
        m[(indices[r], indices[c])]
    })
}

pub fn mode_lowering(space: &HilbertSpace, mode_index: usize) -> Result<Operator> {
    Operator::lowering(space, mode_index)
}

pub fn spin_operator(space: &HilbertSpace, which: SpinOp) -> Operator {
    Operator::spin(space, which)
}

/// `exp(scalar·A)` via Padé scaling-and-squaring.
pub fn matrix_exponential(a: &Operator, scalar: Complex64) -> Result<Operator> {
    let m = expm(&(a.matrix() * scalar))?;
    Ok(Operator {
        space: a.space.clone(),
        matrix: m,
    })
}

pub fn expm(m: &CMatrix) -> Result<CMatrix> {
    if !m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let e = m.exp();
    if e.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(e)
    } else {
        Err(Error::NonFinite)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    Pure(CVector),
    Mixed(CMatrix),
}

/// Pure state vector or density matrix on a [`HilbertSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    space: HilbertSpace,
    repr: Repr,
}

const NORM_TOL: f64 = 1e-10;

impl QuantumState {
    pub fn pure(space: &HilbertSpace, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::InvalidParameter(
                "amplitude vector has wrong length".into(),
            ));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Unnormalized(format!("‖ψ‖ = {norm}")));
        }
        Ok(Self {
            space: space.clone(),
            repr: Repr::Pure(amplitudes),
        })
    }

    /// Validates trace, Hermiticity and positivity.
    pub fn mixed(space: &HilbertSpace, rho: CMatrix) -> Result<Self> {
        let d = space.dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::InvalidParameter(
                "density matrix has wrong shape".into(),
            ));
        }
        let state = Self {
            space: space.clone(),
            repr: Repr::Mixed(rho),
        };
        state.validate()?;
        Ok(state)
    }

    pub(crate) fn mixed_unchecked(space: &HilbertSpace, rho: CMatrix) -> Self {
        Self {
            space: space.clone(),
            repr: Repr::Mixed(rho),
        }
    }

    pub(crate) fn pure_unchecked(space: &HilbertSpace, psi: CVector) -> Self {
        Self {
            space: space.clone(),
            repr: Repr::Pure(psi),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.repr {
            Repr::Pure(psi) => {
                let norm = psi.norm();
                if (norm - 1.0).abs() > NORM_TOL {
                    return Err(Error::Unnormalized(format!("‖ψ‖ = {norm}")));
                }
            }
            Repr::Mixed(rho) => {
                let tr = rho.trace();
                if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
                    return Err(Error::Unnormalized(format!("Tr ρ = {tr}")));
                }
                let scale = max_abs(rho).max(1.0);
                if max_abs(&(rho - rho.adjoint())) > NORM_TOL * scale {
                    return Err(Error::Unnormalized("ρ is not Hermitian".into()));
                }
                let min = min_eigenvalue(rho);
                if min < -NORM_TOL {
                    return Err(Error::Unnormalized(format!("ρ has eigenvalue {min}")));
                }
            }
        }
        Ok(())
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, Repr::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&CVector> {
        match &self.repr {
            Repr::Pure(psi) => Some(psi),
            Repr::Mixed(_) => None,
        }
    }

    pub fn density_matrix(&self) -> CMatrix {
        match &self.repr {
            Repr::Pure(psi) => psi * psi.adjoint(),
            Repr::Mixed(rho) => rho.clone(),
        }
    }

    /// Converts to the density-matrix representation.
    pub fn to_mixed(&self) -> Self {
        Self::mixed_unchecked(&self.space, self.density_matrix())
    }

    pub fn trace(&self) -> f64 {
        match &self.repr {
            Repr::Pure(psi) => psi.norm_squared(),
            Repr::Mixed(rho) => rho.trace().re,
        }
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        match &self.repr {
            Repr::Pure(psi) => psi.norm_squared().powi(2),
            Repr::Mixed(rho) => rho.iter().map(|z| z.norm_sqr()).sum(),
        }
    }

    pub fn expectation(&self, op: &Operator) -> Complex64 {
        assert_eq!(op.space(), &self.space, "expectation across spaces");
        match &self.repr {
            Repr::Pure(psi) => psi.dotc(&(op.matrix() * psi)),
            Repr::Mixed(rho) => {
                // Tr(Aρ) without forming the product
                let a = op.matrix();
                let d = a.nrows();
                let mut acc = ZERO;
                for i in 0..d {
                    for j in 0..d {
                        acc += a[(i, j)] * rho[(j, i)];
                    }
                }
                acc
            }
        }
    }

    /// Diagonal of ρ in the product basis.
    pub fn populations(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Pure(psi) => psi.iter().map(|z| z.norm_sqr()).collect(),
            Repr::Mixed(rho) => rho.diagonal().iter().map(|z| z.re).collect(),
        }
    }

    /// P_↑ = ⟨↑|Tr_modes ρ|↑⟩.
    pub fn spin_up_probability(&self) -> f64 {
        let m = self.space.motional_dim();
        self.populations()[..m].iter().sum()
    }

    /// Reduced Fock distribution of one mode.
    pub fn mode_distribution(&self, mode: usize) -> Result<Vec<f64>> {
        self.space.check_mode(mode)?;
        let mut dist = vec![0.0; self.space.cutoffs()[mode]];
        for (i, p) in self.populations().into_iter().enumerate() {
            let (_, occ) = self.space.label(i);
            dist[occ[mode]] += p;
        }
        Ok(dist)
    }

    pub fn mean_occupation(&self, mode: usize) -> Result<f64> {
        Ok(self
            .mode_distribution(mode)?
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum())
    }

    /// Population of the top Fock level of each mode.
    pub fn tail_populations(&self) -> Vec<f64> {
        (0..self.space.num_modes())
            .map(|k| *self.mode_distribution(k).unwrap().last().unwrap())
            .collect()
    }

    /// Applies `U ψ` or `U ρ U†`.
    pub fn transformed(&self, unitary: &CMatrix) -> Self {
        let repr = match &self.repr {
            Repr::Pure(psi) => Repr::Pure(unitary * psi),
            Repr::Mixed(rho) => Repr::Mixed(unitary * rho * unitary.adjoint()),
        };
        Self {
            space: self.space.clone(),
            repr,
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match &self.repr {
            Repr::Pure(_) => 0.0,
            Repr::Mixed(rho) => min_eigenvalue(rho),
        }
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let h = (m + m.adjoint()) * Complex64::from(0.5);
    h.symmetric_eigenvalues()
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * Complex64::from(0.5);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Motional state (all modes) before it is combined with a spin state.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionalState {
    cutoffs: Vec<usize>,
    repr: Repr,
    truncated_mass: f64,
}

impl MotionalState {
    pub fn vacuum(space: &HilbertSpace) -> Self {
        Self::fock(space, &vec![0; space.num_modes()]).expect("vacuum is always representable")
    }

    pub fn fock(space: &HilbertSpace, occupations: &[usize]) -> Result<Self> {
        let idx = space.motional_index(occupations)?;
        let mut psi = CVector::zeros(space.motional_dim());
        psi[idx] = ONE;
        Ok(Self {
            cutoffs: space.cutoffs().to_vec(),
            repr: Repr::Pure(psi),
            truncated_mass: 0.0,
        })
    }

    /// Product of thermal states with the given mean occupations.
    pub fn thermal_product(space: &HilbertSpace, nbars: &[f64]) -> Result<Self> {
        if nbars.len() != space.num_modes() {
            return Err(Error::InvalidParameter(format!(
                "expected {} mean occupations",
                space.num_modes()
            )));
        }
        let mut diag = nalgebra::DVector::<f64>::from_element(1, 1.0);
        let mut kept = 1.0;
        for (&nbar, &cutoff) in nbars.iter().zip(space.cutoffs()) {
            let (p, tail) = thermal_distribution(nbar, cutoff)?;
            kept *= 1.0 - tail;
            diag = diag.kronecker(&nalgebra::DVector::from_vec(p));
        }
        let rho = CMatrix::from_diagonal(&diag.map(Complex64::from));
        Ok(Self {
            cutoffs: space.cutoffs().to_vec(),
            repr: Repr::Mixed(rho),
            truncated_mass: 1.0 - kept,
        })
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, Repr::Pure(_))
    }

    /// Probability mass that fell beyond the cutoff before renormalization.
    pub fn truncated_mass(&self) -> f64 {
        self.truncated_mass
    }

    pub fn density_matrix(&self) -> CMatrix {
        match &self.repr {
            Repr::Pure(psi) => psi * psi.adjoint(),
            Repr::Mixed(rho) => rho.clone(),
        }
    }
}

/// Geometric Fock distribution `p_n = n̄ⁿ/(1+n̄)^{n+1}` truncated to
/// `cutoff` levels and renormalized. Also returns the discarded mass.
pub fn thermal_distribution(nbar: f64, cutoff: usize) -> Result<(Vec<f64>, f64)> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "mean phonon number must be non-negative, got {nbar}"
        )));
    }
    let ratio = nbar / (1.0 + nbar);
    let mut p: Vec<f64> = (0..cutoff)
        .map(|n| ratio.powi(n as i32) / (1.0 + nbar))
        .collect();
    let tail = ratio.powi(cutoff as i32);
    let kept: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= kept);
    Ok((p, tail))
}

pub fn fock_state(space: &HilbertSpace, spin: Spin, occupations: &[usize]) -> Result<QuantumState> {
    let idx = space.index(spin, occupations)?;
    let mut psi = CVector::zeros(space.dim());
    psi[idx] = ONE;
    Ok(QuantumState::pure_unchecked(space, psi))
}

/// Thermal state of `mode_index`; any other mode is left in vacuum.
pub fn thermal_state(space: &HilbertSpace, mode_index: usize, nbar: f64) -> Result<MotionalState> {
    space.check_mode(mode_index)?;
    let nbars: Vec<f64> = (0..space.num_modes())
        .map(|k| if k == mode_index { nbar } else { 0.0 })
        .collect();
    MotionalState::thermal_product(space, &nbars)
}

/// `(c_up|↑⟩ + c_down|↓⟩) ⊗ motional`.
pub fn spin_superposition(
    space: &HilbertSpace,
    c_up: Complex64,
    c_down: Complex64,
    motional: &MotionalState,
) -> Result<QuantumState> {
    if motional.cutoffs != space.cutoffs() {
        return Err(Error::SpaceMismatch);
    }
    let norm = c_up.norm_sqr() + c_down.norm_sqr();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::Unnormalized(format!("|c_up|² + |c_down|² = {norm}")));
    }
    let spin = CVector::from_vec(vec![c_up, c_down]);
    Ok(match &motional.repr {
        Repr::Pure(phi) => QuantumState::pure_unchecked(space, spin.kronecker(phi)),
        Repr::Mixed(rho) => {
            let s = &spin * spin.adjoint();
            QuantumState::mixed_unchecked(space, s.kronecker(rho))
        }
    })
}

/// Spin basis state times a motional state.
pub fn product_state(
    space: &HilbertSpace,
    spin: Spin,
    motional: &MotionalState,
) -> Result<QuantumState> {
    let (up, down) = match spin {
        Spin::Up => (ONE, ZERO),
        Spin::Down => (ZERO, ONE),
    };
    spin_superposition(space, up, down, motional)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn space_invariants() {
        assert!(HilbertSpace::new(Vec::<usize>::new()).is_err());
        assert!(HilbertSpace::single_mode(1).is_err());
        let s = HilbertSpace::two_mode(3, 4).unwrap();
        assert_eq!(s.dim(), 24);
        let idx = s.index(Spin::Down, &[2, 1]).unwrap();
        assert_eq!(idx, 12 + 2 * 4 + 1);
        assert_eq!(s.label(idx), (Spin::Down, vec![2, 1]));
        assert!(matches!(
            s.index(Spin::Up, &[3, 0]),
            Err(Error::OccupationOutOfRange { .. })
        ));
    }

    #[test]
    fn lowering_elements() {
        let s = HilbertSpace::single_mode(3).unwrap();
        let a = mode_lowering(&s, 0).unwrap();
        let up0 = s.index(Spin::Up, &[0]).unwrap();
        let up1 = s.index(Spin::Up, &[1]).unwrap();
        let up2 = s.index(Spin::Up, &[2]).unwrap();
        assert!(close(a.matrix()[(up0, up1)].re, 1.0, 1e-15));
        assert!(close(a.matrix()[(up1, up2)].re, 2f64.sqrt(), 1e-15));
        let nonzero = a.matrix().iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 4); // two per spin block
        assert!(mode_lowering(&s, 1).is_err());
    }

    #[test]
    fn number_operator_diagonal() {
        let s = HilbertSpace::single_mode(4).unwrap();
        let a = Operator::lowering(&s, 0).unwrap();
        let n = &a.adjoint() * &a;
        for i in 0..s.dim() {
            let (_, occ) = s.label(i);
            assert!(close(n.matrix()[(i, i)].re, occ[0] as f64, 1e-14));
        }
        assert!(close(
            max_abs(&(n.matrix() - Operator::number(&s, 0).unwrap().matrix())),
            0.0,
            1e-14
        ));
    }

    #[test]
    fn canonical_commutator_fails_only_on_top_level() {
        let s = HilbertSpace::single_mode(5).unwrap();
        let a = Operator::lowering(&s, 0).unwrap();
        let c = a.commutator(&a.adjoint());
        let defect = c.matrix() - CMatrix::identity(s.dim(), s.dim());
        for i in 0..s.dim() {
            for j in 0..s.dim() {
                let (_, oi) = s.label(i);
                let expected = if i == j && oi[0] == 4 { -5.0 } else { 0.0 };
                assert!(close(defect[(i, j)].re, expected, 1e-13), "({i},{j})");
            }
        }
    }

    #[test]
    fn pauli_algebra() {
        let s = HilbertSpace::single_mode(2).unwrap();
        let sz = spin_operator(&s, SpinOp::Z);
        assert_eq!(sz.matrix()[(0, 0)], ONE);
        assert_eq!(sz.matrix()[(2, 2)], -ONE);
        let sp = spin_operator(&s, SpinOp::Plus);
        let sm = spin_operator(&s, SpinOp::Minus);
        let anti = &(&sp * &sm) + &(&sm * &sp);
        assert!(max_abs(&(anti.matrix() - CMatrix::identity(4, 4))) < 1e-15);
        let sx = spin_operator(&s, SpinOp::X);
        let sy = spin_operator(&s, SpinOp::Y);
        let lhs = sx.commutator(&sy);
        assert!(max_abs(&(lhs.matrix() - sz.matrix() * Complex64::new(0.0, 2.0))) < 1e-15);
        // σ_y = i(σ⁻ − σ⁺)
        let sy2 = (&sm - &sp).scale(I);
        assert!(max_abs(&(sy2.matrix() - sy.matrix())) < 1e-15);
    }

    #[test]
    fn different_factors_commute() {
        let s = HilbertSpace::two_mode(4, 3).unwrap();
        let ax = Operator::lowering(&s, 0).unwrap();
        let ay = Operator::raising(&s, 1).unwrap();
        let sx = Operator::spin(&s, SpinOp::X);
        assert!(ax.commutator(&ay).max_abs() <= 1e-12);
        assert!(ax.commutator(&sx).max_abs() <= 1e-12);
        assert!(ay.commutator(&sx).max_abs() <= 1e-12);
    }

    #[test]
    fn exponential_basics() {
        let s = HilbertSpace::single_mode(3).unwrap();
        let n = Operator::number(&s, 0).unwrap();
        let e0 = matrix_exponential(&n, ZERO).unwrap();
        assert!(max_abs(&(e0.matrix() - CMatrix::identity(6, 6))) < 1e-15);
        let parity = matrix_exponential(&n, I * std::f64::consts::PI).unwrap();
        for i in 0..s.dim() {
            let (_, occ) = s.label(i);
            let expected = if occ[0] % 2 == 0 { 1.0 } else { -1.0 };
            assert!((parity.matrix()[(i, i)] - Complex64::from(expected)).norm() < 1e-12);
        }
        let mut bad = n.clone().into_matrix();
        bad[(0, 0)] = Complex64::new(f64::NAN, 0.0);
        assert_eq!(expm(&bad), Err(Error::NonFinite));
    }

    #[test]
    fn fock_states() {
        let s = HilbertSpace::single_mode(4).unwrap();
        let up0 = fock_state(&s, Spin::Up, &[0]).unwrap();
        assert_eq!(
            up0.amplitudes().unwrap()[s.index(Spin::Up, &[0]).unwrap()],
            ONE
        );
        let up2 = fock_state(&s, Spin::Up, &[2]).unwrap();
        let n = Operator::number(&s, 0).unwrap();
        assert!(close(up2.expectation(&n).re, 2.0, 1e-15));
        let up1 = fock_state(&s, Spin::Up, &[1]).unwrap();
        assert_eq!(
            up1.amplitudes().unwrap().dotc(up2.amplitudes().unwrap()),
            ZERO
        );
        assert!(fock_state(&s, Spin::Up, &[4]).is_err());
    }

    #[test]
    fn thermal_distribution_values() {
        let (p, tail) = thermal_distribution(0.0, 5).unwrap();
        assert_eq!(p[0], 1.0);
        assert_eq!(tail, 0.0);
        // before renormalization p0 = 1/2.2, p1 = 1.2/2.2²
        let (p, tail) = thermal_distribution(1.2, 40).unwrap();
        let kept = 1.0 - tail;
        assert!(close(p[0] * kept, 1.0 / 2.2, 1e-12));
        assert!(close(p[0] * kept, 0.454_545_454_545, 1e-11));
        assert!(close(p[1] * kept, 0.247_933_884_297, 1e-11));
        assert!(thermal_distribution(-0.1, 5).is_err());
    }

    #[test]
    fn thermal_mean_within_one_percent() {
        for &nbar in &[0.3f64, 1.0, 1.2, 2.5] {
            let cutoff = (10.0 * (nbar + 1.0)).ceil() as usize;
            let s = HilbertSpace::single_mode(cutoff).unwrap();
            let m = thermal_state(&s, 0, nbar).unwrap();
            let st = product_state(&s, Spin::Up, &m).unwrap();
            let mean = st.mean_occupation(0).unwrap();
            assert!((mean - nbar).abs() <= 0.01 * nbar, "n̄={nbar} mean={mean}");
            let ev = hermitian_eigenvalues(&st.density_matrix());
            assert!(ev.iter().all(|&e| e >= -1e-15));
            assert!(close(ev.iter().sum::<f64>(), 1.0, 1e-12));
        }
        let s = HilbertSpace::single_mode(6).unwrap();
        let vac = thermal_state(&s, 0, 0.0).unwrap();
        assert_eq!(vac.density_matrix()[(0, 0)], ONE);
    }

    #[test]
    fn superposition_expectations() {
        let s = HilbertSpace::single_mode(3).unwrap();
        let vac = MotionalState::vacuum(&s);
        let a = spin_superposition(&s, ONE, ZERO, &vac).unwrap();
        assert_eq!(a, fock_state(&s, Spin::Up, &[0]).unwrap());

        let h = std::f64::consts::FRAC_1_SQRT_2;
        for &phi in &[0.0, 0.4, std::f64::consts::FRAC_PI_2, 2.0] {
            let st =
                spin_superposition(&s, Complex64::from(h), Complex64::from_polar(h, phi), &vac)
                    .unwrap();
            let sz = st.expectation(&Operator::spin(&s, SpinOp::Z)).re;
            let sx = st.expectation(&Operator::spin(&s, SpinOp::X)).re;
            let sy = st.expectation(&Operator::spin(&s, SpinOp::Y)).re;
            assert!(sz.abs() < 1e-15);
            assert!(close(sx, phi.cos(), 1e-14));
            // with σ_y = i(σ⁻ − σ⁺) and σ⁺ = |↑⟩⟨↓| the Bloch y component is +sin φ
            assert!(close(sy, phi.sin(), 1e-14));
        }
        assert!(spin_superposition(&s, ONE, ONE, &vac).is_err());
        let other = HilbertSpace::single_mode(4).unwrap();
        assert_eq!(
            spin_superposition(&other, ONE, ZERO, &vac),
            Err(Error::SpaceMismatch)
        );
    }

    #[test]
    fn mixed_state_validation() {
        let s = HilbertSpace::single_mode(2).unwrap();
        let mut rho = CMatrix::zeros(4, 4);
        rho[(0, 0)] = Complex64::from(1.2);
        rho[(1, 1)] = Complex64::from(-0.2);
        assert!(QuantumState::mixed(&s, rho).is_err());
        let st = fock_state(&s, Spin::Down, &[1]).unwrap().to_mixed();
        assert!(st.validate().is_ok());
        assert!(close(st.purity(), 1.0, 1e-15));
        assert!(close(st.spin_up_probability(), 0.0, 1e-15));
        assert_eq!(st.tail_populations(), vec![1.0]);
    }

    #[test]
    fn safe_indices_exclude_top_levels() {
        let s = HilbertSpace::two_mode(5, 4).unwrap();
        let idx = s.safe_indices(2);
        assert_eq!(idx.len(), 2 * 3 * 2);
        for i in idx {
            let (_, occ) = s.label(i);
            assert!(occ[0] < 3 && occ[1] < 2);
        }
    }

    fn random_hermitian(d: usize, seed: &[f64]) -> CMatrix {
        let mut m = CMatrix::zeros(d, d);
        let mut k = 0;
        for i in 0..d {
            for j in i..d {
                let re = seed[k % seed.len()] * ((i * 31 + j * 17) as f64).sin();
                let im = if i == j {
                    0.0
                } else {
                    seed[(k + 1) % seed.len()] * ((i * 7 + j * 13) as f64).cos()
                };
                m[(i, j)] = Complex64::new(re, im);
                m[(j, i)] = Complex64::new(re, -im);
                k += 1;
            }
        }
        m
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn exponential_of_anti_hermitian_is_unitary(
            seed in proptest::collection::vec(-1.0f64..1.0, 8),
            t in 0.01f64..50.0,
        ) {
            let h = random_hermitian(40, &seed);
            let u = expm(&(h * Complex64::new(0.0, -t))).unwrap();
            let defect = max_abs(&(u.adjoint() * &u - CMatrix::identity(40, 40)));
            prop_assert!(defect <= 1e-9, "defect {defect}");
        }

        #[test]
        fn thermal_states_are_valid(nbar in 0.0f64..5.0, cutoff in 2usize..40) {
            let s = HilbertSpace::single_mode(cutoff).unwrap();
            let m = thermal_state(&s, 0, nbar).unwrap();
            let st = product_state(&s, Spin::Down, &m).unwrap();
            prop_assert!(st.validate().is_ok());
            let ev = hermitian_eigenvalues(&st.density_matrix());
            prop_assert!(ev.iter().all(|&e| e >= 0.0 - 1e-15));
            prop_assert!((ev.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(m.truncated_mass() >= 0.0 && m.truncated_mass() < 1.0);
        }
    }
}
