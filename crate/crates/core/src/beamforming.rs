//! Closed-form beamformer constructions: MRC combining, MRT, the
//! rate-optimal subspace beamformer under a sensing-SNR constraint, and the
//! power-split family used for multi-slot scheduling.
//!
//! Weight vectors here pair with channels through the Hermitian form
//! `|hᴴ w|²`. The protocol metrics in [`crate::protocol`] use the bilinear
//! form `|hᵀ v|²` on the transmit side, so callers working with cascaded
//! channel vectors pass their conjugates (`|hᵀ w|² = |conj(h)ᴴ w|²`); the
//! receive combiner needs no bridging.

use num_complex::Complex64;
use thiserror::Error;

use crate::cvec::ComplexVector;

#[derive(Debug, Error, PartialEq)]
pub enum BeamformingError {
    #[error("zero channel vector")]
    ZeroChannel,
    #[error("infeasible sensing constraint: even full power on the sensing direction falls short")]
    InfeasibleSensing,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Unit-norm combiner maximizing the collected echo power: `f_s/‖f_s‖`, so
/// `|w_rᴴ f_s|² = ‖f_s‖²`.
pub fn mrc_combiner(f_s: &ComplexVector) -> Result<ComplexVector, BeamformingError> {
    if f_s.norm() == 0.0 {
        return Err(BeamformingError::ZeroChannel);
    }
    Ok(f_s.normalized().expect("nonzero norm"))
}

/// Maximum-ratio transmission at total power `p`: `√p·h/‖h‖`.
pub fn mrt(h: &ComplexVector, p: f64) -> Result<ComplexVector, BeamformingError> {
    if h.norm() == 0.0 {
        return Err(BeamformingError::ZeroChannel);
    }
    Ok(h.normalized().expect("nonzero norm").scaled(Complex64::new(p.sqrt(), 0.0)))
}

/// Which branch of the constrained beamformer applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamformerBranch {
    /// Sensing constraint inactive; pure MRT.
    Mrt,
    /// Sensing constraint met with equality inside span{ĥ_s, ĥ_{c⊥s}}.
    Constrained,
}

/// Transmit beamformer maximizing the communication SNR subject to a
/// sensing-SNR floor.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBeamformer {
    /// Transmit weights carrying the full power: `‖w‖² = p`.
    pub w: ComplexVector,
    pub branch: BeamformerBranch,
    /// Power threshold above which MRT alone satisfies the constraint.
    pub gamma_p: f64,
    /// Coefficient on the normalized sensing direction (constrained branch).
    pub c1: Complex64,
    /// Coefficient on the sensing-orthogonal communication direction.
    pub c2: Complex64,
}

const PARALLEL_TOL: f64 = 1e-9;

/// Solves `max |h_cᴴ w|²` subject to `α‖f_s‖²|h_sᴴ w|²/σ_s² ≥ Γ_sen` and
/// `‖w‖² = p`.
///
/// When MRT already meets the floor (`p > Γ_P`), it is optimal. Otherwise
/// the optimum lies in the span of the normalized sensing direction `ĥ_s`
/// and the component of `h_c` orthogonal to it, with the sensing constraint
/// active.
pub fn subspace_beamformer(
    h_c: &ComplexVector,
    h_s: &ComplexVector,
    f_s: &ComplexVector,
    p: f64,
    gamma_sen: f64,
    alpha: f64,
    sigma_s_sq: f64,
) -> Result<SubspaceBeamformer, BeamformingError> {
    if !(p > 0.0) || !(alpha > 0.0) || !(sigma_s_sq > 0.0) || gamma_sen < 0.0 {
        return Err(BeamformingError::InvalidArgument(
            "power, alpha, and noise must be positive; gamma_sen nonnegative".into(),
        ));
    }
    let hc_norm_sq = h_c.norm_sq();
    let hs_norm_sq = h_s.norm_sq();
    let fs_norm_sq = f_s.norm_sq();
    if hc_norm_sq == 0.0 || hs_norm_sq == 0.0 || fs_norm_sq == 0.0 {
        return Err(BeamformingError::ZeroChannel);
    }

    let cross = h_s.dot_h(h_c); // h_sᴴ h_c
    let gamma_p = if gamma_sen == 0.0 {
        0.0
    } else {
        gamma_sen * hc_norm_sq * sigma_s_sq / (alpha * fs_norm_sq * cross.norm_sqr())
    };

    if p > gamma_p {
        return Ok(SubspaceBeamformer {
            w: mrt(h_c, p)?,
            branch: BeamformerBranch::Mrt,
            gamma_p,
            c1: Complex64::new(0.0, 0.0),
            c2: Complex64::new(0.0, 0.0),
        });
    }

    // Full power on the sensing direction is the most the constraint can get.
    let sensing_budget = gamma_sen * sigma_s_sq / (alpha * fs_norm_sq * hs_norm_sq);
    if p < sensing_budget {
        return Err(BeamformingError::InfeasibleSensing);
    }

    let h_s_hat = h_s.normalized().expect("nonzero");
    let proj = h_s_hat.dot_h(h_c); // ĥ_sᴴ h_c
    let residual = h_c.axpy(-proj, &h_s_hat); // h_c − (ĥ_sᴴ h_c) ĥ_s
    let residual_norm = residual.norm();

    let alignment = proj.norm() / hc_norm_sq.sqrt();
    if alignment > 1.0 - PARALLEL_TOL || residual_norm < PARALLEL_TOL * hc_norm_sq.sqrt() {
        // Degenerate subspace: the sensing direction is the communication
        // direction; MRT was already rejected, so spend everything on ĥ_s.
        let w = mrt(h_s, p)?;
        return Ok(SubspaceBeamformer {
            w,
            branch: BeamformerBranch::Constrained,
            gamma_p,
            c1: Complex64::new(p.sqrt(), 0.0),
            c2: Complex64::new(0.0, 0.0),
        });
    }
    let h_perp_hat = residual.scaled(Complex64::new(1.0 / residual_norm, 0.0));

    let phase_of = |z: Complex64| {
        if z.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            z / z.norm()
        }
    };
    // The constrained optimum puts exactly the sensing budget on ĥ_s and the
    // rest on the orthogonal communication component, phases matched to h_c.
    let c1 = phase_of(proj) * sensing_budget.sqrt();
    let perp_gain = h_perp_hat.dot_h(h_c); // real and positive by construction
    let c2 = phase_of(perp_gain) * (p - sensing_budget).sqrt();

    let w = h_s_hat.scaled(c1).axpy(c2, &h_perp_hat);
    Ok(SubspaceBeamformer { w, branch: BeamformerBranch::Constrained, gamma_p, c1, c2 })
}

/// Power-split beamformer family for multi-slot scheduling:
/// `w(ε) = √((1−ε)·p)·ĥ_c + √(ε·p)·ĥ_{s⊥c}` with `ε ∈ [0, 1]`.
///
/// `ĥ_{s⊥c}` is the Gram–Schmidt orthonormalization of `h_s` against the
/// normalized `ĥ_c`. `ε = 0` reduces to MRT; larger ε trades communication
/// gain for sensing gain. For parallel channels the orthogonal component is
/// empty and the ε share of the power is simply not radiated.
pub fn epsilon_beamformer(
    h_c: &ComplexVector,
    h_s: &ComplexVector,
    p_k: f64,
    eps: f64,
) -> Result<ComplexVector, BeamformingError> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(BeamformingError::InvalidArgument(format!("eps = {eps} outside [0, 1]")));
    }
    if !(p_k > 0.0) {
        return Err(BeamformingError::InvalidArgument("power must be positive".into()));
    }
    if h_c.norm() == 0.0 || h_s.norm() == 0.0 {
        return Err(BeamformingError::ZeroChannel);
    }
    let h_c_hat = h_c.normalized().expect("nonzero");
    let proj = h_c_hat.dot_h(h_s);
    let residual = h_s.axpy(-proj, &h_c_hat);
    let com = h_c_hat.scaled(Complex64::new(((1.0 - eps) * p_k).sqrt(), 0.0));
    if residual.norm() < PARALLEL_TOL * h_s.norm() {
        return Ok(com);
    }
    let orth = residual.normalized().expect("nonzero residual");
    Ok(com.axpy(Complex64::new((eps * p_k).sqrt(), 0.0), &orth))
}
