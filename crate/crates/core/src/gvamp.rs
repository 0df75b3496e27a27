//! GVAMP decoder for sparse superposition codes.
//!
//! The decoder alternates four blocks per iteration: the section-wise
//! denoiser on `x`, the channel denoiser on `z = Ax`, and the joint LMMSE
//! step for `x` and `z`, exchanging extrinsic means and precisions between
//! them. Precisions (`gamma`, `tau`) are inverse variances throughout; the
//! section denoiser is evaluated at variance `1/gamma1`.

use crate::channels::Channel;
use crate::code::{mse_per_section, section_error_rate, CodeParams, Message, SectionBeliefs};
use crate::ensembles::FactoredMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecoderConfig {
    pub max_iter: usize,
    /// Geometric damping of the precisions, 1 = undamped.
    pub damping: f64,
    /// Divergences are clamped to `[divergence_clamp, 1 - divergence_clamp]`.
    pub divergence_clamp: f64,
    pub min_precision: f64,
    pub max_precision: f64,
    /// Stop once `‖x̂₁ − x̂₁_prev‖² / N` falls below this.
    pub tol: f64,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        Self {
            max_iter: 200,
            damping: 1.0,
            divergence_clamp: 1e-11,
            min_precision: 1e-11,
            max_precision: 1e11,
            tol: 1e-12,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iter >= 1
            && self.damping > 0.0
            && self.damping <= 1.0
            && self.divergence_clamp > 0.0
            && self.divergence_clamp < 0.5
            && self.min_precision > 0.0
            && self.max_precision > self.min_precision
            && self.tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid decoder config {self:?}")))
        }
    }

    fn clamp_div(&self, a: f64) -> f64 {
        a.clamp(self.divergence_clamp, 1.0 - self.divergence_clamp)
    }

    fn clamp_prec(&self, g: f64) -> f64 {
        g.clamp(self.min_precision, self.max_precision)
    }

    fn damp(&self, old: f64, new: f64) -> f64 {
        if self.damping == 1.0 {
            return self.clamp_prec(new);
        }
        let mixed = (self.damping * new.ln() + (1.0 - self.damping) * old.ln()).exp();
        self.clamp_prec(mixed)
    }
}

/// Starting point of the iteration. `None` means a zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderInit {
    pub r1: Option<Vec<f64>>,
    pub p1: Option<Vec<f64>>,
    pub gamma1: f64,
    pub tau1: f64,
}

impl Default for DecoderInit {
    fn default() -> Self {
        Self { r1: None, p1: None, gamma1: 1.0, tau1: 1.0 }
    }
}

/// All iterates of one GVAMP run.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderState {
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub gamma1: f64,
    pub gamma2: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Current section estimate x̂₁.
    pub xhat1: Vec<f64>,
    pub k: usize,
}

#[derive(Debug, Clone)]
pub struct DecodeResult {
    pub beliefs: SectionBeliefs,
    /// MSE per section after every iteration, when the truth was supplied.
    pub mse_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub ser: Option<f64>,
    pub mse: Option<f64>,
    pub state: DecoderState,
}

/// Section-wise softmax of `r / v`.
///
/// Returns the beliefs and the average derivative `N⁻¹ Σ g_i (1 − g_i) / v`
/// (unclamped).
pub fn g_x1(r: &[f64], b: usize, v: f64) -> (SectionBeliefs, f64) {
    let mut probs = vec![0.0; r.len()];
    let mut acc = 0.0;
    for (block, out) in r.chunks(b).zip(probs.chunks_mut(b)) {
        let top = block.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for (o, &ri) in out.iter_mut().zip(block) {
            *o = ((ri - top) / v).exp();
            z += *o;
        }
        for o in out.iter_mut() {
            *o /= z;
            acc += *o * (1.0 - *o);
        }
    }
    let avg = acc / (r.len() as f64 * v);
    (SectionBeliefs::from_raw(b, probs), avg)
}

/// Posterior means of `z` under the channel and `N(p, 1/tau)`.
///
/// Returns the means and the average normalized variance `M⁻¹ Σ τ var_μ`
/// (unclamped).
pub fn g_z1(ch: &Channel, y: &[f64], p: &[f64], tau: f64) -> Result<(Vec<f64>, f64)> {
    if y.len() != p.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("length {}", y.len()),
            got: format!("length {}", p.len()),
        });
    }
    let mut zhat = Vec::with_capacity(p.len());
    let mut acc = 0.0;
    for (mu, (&yi, &pi)) in y.iter().zip(p).enumerate() {
        let (m, v) = ch.posterior_z_moments(yi, pi, tau).map_err(|e| match e {
            Error::ZeroEvidence { y, .. } => Error::ZeroEvidence { index: mu, y },
            other => other,
        })?;
        zhat.push(m);
        acc += tau * v;
    }
    Ok((zhat, acc / p.len() as f64))
}

/// Output of the LMMSE block.
#[derive(Debug, Clone)]
pub struct Lmmse {
    pub xhat: Vec<f64>,
    pub zhat: Vec<f64>,
    /// `γ N⁻¹ tr K⁻¹`
    pub alpha: f64,
    /// `τ M⁻¹ tr A K⁻¹ Aᵀ`
    pub beta: f64,
}

/// `K⁻¹(τ Aᵀp + γ r)` with `K = τ AᵀA + γ I`, and `A` applied to it.
pub fn lmmse(a: &FactoredMatrix, r: &[f64], p: &[f64], gamma: f64, tau: f64) -> Result<Lmmse> {
    if r.len() != a.n() || p.len() != a.m() {
        return Err(Error::ShapeMismatch {
            expected: format!("r of length {}, p of length {}", a.n(), a.m()),
            got: format!("r of length {}, p of length {}", r.len(), p.len()),
        });
    }
    let sigma = a.sigma();
    let c = a.u().apply_t(p);
    let proj = a.v().apply_t(r);
    let d: Vec<f64> = sigma.iter().map(|s| 1.0 / (tau * s * s + gamma)).collect();
    // Coefficients of K⁻¹w on the column space of V: d ⊙ (τσ ⊙ c + γ Vᵀr).
    let w: Vec<f64> = (0..sigma.len()).map(|i| d[i] * (tau * sigma[i] * c[i] + gamma * proj[i])).collect();
    // Outside the column space K⁻¹ acts as 1/γ, which leaves r unchanged.
    let delta: Vec<f64> = w.iter().zip(&proj).map(|(w, q)| w - q).collect();
    let back = a.v().apply(&delta);
    let xhat: Vec<f64> = r.iter().zip(&back).map(|(r, b)| r + b).collect();
    let zc: Vec<f64> = w.iter().zip(sigma).map(|(w, s)| w * s).collect();
    let zhat = a.u().apply(&zc);

    let (n, m) = (a.n() as f64, a.m() as f64);
    let null = (a.n() - sigma.len()) as f64;
    let alpha = gamma * (d.iter().sum::<f64>() + null / gamma) / n;
    let beta = tau * sigma.iter().zip(&d).map(|(s, d)| s * s * d).sum::<f64>() / m;
    Ok(Lmmse { xhat, zhat, alpha, beta })
}

fn extrinsic(post: &[f64], prior: &[f64], div: f64) -> Vec<f64> {
    post.iter().zip(prior).map(|(x, r)| (x - div * r) / (1.0 - div)).collect()
}

fn check_finite(v: &[f64], scalars: &[f64], k: usize, block: &'static str) -> Result<()> {
    if v.iter().chain(scalars).all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { iteration: k, block })
    }
}

/// Stepwise GVAMP iteration over one code instance.
pub struct Decoder<'a> {
    a: &'a FactoredMatrix,
    y: &'a [f64],
    ch: &'a Channel,
    b: usize,
    config: DecoderConfig,
    state: DecoderState,
    beliefs: SectionBeliefs,
}

impl<'a> Decoder<'a> {
    pub fn new(
        params: &CodeParams,
        a: &'a FactoredMatrix,
        y: &'a [f64],
        ch: &'a Channel,
        config: &DecoderConfig,
        init: &DecoderInit,
    ) -> Result<Self> {
        config.validate()?;
        if a.m() != params.m || a.n() != params.n || y.len() != params.m {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{} matrix and {} outputs", params.m, params.n, params.m),
                got: format!("{}x{} matrix and {} outputs", a.m(), a.n(), y.len()),
            });
        }
        let r1 = init.r1.clone().unwrap_or_else(|| vec![0.0; params.n]);
        let p1 = init.p1.clone().unwrap_or_else(|| vec![0.0; params.m]);
        if r1.len() != params.n || p1.len() != params.m {
            return Err(Error::ShapeMismatch {
                expected: format!("r1 of length {}, p1 of length {}", params.n, params.m),
                got: format!("r1 of length {}, p1 of length {}", r1.len(), p1.len()),
            });
        }
        let state = DecoderState {
            r1,
            r2: vec![0.0; params.n],
            p1,
            p2: vec![0.0; params.m],
            gamma1: config.clamp_prec(init.gamma1),
            gamma2: 1.0,
            tau1: config.clamp_prec(init.tau1),
            tau2: 1.0,
            alpha1: 0.5,
            alpha2: 0.5,
            beta1: 0.5,
            beta2: 0.5,
            xhat1: vec![1.0 / params.b as f64; params.n],
            k: 0,
        };
        Ok(Self {
            a,
            y,
            ch,
            b: params.b,
            config: config.clone(),
            state,
            beliefs: SectionBeliefs::uniform(params.l, params.b),
        })
    }

    pub fn state(&self) -> &DecoderState {
        &self.state
    }

    pub fn beliefs(&self) -> &SectionBeliefs {
        &self.beliefs
    }

    /// One full iteration; returns `‖x̂₁ − x̂₁_prev‖² / N`.
    pub fn step(&mut self) -> Result<f64> {
        let cfg = &self.config;
        let s = &mut self.state;
        let k = s.k;

        // Section denoiser.
        let (beliefs, div) = g_x1(&s.r1, self.b, 1.0 / s.gamma1);
        s.alpha1 = cfg.clamp_div(div);
        let change = beliefs.probs.iter().zip(&s.xhat1).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
            / beliefs.probs.len() as f64;
        s.r2 = extrinsic(&beliefs.probs, &s.r1, s.alpha1);
        s.gamma2 = cfg.damp(s.gamma2, s.gamma1 * (1.0 - s.alpha1) / s.alpha1);
        s.xhat1.clone_from(&beliefs.probs);
        self.beliefs = beliefs;
        check_finite(&s.r2, &[s.gamma2], k, "section denoiser")?;

        // Channel denoiser.
        let (zhat1, div) = g_z1(self.ch, self.y, &s.p1, s.tau1)?;
        s.beta1 = cfg.clamp_div(div);
        s.p2 = extrinsic(&zhat1, &s.p1, s.beta1);
        s.tau2 = cfg.damp(s.tau2, s.tau1 * (1.0 - s.beta1) / s.beta1);
        check_finite(&s.p2, &[s.tau2], k, "channel denoiser")?;

        // LMMSE on x and z.
        let lm = lmmse(self.a, &s.r2, &s.p2, s.gamma2, s.tau2)?;
        s.alpha2 = cfg.clamp_div(lm.alpha);
        s.beta2 = cfg.clamp_div(lm.beta);
        s.r1 = extrinsic(&lm.xhat, &s.r2, s.alpha2);
        s.gamma1 = cfg.damp(s.gamma1, s.gamma2 * (1.0 - s.alpha2) / s.alpha2);
        check_finite(&s.r1, &[s.gamma1], k, "lmmse x")?;
        s.p1 = extrinsic(&lm.zhat, &s.p2, s.beta2);
        s.tau1 = cfg.damp(s.tau1, s.tau2 * (1.0 - s.beta2) / s.beta2);
        check_finite(&s.p1, &[s.tau1], k, "lmmse z")?;

        s.k += 1;
        Ok(change)
    }
}

/// Runs GVAMP to convergence or `max_iter`.
///
/// After perfect decoding the section denoiser saturates, its divergence
/// hits the clamp and the clamped precisions cycle; the estimate only moves
/// at round-off level on alternate sweeps, so the first sweep below `tol`
/// ends the run.
pub fn decode(
    params: &CodeParams,
    a: &FactoredMatrix,
    y: &[f64],
    ch: &Channel,
    config: &DecoderConfig,
    init: &DecoderInit,
    truth: Option<&Message>,
) -> Result<DecodeResult> {
    let mut dec = Decoder::new(params, a, y, ch, config, init)?;
    let mut mse_trace = Vec::new();
    let mut converged = false;
    while dec.state.k < config.max_iter {
        let change = dec.step()?;
        if let Some(t) = truth {
            mse_trace.push(mse_per_section(t, &dec.beliefs)?);
        }
        // The first sweep compares against the uniform start, not a previous estimate.
        if dec.state.k > 1 && change < config.tol {
            converged = true;
            break;
        }
    }
    let (mse, ser) = match truth {
        Some(t) => (Some(mse_per_section(t, &dec.beliefs)?), Some(section_error_rate(t, &dec.beliefs)?)),
        None => (None, None),
    };
    Ok(DecodeResult {
        beliefs: dec.beliefs,
        mse_trace,
        iterations: dec.state.k,
        converged,
        ser,
        mse,
        state: dec.state,
    })
}
