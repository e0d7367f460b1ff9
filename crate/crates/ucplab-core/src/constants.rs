//! Explicit constants of the quantitative unique continuation chain.
//!
//! Every function is a pure evaluation over [`ModelParams`], [`AnnuliRadii`]
//! and [`CalibrationConstants`]. Quantities that overflow `f64` are carried
//! as natural logarithms in [`LogValue`]; instantiate with [`crate::Wide`] to
//! evaluate them for realistic parameters.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Scalar model data entering every constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<S> {
    pub d: usize,
    pub theta_e: S,
    pub theta_l: S,
    pub norm_v: S,
    pub norm_b: S,
    pub norm_c: S,
    /// Period cell size.
    pub g: S,
}

impl<S: Real> ModelParams<S> {
    pub fn new(d: usize, theta_e: S, theta_l: S) -> Result<Self> {
        let p = ModelParams {
            d,
            theta_e,
            theta_l,
            norm_v: S::zero(),
            norm_b: S::zero(),
            norm_c: S::zero(),
            g: S::one(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_norms(mut self, v: S, b: S, c: S) -> Result<Self> {
        self.norm_v = v;
        self.norm_b = b;
        self.norm_c = c;
        self.validate()?;
        Ok(self)
    }

    pub fn with_cell(mut self, g: S) -> Result<Self> {
        self.g = g;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParams(what.to_string()));
        if self.d == 0 {
            return bad("d must be at least 1");
        }
        if !(self.theta_e >= S::one()) || !self.theta_e.is_finite() {
            return bad("thetaE must be finite and >= 1");
        }
        if !(self.theta_l >= S::zero()) || !self.theta_l.is_finite() {
            return bad("thetaL must be finite and >= 0");
        }
        for (name, v) in [("normV", self.norm_v), ("normB", self.norm_b), ("normC", self.norm_c)] {
            if !(v >= S::zero()) || !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite and >= 0")));
            }
        }
        if !(self.g > S::zero()) || !self.g.is_finite() {
            return bad("G must be finite and > 0");
        }
        Ok(())
    }

    /// Same data in another scalar type.
    pub fn cast<T: Real>(&self) -> ModelParams<T> {
        let c = |x: S| T::lit(x.as_f64());
        ModelParams {
            d: self.d,
            theta_e: c(self.theta_e),
            theta_l: c(self.theta_l),
            norm_v: c(self.norm_v),
            norm_b: c(self.norm_b),
            norm_c: c(self.norm_c),
            g: c(self.g),
        }
    }

    /// Pull back to unit cells: `x -> x/G` scales the Lipschitz constant by
    /// `G`, first order terms by `G` and potentials by `G^2`.
    pub fn unit_cell(&self) -> ModelParams<S> {
        let g = self.g;
        ModelParams {
            theta_l: self.theta_l * g,
            norm_v: self.norm_v * g * g,
            norm_b: self.norm_b * g,
            norm_c: self.norm_c * g * g,
            g: S::one(),
            ..*self
        }
    }

    fn dim(&self) -> S {
        S::from_count(self.d)
    }
}

/// Radii `0 < r1 < R1 <= r2 < R2 <= r3 < R3` and the Carleman slack `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnuliRadii<S> {
    pub r1: S,
    pub big_r1: S,
    pub r2: S,
    pub big_r2: S,
    pub r3: S,
    pub big_r3: S,
    pub eps: S,
}

impl<S: Real> AnnuliRadii<S> {
    pub fn new(r: [S; 6], eps: S) -> Result<Self> {
        let radii = AnnuliRadii { r1: r[0], big_r1: r[1], r2: r[2], big_r2: r[3], r3: r[4], big_r3: r[5], eps };
        radii.validate()?;
        Ok(radii)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.r1 > S::zero()
            && self.r1 < self.big_r1
            && self.big_r1 <= self.r2
            && self.r2 < self.big_r2
            && self.big_r2 <= self.r3
            && self.r3 < self.big_r3
            && self.big_r3.is_finite();
        if !ok {
            return Err(Error::InvalidRadii(format!("{:?}", self.as_array())));
        }
        if !(self.eps > S::zero()) {
            return Err(Error::InvalidRadii("eps must be > 0".into()));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [S; 6] {
        [self.r1, self.big_r1, self.r2, self.big_r2, self.r3, self.big_r3]
    }

    /// Multiplies all six radii by `s`.
    pub fn scaled(&self, s: S) -> Result<Self> {
        let r = self.as_array().map(|x| x * s);
        AnnuliRadii::new(r, self.eps)
    }

    pub fn cast<T: Real>(&self) -> AnnuliRadii<T> {
        let c = |x: S| T::lit(x.as_f64());
        AnnuliRadii {
            r1: c(self.r1),
            big_r1: c(self.big_r1),
            r2: c(self.r2),
            big_r2: c(self.big_r2),
            r3: c(self.r3),
            big_r3: c(self.big_r3),
            eps: c(self.eps),
        }
    }
}

/// Dimension-only constants that are not given numerically: the cutoff
/// derivative bound and the Cacciopoli constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationConstants<S> {
    pub cutoff_theta: S,
    pub cacciopoli_c_prime: S,
}

impl<S: Real> Default for CalibrationConstants<S> {
    fn default() -> Self {
        CalibrationConstants { cutoff_theta: S::lit(32.0), cacciopoli_c_prime: S::one() }
    }
}

impl<S: Real> CalibrationConstants<S> {
    pub fn new(cutoff_theta: S, cacciopoli_c_prime: S) -> Result<Self> {
        if !(cutoff_theta > S::zero()) || !(cacciopoli_c_prime >= S::one()) {
            return Err(Error::InvalidParams("calibration needs theta > 0 and cprime >= 1".into()));
        }
        Ok(CalibrationConstants { cutoff_theta, cacciopoli_c_prime })
    }

    pub fn cast<T: Real>(&self) -> CalibrationConstants<T> {
        CalibrationConstants {
            cutoff_theta: T::lit(self.cutoff_theta.as_f64()),
            cacciopoli_c_prime: T::lit(self.cacciopoli_c_prime.as_f64()),
        }
    }
}

/// A positive quantity stored through its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue<S> {
    pub ln: S,
}

impl<S: Real> LogValue<S> {
    pub fn from_ln(ln: S) -> Self {
        LogValue { ln }
    }

    pub fn from_value(v: S) -> Self {
        LogValue { ln: v.ln() }
    }

    /// Linear value; may under- or overflow `S`.
    pub fn value(&self) -> S {
        self.ln.exp()
    }

    pub fn log10(&self) -> S {
        self.ln / S::lit(std::f64::consts::LN_10)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeAnnuliConstants<S> {
    pub d1: S,
    pub d2: S,
    pub d3: S,
    pub alpha_star: S,
    pub mu: S,
    pub mu1: S,
    /// Carleman constant `C` used inside the `D_i`.
    pub carleman_c: S,
    pub alpha0: S,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConstants<S> {
    pub gamma: S,
    pub c1: LogValue<S>,
    /// Exponent used in the chaining constant; for a single radii set this is `gamma`.
    pub gamma2: S,
    pub c2: LogValue<S>,
    pub m: u64,
    /// Covering number `N`, possibly huge.
    pub n: S,
    pub big_m: S,
    /// Chain margin `(R2 + 3 r2)/4`.
    pub a: S,
}

/// Radii schemes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadiiScheme<S> {
    /// Constant coefficient scheme with inner radius set by `delta`.
    Laplacian(S),
    /// Variable coefficient scheme, inner annulus of size `delta`.
    InterpDelta(S),
    /// Variable coefficient scheme used for chaining.
    ChainFixed,
}

fn c<S: Real>(x: f64) -> S {
    S::lit(x)
}

fn theta_pow_11_2<S: Real>(theta_e: S) -> S {
    theta_e.powi(5) * theta_e.sqrt()
}

/// Largest admissible sensing radius.
pub fn delta0<S: Real>(p: &ModelParams<S>) -> S {
    let e = S::e();
    let te = p.theta_e;
    let denom = c::<S>(330.0)
        * p.dim()
        * e
        * e
        * theta_pow_11_2(te)
        * (te + S::one()).powi(2)
        * (te + S::one()).sqrt()
        * (p.g * p.theta_l + S::one());
    p.g / denom
}

/// `(mu, mu1)` for outer radius `R3` and slack `eps`.
pub fn mu_pair<S: Real>(big_r3: S, eps: S, p: &ModelParams<S>) -> (S, S) {
    let mu = c::<S>(33.0) * p.dim() * big_r3 * theta_pow_11_2(p.theta_e) * p.theta_l + eps;
    let x = mu * p.theta_e.sqrt();
    let mu1 = if x <= S::one() { x.exp() } else { S::e() * x };
    (mu, mu1)
}

/// Cacciopoli factor `F_kappa`.
pub fn cacciopoli_f<S: Real>(kappa: S, p: &ModelParams<S>, cal: &CalibrationConstants<S>) -> Result<S> {
    if !(kappa > S::zero()) {
        return Err(Error::Domain(format!("kappa = {kappa} must be > 0")));
    }
    let two = c::<S>(2.0);
    Ok(S::one()
        + two * p.norm_v * p.norm_v
        + two * p.norm_b * p.norm_b
        + two * p.norm_c
        + c::<S>(8.0) * p.theta_e * p.theta_e * cal.cacciopoli_c_prime / (kappa * kappa))
}

/// Carleman constants with their bounds for vanishing first and zeroth order terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CarlemanConstants<S> {
    pub c_tilde: S,
    pub alpha0_tilde: S,
    /// General case constant, `6 * c_tilde`.
    pub c: S,
    pub alpha0: S,
}

/// Upper bounds for the Carleman constants at scale `rho`.
pub fn carleman_constants<S: Real>(rho: S, mu: S, mu1: S, p: &ModelParams<S>) -> Result<CarlemanConstants<S>> {
    let d = p.dim();
    let te = p.theta_e;
    let c_mu = mu - c::<S>(33.0) * d * theta_pow_11_2(te) * p.theta_l * rho;
    if !(c_mu > S::zero()) {
        return Err(Error::MuTooSmall { c_mu: c_mu.as_f64() });
    }
    let sq = mu * te.sqrt();
    let c_tilde = c::<S>(2.0)
        * d
        * d
        * te.powi(8)
        * (c::<S>(4.0) * sq).exp()
        * mu1.powi(4)
        * (c::<S>(3.0) * mu * mu + (c::<S>(9.0) * rho * p.theta_l + c::<S>(3.0)) * mu + S::one())
        / c_mu;
    let lin = c::<S>(3.0) * rho * p.theta_l + mu + S::one();
    let alpha0_tilde = c::<S>(11.0)
        * d.powi(4)
        * te.powi(16)
        * te.sqrt()
        * (c::<S>(6.0) * sq).exp()
        * mu1.powi(6)
        * lin
        * lin
        * (S::one() + mu * (mu + S::one()) / c_mu);
    let cc = c::<S>(6.0) * c_tilde;
    let from_b = cc * rho * rho * p.norm_b * p.norm_b * te * te.sqrt();
    let from_c = cc.cbrt() * (rho.powi(4)).cbrt() * (p.norm_c * p.norm_c).cbrt() * te.sqrt();
    let alpha0 = alpha0_tilde.max(from_b).max(from_c);
    Ok(CarlemanConstants { c_tilde, alpha0_tilde, c: cc, alpha0 })
}

/// `D1, D2, D3` and `alpha*` of the three annuli inequality.
pub fn three_annuli_constants<S: Real>(
    radii: &AnnuliRadii<S>,
    p: &ModelParams<S>,
    cal: &CalibrationConstants<S>,
) -> Result<ThreeAnnuliConstants<S>> {
    radii.validate()?;
    let rho = radii.big_r3;
    let (mu, mu1) = mu_pair(rho, radii.eps, p);
    let carl = carleman_constants(rho, mu, mu1, p)?;
    let cc = carl.c;
    let te = p.theta_e;
    let d = p.dim();
    let four = c::<S>(4.0);

    let alpha1 = (c::<S>(16.0) * rho.powi(4) * cc * p.norm_v * p.norm_v * te * te.sqrt()).cbrt();
    let alpha_star = carl.alpha0.max(alpha1).max(S::one());

    let w1 = radii.big_r1 - radii.r1;
    let w3 = radii.big_r3 - radii.r3;
    let r1p = radii.r1 + w1 / four;
    let r3p = radii.r3 + w3 / four;
    let th1 = cal.cutoff_theta / (w1 * w1);
    let th3 = cal.cutoff_theta / (w3 * w3);
    let pref = c::<S>(24.0 / 5.0) * rho * cc / te.sqrt() / (mu1 * mu1) * radii.big_r2;
    let lip = p.theta_l * d * d + p.norm_b;
    let bracket = |rp: S, kappa: S| -> Result<S> {
        Ok(c::<S>(3.0) * te * te
            + c::<S>(12.0) * te * te * d * d / (rp * rp)
            + c::<S>(3.0) * lip * lip
            + four * te * cacciopoli_f(kappa, p, cal)?)
    };
    let d1 = pref * r1p * r1p * th1 * th1 * bracket(r1p, w1 / four)?;
    let d2 = pref * r3p * r3p * th3 * th3 * bracket(r3p, w3 / four)?;
    let d3 = pref * r1p * r1p * (c::<S>(8.0) * (th1 * th1 + th3 * th3) * te + c::<S>(2.0));
    Ok(ThreeAnnuliConstants { d1, d2, d3, alpha_star, mu, mu1, carleman_c: cc, alpha0: carl.alpha0 })
}

/// Outer radius shared by the two variable coefficient schemes.
fn scheme_r3<S: Real>(p: &ModelParams<S>) -> S {
    S::one() / (c::<S>(33.0) * S::e() * p.dim() * theta_pow_11_2(p.theta_e) * (p.theta_l + S::one()))
}

/// Standard radii for the given scheme, in unit cell coordinates
/// (parameters are pulled back with [`ModelParams::unit_cell`] first).
pub fn standard_radii<S: Real>(p: &ModelParams<S>, scheme: RadiiScheme<S>) -> Result<AnnuliRadii<S>> {
    let q = p.unit_cell();
    let one = S::one();
    match scheme {
        RadiiScheme::Laplacian(delta) => {
            if !(delta > S::zero() && delta < one) {
                return Err(Error::Domain(format!("delta = {delta} must lie in (0, 1)")));
            }
            let sd = q.dim().sqrt();
            let e = S::e();
            AnnuliRadii::new(
                [delta / c(2.0), delta, one, c::<S>(3.0) * sd, c::<S>(6.0) * e * sd, c::<S>(9.0) * e * sd],
                one,
            )
        }
        RadiiScheme::InterpDelta(_) | RadiiScheme::ChainFixed => {
            let big_r3 = scheme_r3(&q);
            let te1 = q.theta_e + one;
            let big_r2 = big_r3 / (c::<S>(2.0) * S::e() * te1 * te1 * te1.sqrt());
            let r3 = big_r3 / te1;
            let r2 = big_r2 / c(5.0);
            let (r1, big_r1) = match scheme {
                RadiiScheme::InterpDelta(delta) => {
                    let d0 = delta0(&q);
                    if !(delta > S::zero() && delta <= d0) {
                        return Err(Error::DeltaOutOfRange { delta: delta.as_f64(), delta0: d0.as_f64() });
                    }
                    // r2 equals delta0 up to rounding
                    let big_r1 = delta.min(r2);
                    (big_r1 / c(2.0), big_r1)
                }
                _ => (r2 / c(2.0), r2),
            };
            AnnuliRadii::new([r1, big_r1, r2, big_r2, r3, big_r3], one)
        }
    }
}

/// Interpolation assumption on the radii.
pub fn check_assumption_radii<S: Real>(radii: &AnnuliRadii<S>, p: &ModelParams<S>) -> bool {
    let (_, mu1) = mu_pair(radii.big_r3, radii.eps, p);
    let x = mu1 * radii.big_r2 * p.theta_e;
    mu1 < radii.r3 / (radii.big_r2 * p.theta_e) && x * x / (radii.r1 * radii.r3) >= S::one()
}

/// Interpolation exponent `gamma` for the radii.
pub fn interpolation_gamma<S: Real>(radii: &AnnuliRadii<S>, p: &ModelParams<S>) -> Result<S> {
    let (_, mu1) = mu_pair(radii.big_r3, radii.eps, p);
    let x = radii.big_r2 * mu1 * p.theta_e;
    if !(radii.r1 < x) {
        return Err(Error::RadiiAssumption);
    }
    Ok((radii.r3 / x).ln() / (radii.r3 / radii.r1).ln())
}

/// `ln C1(gamma)` from the three annuli constants.
pub fn ln_c1<S: Real>(gamma: S, radii: &AnnuliRadii<S>, ta: &ThreeAnnuliConstants<S>) -> S {
    let ld1 = ta.d1.max(S::one()).ln();
    let ld2 = ta.d2.max(S::one()).ln();
    let ratio = c::<S>(2.0) * gamma * ta.alpha_star * (radii.r3 / radii.r1).ln();
    c::<S>(2.0).ln() + gamma * (ld1 - ld2) + ld2.max(ratio)
}

/// Chain length `m = 2 floor(2 sqrt(d)/(R2 - r2)) + 2`.
pub fn chain_length<S: Real>(d: usize, radii: &AnnuliRadii<S>) -> u64 {
    let q = (c::<S>(2.0) * S::from_count(d).sqrt() / (radii.big_r2 - radii.r2)).as_f64().floor();
    2 * (q as u64) + 2
}

/// Per axis covering count `ceil(4 sqrt(d)/(R2 - r2))`.
pub fn covering_base<S: Real>(d: usize, radii: &AnnuliRadii<S>) -> S {
    (c::<S>(4.0) * S::from_count(d).sqrt() / (radii.big_r2 - radii.r2)).ceil()
}

/// `(a, M)` with `a = (R2 + 3 r2)/4` and `M = (2 R3 + 2a + 1)^d`.
pub fn chain_margin<S: Real>(d: usize, radii: &AnnuliRadii<S>) -> (S, S) {
    let a = (radii.big_r2 + c::<S>(3.0) * radii.r2) / c(4.0);
    let base = c::<S>(2.0) * radii.big_r3 + c::<S>(2.0) * a + S::one();
    (a, base.powi(d as i32))
}

/// Interpolation and chaining constants for the radii.
pub fn chain_constants<S: Real>(
    radii: &AnnuliRadii<S>,
    p: &ModelParams<S>,
    cal: &CalibrationConstants<S>,
) -> Result<ChainConstants<S>> {
    if !check_assumption_radii(radii, p) {
        return Err(Error::RadiiAssumption);
    }
    let gamma = interpolation_gamma(radii, p)?;
    let ta = three_annuli_constants(radii, p, cal)?;
    let lc1 = ln_c1(gamma, radii, &ta);
    let m = chain_length(p.d, radii);
    let n_base = covering_base(p.d, radii);
    let ln_n = S::from_count(p.d) * n_base.ln();
    let (a, big_m) = chain_margin(p.d, radii);
    let ln_m = big_m.ln();

    // sum_{k=1}^{m-1} gamma^{-k} in closed form
    let q = gamma.recip();
    let g_pow = q.powf(S::lit((m - 1) as f64));
    let geo = q * (g_pow - S::one()) / (q - S::one());
    let lc2 = geo * lc1 + (g_pow - S::one()) * ln_m + g_pow * ln_n;
    Ok(ChainConstants {
        gamma,
        c1: LogValue::from_ln(lc1),
        gamma2: gamma,
        c2: LogValue::from_ln(lc2),
        m,
        n: n_base.powi(p.d as i32),
        big_m,
        a,
    })
}

/// Variants of the sampling constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CsfucOptions {
    /// Read `norm_v` as `||V - c||` and drop `norm_c`.
    pub homogeneous: bool,
    /// Include the extra factor of the finite cube statement.
    pub finite_cube: bool,
}

/// Composed sampling constant and its realized exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Csfuc<S> {
    /// The constant itself, through its logarithm.
    pub exact: LogValue<S>,
    /// `ln(exact)/ln(delta)`, so that `delta^exponent_n = exact`.
    pub exponent_n: S,
    pub gamma1: S,
    pub gamma2: S,
    pub ln_c1_delta: S,
    pub ln_c2: S,
    pub ln_big_m: S,
    pub m: u64,
}

/// Sampling constant for sensing radius `delta`.
pub fn csfuc<S: Real>(
    delta: S,
    p: &ModelParams<S>,
    cal: &CalibrationConstants<S>,
    opts: CsfucOptions,
) -> Result<Csfuc<S>> {
    p.validate()?;
    let d0 = delta0(p);
    if !(delta > S::zero() && delta < d0) {
        return Err(Error::DeltaOutOfRange { delta: delta.as_f64(), delta0: d0.as_f64() });
    }
    let mut q = p.unit_cell();
    if opts.homogeneous {
        q.norm_c = S::zero();
    }
    let du = delta / p.g;

    let rd = standard_radii(&q, RadiiScheme::InterpDelta(du))?;
    let rf = standard_radii(&q, RadiiScheme::ChainFixed)?;
    let gamma1 = interpolation_gamma(&rd, &q)?;
    let ta_d = three_annuli_constants(&rd, &q, cal)?;
    let lc1 = ln_c1(gamma1, &rd, &ta_d);
    let chain = chain_constants(&rf, &q, cal)?;
    let ln_m = chain.big_m.ln();
    let inv = gamma1.recip();
    let mut ln_exact = -inv * lc1 - inv * chain.c2.ln + (S::one() - inv) * ln_m;
    if opts.finite_cube {
        let g_pow = chain.gamma2.recip().powf(S::lit((chain.m - 1) as f64));
        let ln9 = S::lit(9f64.ln());
        let dd = S::from_count(q.d);
        ln_exact += inv * (dd * ln9 - dd * g_pow * ln9);
    }
    Ok(Csfuc {
        exact: LogValue::from_ln(ln_exact),
        exponent_n: ln_exact / du.ln(),
        gamma1,
        gamma2: chain.gamma2,
        ln_c1_delta: lc1,
        ln_c2: chain.c2.ln,
        ln_big_m: ln_m,
        m: chain.m,
    })
}

/// Inputs for the spectral applications of the sampling constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApplicationInputs<S> {
    pub delta: S,
    /// Centre of the short energy interval.
    pub e0: S,
    /// Lowest eigenvalue of the unperturbed operator.
    pub lambda1: S,
    /// Lowest value of the auxiliary form; defaults to `lambda1` when `None`.
    pub lambda1_aux: Option<S>,
    /// Lower ellipticity constant; defaults to `1/thetaE` when `None`.
    pub theta_e_minus: Option<S>,
}

impl<S: Real> ApplicationInputs<S> {
    pub fn new(delta: S, e0: S, lambda1: S) -> Self {
        ApplicationInputs { delta, e0, lambda1, lambda1_aux: None, theta_e_minus: None }
    }
}

/// Realized `kappa` values of the three spectral applications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApplicationKappas<S> {
    pub kappa_short: LogValue<S>,
    pub kappa_low: LogValue<S>,
    pub kappa_lip: LogValue<S>,
    /// Realized exponents used for each.
    pub n_short: S,
    pub n_low: S,
    pub m_lip: S,
}

/// Realized `N` at the given norms: the exponent of `csfuc` divided by the
/// norm factor `1 + ||V||^{2/3} + ||b||^2 + ||c||^{2/3}`.
pub fn realized_n<S: Real>(
    delta: S,
    p: &ModelParams<S>,
    cal: &CalibrationConstants<S>,
    opts: CsfucOptions,
) -> Result<S> {
    let cs = csfuc(delta, p, cal, opts)?;
    Ok(cs.exponent_n / norm_factor(&effective(p, opts), S::zero()))
}

fn effective<S: Real>(p: &ModelParams<S>, opts: CsfucOptions) -> ModelParams<S> {
    if opts.homogeneous {
        ModelParams { norm_c: S::zero(), ..*p }
    } else {
        *p
    }
}

fn two_thirds<S: Real>(x: S) -> S {
    (x * x).cbrt()
}

/// `extra + 1 + ||V||^{2/3} + ||c||^{2/3} + ||b||^2` on unit cells.
fn norm_factor<S: Real>(p: &ModelParams<S>, extra: S) -> S {
    let q = p.unit_cell();
    extra + S::one() + two_thirds(q.norm_v) + two_thirds(q.norm_c) + q.norm_b * q.norm_b
}

/// `kappa` values for short intervals, low energies and the Lipschitz-free case.
pub fn application_kappas<S: Real>(
    p: &ModelParams<S>,
    cal: &CalibrationConstants<S>,
    inp: &ApplicationInputs<S>,
    opts: CsfucOptions,
) -> Result<ApplicationKappas<S>> {
    let p = &effective(p, opts);
    let ln_delta = (inp.delta / p.g).ln();

    let ps = ModelParams { norm_v: inp.e0.abs(), ..*p };
    let n_short = realized_n(inp.delta, &ps, cal, opts)?;
    let kappa_short = LogValue::from_ln(n_short * norm_factor(&ps, S::zero()) * ln_delta);

    let pl = ModelParams { norm_v: inp.lambda1.abs(), ..*p };
    let n_low = realized_n(inp.delta, &pl, cal, opts)?;
    let kappa_low =
        LogValue::from_ln(n_low * norm_factor(&pl, c(2.0)) * ln_delta - c::<S>(4.0).ln());

    let tm = inp.theta_e_minus.unwrap_or(p.theta_e.recip());
    if !(tm > S::zero()) {
        return Err(Error::InvalidParams("thetaE- must be > 0".into()));
    }
    let aux = inp.lambda1_aux.unwrap_or(inp.lambda1);
    let ph = ModelParams {
        d: p.d,
        theta_e: S::one(),
        theta_l: S::zero(),
        norm_v: (aux / tm).abs(),
        norm_b: p.norm_b / tm,
        norm_c: p.norm_c / tm,
        g: p.g,
    };
    let m_lip = realized_n(inp.delta, &ph, cal, opts)?;
    let lip_factor = norm_factor(&ph, two_thirds(tm.recip()));
    let kappa_lip = LogValue::from_ln(m_lip * lip_factor * ln_delta - c::<S>(2.0).ln());
    Ok(ApplicationKappas { kappa_short, kappa_low, kappa_lip, n_short, n_low, m_lip })
}

/// Lifting rate `delta^{N(1 + |lambda1|^{2/3} + 2 t^{2/3} + ||c||^{2/3} + ||b||^2)}`
/// so that `lambda1(t) - lambda1(0) >= (3t/4) * rate`.
pub fn lifting_kappa<S: Real>(
    t: S,
    delta: S,
    lambda1: S,
    p: &ModelParams<S>,
    cal: &CalibrationConstants<S>,
    opts: CsfucOptions,
) -> Result<LogValue<S>> {
    if !(t >= S::zero()) {
        return Err(Error::Domain(format!("t = {t} must be >= 0")));
    }
    let p = &effective(p, opts);
    let pl = ModelParams { norm_v: lambda1.abs(), ..*p };
    let n = realized_n(delta, &pl, cal, opts)?;
    let f = norm_factor(&pl, c::<S>(2.0) * two_thirds(t));
    Ok(LogValue::from_ln(n * f * (delta / p.g).ln()))
}

/// Null-controllability cost bound at time `t_final` (assumes `lambda1 = 0`).
pub fn control_cost<S: Real>(
    t_final: S,
    delta: S,
    p: &ModelParams<S>,
    cal: &CalibrationConstants<S>,
) -> Result<LogValue<S>> {
    if !(t_final > S::zero()) {
        return Err(Error::Domain(format!("T = {t_final} must be > 0")));
    }
    let pz = ModelParams { norm_v: S::zero(), ..*p };
    let n = realized_n(delta, &pz, cal, CsfucOptions::default())?;
    let f = norm_factor(&pz, c(2.0));
    let ln = (c::<S>(2.0) / t_final).ln() / c(2.0) - n / c(2.0) * f * (delta / p.g).ln();
    Ok(LogValue::from_ln(ln))
}

/// Combinatorial covering factor `K_d = (18 e sqrt(d) + 1)^d`.
pub fn covering_factor<S: Real>(d: usize) -> S {
    (c::<S>(18.0) * S::e() * S::from_count(d).sqrt() + S::one()).powi(d as i32)
}

/// Realized constant `K` in `D_1 <= R2 e^{K(R3+1)} (1 + ||V||^2 + ||b||^2 + ||c||^2) / ((R1-r1)^2 min{(R1-r1)^2/16, 1})`.
pub fn realized_k<S: Real>(
    radii: &AnnuliRadii<S>,
    p: &ModelParams<S>,
    cal: &CalibrationConstants<S>,
) -> Result<S> {
    let ta = three_annuli_constants(radii, p, cal)?;
    let w = radii.big_r1 - radii.r1;
    let norms = S::one() + p.norm_v * p.norm_v + p.norm_b * p.norm_b + p.norm_c * p.norm_c;
    let floor = (w * w / c(16.0)).min(S::one());
    Ok((ta.d1 * w * w * floor / (radii.big_r2 * norms)).ln() / (radii.big_r3 + S::one()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta0_unit_laplacian() {
        let p = ModelParams::new(1, 1.0f64, 0.0).unwrap();
        let e = std::f64::consts::E;
        let expect = 1.0 / (330.0 * e * e * 2f64.powf(2.5));
        assert!((delta0(&p) - expect).abs() < 1e-18);
    }

    #[test]
    fn mu_pair_branches() {
        let p = ModelParams::new(1, 1.0f64, 0.0).unwrap();
        let (mu, mu1) = mu_pair(3.0, 1.0, &p);
        assert_eq!(mu, 1.0);
        assert!((mu1 - std::f64::consts::E).abs() < 1e-15);
        let (_, mu1) = mu_pair(3.0, 2.0, &p);
        assert!((mu1 - 2.0 * std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn laplacian_radii_ratio() {
        let p = ModelParams::new(1, 1.0f64, 0.0).unwrap();
        let r = standard_radii(&p, RadiiScheme::Laplacian(0.1)).unwrap();
        assert!((std::f64::consts::E * r.big_r2 / r.r3 - 0.5).abs() < 1e-15);
    }
}
