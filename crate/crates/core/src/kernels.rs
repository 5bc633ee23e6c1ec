//! Communication weight functions and their antiderivatives.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::quadrature;

/// Closed-form kernel families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelForm {
    /// `r -> a (1 + r^2)^(-b) + c`
    PowerShift { a: f64, b: f64, c: f64 },
    /// `r -> (1 + r)^(-beta)`
    Ckpp { beta: f64 },
    /// `r -> c`
    Constant { c: f64 },
}

/// A bounded, Lipschitz, nonnegative weight on `[0, inf)`.
///
/// Cloning is cheap; clones share the antiderivative cache.
#[derive(Clone)]
pub struct CommunicationKernel {
    form: KernelForm,
    inf: f64,
    sup: f64,
    cache: Option<Arc<PhiCache>>,
}

impl CommunicationKernel {
    pub fn power_shift(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new(KernelForm::PowerShift { a, b, c })
    }

    pub fn ckpp(beta: f64) -> Result<Self> {
        Self::new(KernelForm::Ckpp { beta })
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(KernelForm::Constant { c })
    }

    pub fn new(form: KernelForm) -> Result<Self> {
        let check = |name: &str, x: f64| {
            if x.is_finite() && x >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidKernel(format!("{name} must be finite and nonnegative, got {x}")))
            }
        };
        let (inf, sup) = match form {
            KernelForm::PowerShift { a, b, c } => {
                check("a", a)?;
                check("b", b)?;
                check("c", c)?;
                if a == 0.0 || b == 0.0 {
                    (a + c, a + c)
                } else {
                    (c, a + c)
                }
            }
            KernelForm::Ckpp { beta } => {
                check("beta", beta)?;
                if beta == 0.0 {
                    (1.0, 1.0)
                } else {
                    (0.0, 1.0)
                }
            }
            KernelForm::Constant { c } => {
                check("c", c)?;
                (c, c)
            }
        };
        let needs_cache = matches!(form, KernelForm::PowerShift { a, b, .. }
            if a != 0.0 && b != 0.0 && b != 0.5);
        Ok(CommunicationKernel { form, inf, sup, cache: needs_cache.then(|| Arc::new(PhiCache::default())) })
    }

    pub fn form(&self) -> KernelForm {
        self.form
    }

    /// Infimum over `[0, inf)`.
    pub fn inf(&self) -> f64 {
        self.inf
    }

    /// Supremum over `[0, inf)`.
    pub fn sup(&self) -> f64 {
        self.sup
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        if r < 0.0 || r.is_nan() {
            return Err(Error::NegativeArgument(r));
        }
        Ok(self.value(r))
    }

    /// Unchecked evaluation for the hot path; `r` must be nonnegative.
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0);
        match self.form {
            KernelForm::PowerShift { a, b, c } => a * inv_power(1.0 + r * r, b) + c,
            KernelForm::Ckpp { beta } => inv_power(1.0 + r, beta),
            KernelForm::Constant { c } => c,
        }
    }

    /// `Phi(r) = int_0^r k(s) ds`.
    pub fn antiderivative(&self, r: f64) -> Result<f64> {
        if r < 0.0 || r.is_nan() {
            return Err(Error::NegativeArgument(r));
        }
        match self.form {
            KernelForm::Constant { c } => Ok(c * r),
            KernelForm::Ckpp { beta } if beta == 1.0 => Ok(r.ln_1p()),
            KernelForm::Ckpp { beta } => Ok((1.0 - (1.0 + r).powf(1.0 - beta)) / (beta - 1.0)),
            KernelForm::PowerShift { a, b, c } if a == 0.0 || b == 0.0 => Ok((a + c) * r),
            KernelForm::PowerShift { a, b, c } if b == 0.5 => Ok(a * r.asinh() + c * r),
            KernelForm::PowerShift { .. } if r == f64::INFINITY => Ok(self.total_integral().unwrap_or(f64::INFINITY)),
            KernelForm::PowerShift { .. } => match &self.cache {
                Some(cache) => cache.antiderivative(self, r),
                None => self.antiderivative_adaptive(r),
            },
        }
    }

    /// Antiderivative by adaptive quadrature over the whole of `[0, r]`.
    pub fn antiderivative_adaptive(&self, r: f64) -> Result<f64> {
        quadrature::integrate(
            |s| self.value(s),
            0.0,
            r,
            quadrature::DEFAULT_ABS_TOL,
            quadrature::DEFAULT_MAX_SUBDIVISIONS,
        )
    }

    /// Whether `int_0^inf k` is infinite.
    pub fn tail_integral_diverges(&self) -> bool {
        match self.form {
            KernelForm::Constant { c } => c > 0.0,
            KernelForm::Ckpp { beta } => beta <= 1.0,
            KernelForm::PowerShift { a, b, c } => c > 0.0 || (a > 0.0 && 2.0 * b <= 1.0),
        }
    }

    /// `int_0^inf k`, or `None` when it diverges.
    pub fn total_integral(&self) -> Option<f64> {
        if self.tail_integral_diverges() {
            return None;
        }
        Some(match self.form {
            KernelForm::Constant { .. } => 0.0,
            KernelForm::Ckpp { beta } => 1.0 / (beta - 1.0),
            KernelForm::PowerShift { a, .. } if a == 0.0 => 0.0,
            // int_0^inf (1 + s^2)^(-b) ds = B(1/2, b - 1/2) / 2
            KernelForm::PowerShift { a, b, .. } => 0.5 * a * statrs::function::beta::beta(0.5, b - 0.5),
        })
    }

    /// Smallest `eta >= 0` with `Phi(eta) >= level`, by bracketing and
    /// bisection. `None` when `Phi` stays below `level`.
    pub fn antiderivative_inverse(&self, level: f64) -> Result<Option<f64>> {
        if level <= 0.0 {
            return Ok(Some(0.0));
        }
        if let Some(total) = self.total_integral() {
            if total <= level {
                return Ok(None);
            }
        }
        let mut hi = 1.0;
        while self.antiderivative(hi)? < level {
            hi *= 2.0;
            if !hi.is_finite() {
                return Ok(None);
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.antiderivative(mid)? < level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(hi))
    }
}

#[inline]
fn inv_power(base: f64, exponent: f64) -> f64 {
    if exponent == 0.25 {
        1.0 / base.sqrt().sqrt()
    } else if exponent == 0.5 {
        1.0 / base.sqrt()
    } else if exponent == 1.0 {
        1.0 / base
    } else if exponent == 2.0 {
        1.0 / (base * base)
    } else {
        base.powf(-exponent)
    }
}

impl PartialEq for CommunicationKernel {
    fn eq(&self, other: &Self) -> bool {
        self.form == other.form
    }
}

impl fmt::Debug for CommunicationKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CommunicationKernel({self})")
    }
}

impl fmt::Display for CommunicationKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.form {
            KernelForm::PowerShift { a, b, c } => write!(f, "power_shift({a:?}, {b:?}, {c:?})"),
            KernelForm::Ckpp { beta } => write!(f, "ckpp({beta:?})"),
            KernelForm::Constant { c } => write!(f, "constant({c:?})"),
        }
    }
}

impl FromStr for CommunicationKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidKernel(format!("cannot parse kernel spec `{s}`"));
        let open = s.find('(').ok_or_else(bad)?;
        let args = s[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let args = args.split(',').map(|a| a.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
        match (s[..open].trim(), args.as_slice()) {
            ("power_shift", &[a, b, c]) => CommunicationKernel::power_shift(a, b, c),
            ("ckpp", &[beta]) => CommunicationKernel::ckpp(beta),
            ("constant", &[c]) => CommunicationKernel::constant(c),
            _ => Err(bad()),
        }
    }
}

impl Serialize for CommunicationKernel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CommunicationKernel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Lazily grown table of `Phi` at grid nodes.
///
/// Nodes are uniform with spacing `UNIFORM_STEP` up to `UNIFORM_END`, then
/// geometric with ratio `GROWTH`. A query adds one Kronrod panel from the
/// node below `r` to the tabulated prefix value. Concurrent readers share the
/// table; growth takes the write lock and is idempotent.
#[derive(Default)]
struct PhiCache {
    prefix: RwLock<Vec<f64>>,
}

const UNIFORM_STEP: f64 = 0.25;
const UNIFORM_NODES: usize = 16;
const UNIFORM_END: f64 = UNIFORM_STEP * UNIFORM_NODES as f64;
const GROWTH: f64 = 1.125;

impl PhiCache {
    fn node(k: usize) -> f64 {
        if k <= UNIFORM_NODES {
            k as f64 * UNIFORM_STEP
        } else {
            UNIFORM_END * GROWTH.powi((k - UNIFORM_NODES) as i32)
        }
    }

    fn cell(r: f64) -> usize {
        let mut k = if r < UNIFORM_END {
            (r / UNIFORM_STEP) as usize
        } else {
            UNIFORM_NODES + ((r / UNIFORM_END).ln() / GROWTH.ln()) as usize
        };
        while k > 0 && Self::node(k) > r {
            k -= 1;
        }
        while Self::node(k + 1) <= r {
            k += 1;
        }
        k
    }

    fn antiderivative(&self, kernel: &CommunicationKernel, r: f64) -> Result<f64> {
        let k = Self::cell(r);
        let base = {
            let table = self.prefix.read().unwrap_or_else(|e| e.into_inner());
            table.get(k).copied()
        };
        let base = match base {
            Some(v) => v,
            None => self.grow(kernel, k)?,
        };
        let lo = Self::node(k);
        if r == lo {
            return Ok(base);
        }
        let (panel, _) = quadrature::gk15(&|s| kernel.value(s), lo, r);
        Ok(base + panel)
    }

    fn grow(&self, kernel: &CommunicationKernel, k: usize) -> Result<f64> {
        let mut table = self.prefix.write().unwrap_or_else(|e| e.into_inner());
        if table.is_empty() {
            table.push(0.0);
        }
        while table.len() <= k {
            let j = table.len();
            let (a, b) = (Self::node(j - 1), Self::node(j));
            let cell = quadrature::integrate(|s| kernel.value(s), a, b, 1e-13 * (b - a), 64)?;
            let prev = table[j - 1];
            table.push(prev + cell);
        }
        Ok(table[k])
    }
}
