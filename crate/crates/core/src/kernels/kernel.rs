use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

type KernelFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// How a kernel is evaluated.
#[derive(Clone)]
pub enum KernelRepr {
    /// `|x₁ − x₂|`
    Gini,
    /// `(x₁ − x₂)² / 2`
    Variance,
    Tabulated(Arc<TabulatedKernel>),
    Custom(Arc<KernelFn>),
}

impl fmt::Debug for KernelRepr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelRepr::Gini => f.write_str("Gini"),
            KernelRepr::Variance => f.write_str("Variance"),
            KernelRepr::Tabulated(t) => write!(f, "Tabulated({}x{})", t.x1.len(), t.x2.len()),
            KernelRepr::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// A degree-2 kernel `g(x₁, x₂)` with declared growth exponent `λ′`:
/// `|g(x₁, x₂)| ≲ (1+|x₁|)^{λ′} (1+|x₂|)^{λ′}`.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub name: String,
    pub symmetric: bool,
    pub lambda_prime: f64,
    pub repr: KernelRepr,
}

pub fn gini_kernel() -> Kernel {
    Kernel { name: "gini".into(), symmetric: true, lambda_prime: 1.0, repr: KernelRepr::Gini }
}

pub fn variance_kernel() -> Kernel {
    Kernel { name: "variance".into(), symmetric: true, lambda_prime: 2.0, repr: KernelRepr::Variance }
}

impl Kernel {
    /// A black-box kernel. The growth bound is checked, not assumed, by
    /// [`check_assumptions`](super::check_assumptions).
    pub fn custom(
        name: impl Into<String>,
        symmetric: bool,
        lambda_prime: f64,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Kernel> {
        check_lambda_prime(lambda_prime)?;
        Ok(Kernel { name: name.into(), symmetric, lambda_prime, repr: KernelRepr::Custom(Arc::new(f)) })
    }

    pub fn tabulated(name: impl Into<String>, table: TabulatedKernel, lambda_prime: f64) -> Result<Kernel> {
        check_lambda_prime(lambda_prime)?;
        let symmetric = table.is_symmetric(1e-12);
        Ok(Kernel { name: name.into(), symmetric, lambda_prime, repr: KernelRepr::Tabulated(Arc::new(table)) })
    }

    pub fn by_name(name: &str) -> Result<Kernel> {
        match name {
            "gini" => Ok(gini_kernel()),
            "variance" => Ok(variance_kernel()),
            other => Err(Error::Config(format!("unknown kernel {other:?} (built-in kernels: gini, variance)"))),
        }
    }

    #[inline]
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        match &self.repr {
            KernelRepr::Gini => (x1 - x2).abs(),
            KernelRepr::Variance => 0.5 * (x1 - x2) * (x1 - x2),
            KernelRepr::Tabulated(t) => t.eval(x1, x2),
            KernelRepr::Custom(f) => f(x1, x2),
        }
    }

    /// Right derivative `∂g/∂x₁` where it is known in closed form.
    pub fn d1(&self, x1: f64, x2: f64) -> Option<f64> {
        match self.repr {
            KernelRepr::Gini => Some(if x1 >= x2 { 1.0 } else { -1.0 }),
            KernelRepr::Variance => Some(x1 - x2),
            _ => None,
        }
    }

    /// Right derivative `∂g/∂x₂` where it is known in closed form.
    pub fn d2(&self, x1: f64, x2: f64) -> Option<f64> {
        self.d1(x2, x1)
    }

    pub fn has_closed_form_derivative(&self) -> bool {
        matches!(self.repr, KernelRepr::Gini | KernelRepr::Variance)
    }
}

fn check_lambda_prime(l: f64) -> Result<()> {
    if l.is_finite() && l >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("declared growth exponent must be finite and nonnegative, got {l}")))
    }
}

/// Kernel values on a rectangular grid, bilinearly interpolated inside and
/// clamped to the nearest edge outside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedKernel {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    /// Row-major, `values[i * x2.len() + j] = g(x1[i], x2[j])`.
    pub values: Vec<f64>,
}

impl TabulatedKernel {
    pub fn new(x1: Vec<f64>, x2: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        for (axis, xs) in [("x1", &x1), ("x2", &x2)] {
            if xs.len() < 2 {
                return Err(invalid(format!("tabulated kernel needs at least two {axis} nodes")));
            }
            if xs.windows(2).any(|w| !(w[0] < w[1])) {
                return Err(invalid(format!("tabulated kernel {axis} nodes must be strictly increasing")));
            }
        }
        if values.len() != x1.len() * x2.len() {
            return Err(invalid("tabulated kernel values do not fill the grid"));
        }
        crate::error::ensure_finite(&values, "tabulated kernel values")?;
        Ok(Self { x1, x2, values })
    }

    /// Parses rows `x1 x2 g` (whitespace or comma separated). Every pair of
    /// the two axes must appear exactly once.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
            if toks.len() != 3 {
                return Err(invalid(format!("kernel table line {}: expected x1 x2 g", n + 1)));
            }
            let mut r = [0.0; 3];
            for (k, t) in toks.iter().enumerate() {
                r[k] = t.parse().map_err(|_| invalid(format!("kernel table line {}: bad number {t:?}", n + 1)))?;
            }
            rows.push(r);
        }
        let axis = |k: usize| {
            let mut v: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let (x1, x2) = (axis(0), axis(1));
        if rows.len() != x1.len() * x2.len() {
            return Err(invalid(format!(
                "kernel table has {} rows but its axes span {} x {} nodes",
                rows.len(),
                x1.len(),
                x2.len()
            )));
        }
        let mut values = vec![f64::NAN; rows.len()];
        for r in &rows {
            let i = x1.partition_point(|&v| v < r[0]);
            let j = x2.partition_point(|&v| v < r[1]);
            let slot = &mut values[i * x2.len() + j];
            if !slot.is_nan() {
                return Err(invalid(format!("kernel table repeats the node ({}, {})", r[0], r[1])));
            }
            *slot = r[2];
        }
        Self::new(x1, x2, values)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn locate(xs: &[f64], x: f64) -> (usize, f64) {
        let n = xs.len();
        if x <= xs[0] {
            return (0, 0.0);
        }
        if x >= xs[n - 1] {
            return (n - 2, 1.0);
        }
        let i = xs.partition_point(|&v| v <= x) - 1;
        (i, (x - xs[i]) / (xs[i + 1] - xs[i]))
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        let (i, s) = Self::locate(&self.x1, x1);
        let (j, t) = Self::locate(&self.x2, x2);
        let m = self.x2.len();
        let v = |a: usize, b: usize| self.values[a * m + b];
        (1.0 - s) * ((1.0 - t) * v(i, j) + t * v(i, j + 1)) + s * ((1.0 - t) * v(i + 1, j) + t * v(i + 1, j + 1))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.x1 != self.x2 {
            return false;
        }
        let m = self.x2.len();
        (0..m).all(|i| (0..i).all(|j| (self.values[i * m + j] - self.values[j * m + i]).abs() <= tol))
    }
}

/// Kernel selection as written in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum KernelSpec {
    Gini,
    Variance,
    Tabulated { path: String, lambda_prime: f64 },
}

impl KernelSpec {
    /// Builds the kernel; relative table paths are resolved against `base`.
    pub fn build(&self, base: &Path) -> Result<Kernel> {
        match self {
            KernelSpec::Gini => Ok(gini_kernel()),
            KernelSpec::Variance => Ok(variance_kernel()),
            KernelSpec::Tabulated { path, lambda_prime } => {
                let p = base.join(path);
                let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "tabulated".into());
                Kernel::tabulated(name, TabulatedKernel::read(&p)?, *lambda_prime)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_values() {
        let g = gini_kernel();
        assert_eq!(g.eval(3.0, 3.0), 0.0);
        assert_eq!(g.eval(1.0, 4.0), 3.0);
        let v = variance_kernel();
        assert_eq!(v.eval(2.0, 2.0), 0.0);
        assert_eq!(v.eval(0.0, 2.0), 2.0);
        assert_eq!((g.lambda_prime, v.lambda_prime), (1.0, 2.0));
        assert!(Kernel::by_name("nope").is_err());
    }

    #[test]
    fn table_reproduces_bilinear_kernel() {
        let xs = vec![-1.0, 0.0, 2.0];
        let mut text = String::new();
        for &a in &xs {
            for &b in &xs {
                text += &format!("{a},{b},{}\n", a * b + a + b);
            }
        }
        let t = TabulatedKernel::parse(&text).unwrap();
        assert!(t.is_symmetric(0.0));
        // a·b + a + b is bilinear, so interpolation is exact inside the table
        assert!((t.eval(0.5, -0.25) - (0.5 * -0.25 + 0.25)).abs() < 1e-15);
        assert_eq!(t.eval(10.0, 10.0), t.eval(2.0, 2.0));
        let k = Kernel::tabulated("t", t, 2.0).unwrap();
        assert!(k.symmetric);
        assert!(TabulatedKernel::parse("0 0 1\n0 1 2\n1 0 3\n").is_err());
    }

    #[test]
    fn kernel_spec_from_toml() {
        let s: KernelSpec = toml::from_str("name = \"gini\"").unwrap();
        assert_eq!(s, KernelSpec::Gini);
        let t: KernelSpec = toml::from_str("name = \"tabulated\"\npath = \"k.txt\"\nlambda_prime = 1.0").unwrap();
        assert!(matches!(t, KernelSpec::Tabulated { .. }));
        assert!(toml::from_str::<KernelSpec>("name = \"tabulated\"\npath = \"k.txt\"").is_err());
    }
}
