//! Local factors `f_p(z) = 1 + sum_m a_p^m z^m` of an Euler product.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::analysis::zero_count;
use crate::error::{Error, Result};

/// A Dirichlet character stored by its values on residues `0..q`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletCharacter {
    modulus: u64,
    values: Vec<Complex64>,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl DirichletCharacter {
    /// Validate a value table: `chi(1) = 1`, `|chi(n)| = 1` on units, `0`
    /// elsewhere, and complete multiplicativity.
    pub fn from_values(modulus: u64, values: Vec<Complex64>) -> Result<Self> {
        if modulus == 0 || values.len() as u64 != modulus {
            return Err(Error::FactorSpec(
                "character table length must equal the modulus".into(),
            ));
        }
        let q = modulus as usize;
        if modulus > 1 && (values[1] - 1.0).norm() > 1e-12 {
            return Err(Error::FactorSpec("chi(1) must equal 1".into()));
        }
        for (n, v) in values.iter().enumerate() {
            let unit = gcd(n as u64, modulus) == 1;
            if unit && (v.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::FactorSpec(format!("|chi({n})| != 1")));
            }
            if !unit && v.norm() > 1e-12 {
                return Err(Error::FactorSpec(format!("chi({n}) must vanish")));
            }
        }
        for a in 0..q {
            for b in 0..q {
                if (values[a * b % q] - values[a] * values[b]).norm() > 1e-9 {
                    return Err(Error::FactorSpec(format!("chi not multiplicative at {a}*{b}")));
                }
            }
        }
        Ok(DirichletCharacter { modulus, values })
    }

    /// The non-principal character modulo 4.
    pub fn mod4() -> Self {
        let v = |x: f64| Complex64::new(x, 0.0);
        DirichletCharacter {
            modulus: 4,
            values: vec![v(0.0), v(1.0), v(0.0), v(-1.0)],
        }
    }

    /// The principal character modulo `q`.
    pub fn principal(q: u64) -> Self {
        let values = (0..q)
            .map(|n| {
                if gcd(n, q) == 1 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        DirichletCharacter { modulus: q, values }
    }

    /// Character modulo an odd prime `q` sending the least primitive root to
    /// `exp(2 pi i j / (q - 1))`.
    pub fn prime_modulus(q: u64, j: u64) -> Result<Self> {
        if q < 3 || !crate::primes::is_prime(q) {
            return Err(Error::FactorSpec(format!("{q} is not an odd prime")));
        }
        let order = q - 1;
        let g = (2..q)
            .find(|&g| {
                let mut x = 1u64;
                (1..order).all(|_| {
                    x = x * g % q;
                    x != 1
                })
            })
            .expect("primitive root exists");
        let mut values = vec![Complex64::new(0.0, 0.0); q as usize];
        let mut x = 1u64;
        for k in 0..order {
            let turn = ((j % order) * k % order) as f64 / order as f64;
            values[x as usize] = snap(Complex64::from_polar(1.0, 2.0 * PI * turn));
            x = x * g % q;
        }
        DirichletCharacter::from_values(q, values)
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn value(&self, n: u64) -> Complex64 {
        self.values[(n % self.modulus) as usize]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}

// round unit-circle values that are exactly +-1 or +-i up to rounding
fn snap(z: Complex64) -> Complex64 {
    let r = |x: f64| if (x - x.round()).abs() < 1e-14 { x.round() } else { x };
    Complex64::new(r(z.re), r(z.im))
}

/// Coefficient tables `a_p^m` supplied by the user. Primes without a row
/// have `f_p = 1`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CustomTable {
    coeffs: BTreeMap<u64, Vec<Complex64>>,
}

impl CustomTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Set `a_p^m` for `m >= 1`.
    pub fn set(&mut self, p: u64, m: usize, a: Complex64) {
        assert!(m >= 1, "coefficient index starts at 1");
        let row = self.coeffs.entry(p).or_default();
        if row.len() < m {
            row.resize(m, Complex64::new(0.0, 0.0));
        }
        row[m - 1] = a;
    }

    /// Coefficients `[a_p^1, .., a_p^d]`.
    pub fn row(&self, p: u64) -> &[Complex64] {
        self.coeffs.get(&p).map_or(&[], |v| v.as_slice())
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.coeffs.keys().copied()
    }
}

/// Which family the local factors come from.
#[derive(Debug, Clone, PartialEq)]
pub enum FactorKind {
    /// `f_p(z) = 1/(1 - z)`
    Zeta,
    /// `f_p(z) = 1/(1 - chi(p) z)`
    Character(DirichletCharacter),
    /// Finite polynomials read from a table.
    Custom(CustomTable),
}

/// Local factor data together with declared growth constants `c(eps)`,
/// meaning `|a_p^m| <= c(eps) p^(m eps)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerFactorSpec {
    kind: FactorKind,
    growth: Vec<(f64, f64)>,
}

/// Truncated power series of a local factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorValue {
    pub value: Complex64,
    pub tail_bound: f64,
    pub closed_form: Option<Complex64>,
}

impl EulerFactorSpec {
    pub fn zeta() -> Self {
        EulerFactorSpec {
            kind: FactorKind::Zeta,
            growth: Vec::new(),
        }
    }

    pub fn character(chi: DirichletCharacter) -> Self {
        EulerFactorSpec {
            kind: FactorKind::Character(chi),
            growth: Vec::new(),
        }
    }

    /// Build a custom spec, validating the growth table against every stored
    /// coefficient and checking that each `f_p` is zero-free in the open unit
    /// disc.
    pub fn custom(table: CustomTable, growth: Vec<(f64, f64)>) -> Result<Self> {
        if growth.is_empty() {
            return Err(Error::FactorSpec("at least one c_eps line is required".into()));
        }
        for &(eps, c) in &growth {
            if !(eps >= 0.0 && eps.is_finite() && c >= 1.0 && c.is_finite()) {
                return Err(Error::FactorSpec(format!(
                    "bad growth pair ({eps}, {c}); need eps >= 0, c >= 1"
                )));
            }
        }
        for (&p, row) in &table.coeffs {
            if p < 2 || !crate::primes::is_prime(p) {
                return Err(Error::FactorSpec(format!("{p} is not prime")));
            }
            for (i, a) in row.iter().enumerate() {
                let m = (i + 1) as f64;
                for &(eps, c) in &growth {
                    let bound = c * (p as f64).powf(m * eps);
                    if a.norm() > bound * (1.0 + 1e-12) {
                        return Err(Error::FactorSpec(format!(
                            "|a_{p}^{}| = {} exceeds c(eps) p^(m eps) = {bound} at eps = {eps}",
                            i + 1,
                            a.norm()
                        )));
                    }
                }
            }
        }
        let mut growth = growth;
        growth.sort_by(|a, b| a.0.total_cmp(&b.0));
        let spec = EulerFactorSpec {
            kind: FactorKind::Custom(table),
            growth,
        };
        if let FactorKind::Custom(t) = &spec.kind {
            for p in t.primes() {
                spec.check_zero_free(p)?;
            }
        }
        Ok(spec)
    }

    fn check_zero_free(&self, p: u64) -> Result<()> {
        let rho = 1.0 - 1e-3;
        let count = zero_count(|z| self.eval(p, z), Complex64::new(0.0, 0.0), rho, 256)
            .map_err(|e| Error::FactorSpec(format!("f_{p} near-zero on |z| = {rho}: {e}")))?;
        if count.count != 0 {
            return Err(Error::FactorSpec(format!(
                "f_{p} has {} zeros in |z| < {rho}",
                count.count
            )));
        }
        Ok(())
    }

    pub fn kind(&self) -> &FactorKind {
        &self.kind
    }

    /// Declared growth pairs, ascending in eps. Empty for the built-in
    /// families, where `c(eps) = 1` for every `eps >= 0`.
    pub fn growth(&self) -> &[(f64, f64)] {
        &self.growth
    }

    /// Largest degree stored for `p`, or `None` for infinite series.
    pub fn degree(&self, p: u64) -> Option<usize> {
        match &self.kind {
            FactorKind::Custom(t) => Some(t.row(p).len()),
            FactorKind::Character(chi) if chi.value(p).norm() == 0.0 => Some(0),
            _ => None,
        }
    }

    /// `a_p^m`, with `a_p^0 = 1`.
    pub fn coefficient(&self, p: u64, m: usize) -> Complex64 {
        if m == 0 {
            return Complex64::new(1.0, 0.0);
        }
        match &self.kind {
            FactorKind::Zeta => Complex64::new(1.0, 0.0),
            FactorKind::Character(chi) => chi.value(p).powu(m as u32),
            FactorKind::Custom(t) => t.row(p).get(m - 1).copied().unwrap_or_default(),
        }
    }

    pub fn a1(&self, p: u64) -> Complex64 {
        self.coefficient(p, 1)
    }

    /// `phi_p = arg(a_p^1) / 2 pi` in `[0, 1)`, zero when `a_p^1 = 0`.
    pub fn coefficient_phase(&self, p: u64) -> f64 {
        let a = self.a1(p);
        if a.norm() == 0.0 {
            0.0
        } else {
            (a.arg() / (2.0 * PI)).rem_euclid(1.0)
        }
    }

    /// The best declared constant valid at `eps`: the smallest `c(eps')`
    /// with `eps' <= eps`.
    pub fn growth_constant(&self, eps: f64) -> Result<f64> {
        if !(eps >= 0.0) {
            return Err(Error::InvalidParameter(format!("eps = {eps} must be >= 0")));
        }
        if self.growth.is_empty() {
            return Ok(1.0);
        }
        self.growth
            .iter()
            .filter(|(e, _)| *e <= eps)
            .map(|&(_, c)| c)
            .min_by(f64::total_cmp)
            .ok_or_else(|| Error::FactorSpec(format!("no growth constant declared for eps <= {eps}")))
    }

    /// Smallest declared `eps` (0 for built-in families).
    pub fn min_eps(&self) -> f64 {
        self.growth.first().map_or(0.0, |g| g.0)
    }

    /// Closed form of `f_p(z)` where the family has one.
    pub fn closed_form(&self, p: u64, z: Complex64) -> Option<Complex64> {
        match &self.kind {
            FactorKind::Zeta => Some((Complex64::new(1.0, 0.0) - z).inv()),
            FactorKind::Character(chi) => Some((Complex64::new(1.0, 0.0) - chi.value(p) * z).inv()),
            FactorKind::Custom(_) => None,
        }
    }

    /// `f_p(z)`: closed form for the built-in families, Horner evaluation of
    /// the stored polynomial otherwise.
    pub fn eval(&self, p: u64, z: Complex64) -> Complex64 {
        match &self.kind {
            FactorKind::Custom(t) => {
                let row = t.row(p);
                let mut acc = Complex64::new(0.0, 0.0);
                for a in row.iter().rev() {
                    acc = (acc + a) * z;
                }
                acc + 1.0
            }
            _ => self.closed_form(p, z).expect("built-in family"),
        }
    }

    /// Sum of `a_p^m z^m` for `m <= m_max` with a bound on the omitted tail.
    pub fn eval_factor(&self, p: u64, z: Complex64, m_max: usize) -> Result<FactorValue> {
        let rho = z.norm();
        if !(rho < 1.0) {
            return Err(Error::OutsideUnitDisc { modulus: rho });
        }
        let mut value = Complex64::new(0.0, 0.0);
        let mut zm = Complex64::new(1.0, 0.0);
        for m in 0..=m_max {
            value += self.coefficient(p, m) * zm;
            zm *= z;
        }
        let tail_bound = match self.degree(p) {
            Some(d) if d <= m_max => 0.0,
            _ => {
                let eps = self.min_eps();
                let c = self.growth_constant(eps)?;
                let q = (p as f64).powf(eps) * rho;
                if q >= 1.0 {
                    f64::INFINITY
                } else {
                    c * q.powi(m_max as i32 + 1) / (1.0 - q)
                }
            }
        };
        Ok(FactorValue {
            value,
            tail_bound,
            closed_form: self.closed_form(p, z),
        })
    }

    /// Short label used in manifests: `zeta`, `chi4`, `chi<q>:<values>` or
    /// `custom`.
    pub fn label(&self) -> String {
        match &self.kind {
            FactorKind::Zeta => "zeta".into(),
            FactorKind::Character(chi) if *chi == DirichletCharacter::mod4() => "chi4".into(),
            FactorKind::Character(chi) => format!("chi{}", chi.modulus()),
            FactorKind::Custom(_) => "custom".into(),
        }
    }
}

/// Parse the custom factor text format: `c_eps <eps> <c>` lines declare
/// growth constants, rows `p m re im` give coefficients, `#` starts a
/// comment.
pub fn parse_custom_spec(text: &str) -> Result<EulerFactorSpec> {
    let mut table = CustomTable::new();
    let mut growth = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |what: &str| Error::FactorSpec(format!("line {}: {what}: {raw:?}", lineno + 1));
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("not a number"));
        if fields[0] == "c_eps" {
            if fields.len() != 3 {
                return Err(bad("expected `c_eps <eps> <c>`"));
            }
            growth.push((num(fields[1])?, num(fields[2])?));
            continue;
        }
        if fields.len() != 4 {
            return Err(bad("expected `p m re im`"));
        }
        let p: u64 = fields[0].parse().map_err(|_| bad("bad prime"))?;
        let m: usize = fields[1].parse().map_err(|_| bad("bad index"))?;
        if m == 0 {
            return Err(bad("coefficient index starts at 1"));
        }
        table.set(p, m, Complex64::new(num(fields[2])?, num(fields[3])?));
    }
    EulerFactorSpec::custom(table, growth)
}

/// Serialize a custom spec in the format read by [`parse_custom_spec`].
pub fn write_custom_spec(spec: &EulerFactorSpec) -> Result<String> {
    let FactorKind::Custom(t) = spec.kind() else {
        return Err(Error::FactorSpec("only custom specs have a table form".into()));
    };
    let mut out = String::new();
    for &(eps, c) in spec.growth() {
        writeln!(out, "c_eps {eps} {c}").expect("string write");
    }
    for p in t.primes() {
        for (i, a) in t.row(p).iter().enumerate() {
            writeln!(out, "{p} {} {} {}", i + 1, a.re, a.im).expect("string write");
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn character_mod4_factor() {
        let spec = EulerFactorSpec::character(DirichletCharacter::mod4());
        let v = spec.eval_factor(3, c(0.1, 0.0), 40).unwrap();
        let closed = v.closed_form.unwrap();
        assert!((closed - 1.0 / 1.1).norm() < 1e-15);
        assert!((v.value - closed).norm() < 1e-15);
        assert!(v.tail_bound < 1e-40);
        assert_eq!(spec.coefficient_phase(3), 0.5);
        assert_eq!(spec.degree(2), Some(0));
    }

    #[test]
    fn outside_disc_rejected() {
        let spec = EulerFactorSpec::zeta();
        assert!(matches!(
            spec.eval_factor(2, c(1.0, 0.0), 5),
            Err(Error::OutsideUnitDisc { .. })
        ));
    }

    #[test]
    fn zeta_tail_bound_is_geometric() {
        let spec = EulerFactorSpec::zeta();
        let z = c(0.3, 0.2);
        let v = spec.eval_factor(5, z, 10).unwrap();
        let err = (v.value - v.closed_form.unwrap()).norm();
        assert!(err <= v.tail_bound);
        assert!(v.tail_bound < 1e-4);
    }

    #[test]
    fn prime_modulus_characters() {
        let chi = DirichletCharacter::prime_modulus(5, 1).unwrap();
        assert_eq!(chi.value(1), c(1.0, 0.0));
        assert_eq!(chi.value(4), c(-1.0, 0.0));
        assert_eq!(chi.value(10), c(0.0, 0.0));
        assert!(DirichletCharacter::prime_modulus(9, 1).is_err());
        assert!(DirichletCharacter::from_values(3, vec![c(0., 0.), c(1., 0.), c(1., 0.)]).is_ok());
        assert!(DirichletCharacter::from_values(3, vec![c(0., 0.), c(1., 0.), c(0.5, 0.)]).is_err());
    }

    #[test]
    fn custom_text_roundtrip() {
        let text = "# test\nc_eps 0.1 2\n2 1 0.5 0\n2 2 0.1 0.1\n3 1 -0.3 0.2\n";
        let spec = parse_custom_spec(text).unwrap();
        assert_eq!(spec.coefficient(2, 2), c(0.1, 0.1));
        assert_eq!(spec.coefficient(7, 1), c(0.0, 0.0));
        assert_eq!(spec.eval(7, c(0.4, 0.1)), c(1.0, 0.0));
        let again = parse_custom_spec(&write_custom_spec(&spec).unwrap()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn custom_rejects_bad_tables() {
        // growth violated
        assert!(parse_custom_spec("c_eps 0 1\n2 1 1.5 0\n").is_err());
        // 1 + 2.5 z^2 vanishes at |z| = 0.63
        assert!(parse_custom_spec("c_eps 1 4\n2 2 2.5 0\n").is_err());
        // no growth line
        assert!(parse_custom_spec("2 1 0.5 0\n").is_err());
        // non-prime index
        assert!(parse_custom_spec("c_eps 0 1\n4 1 0.5 0\n").is_err());
    }

    #[test]
    fn growth_constant_lookup() {
        let spec = parse_custom_spec("c_eps 0.2 3\nc_eps 0.05 5\n2 1 0.5 0\n").unwrap();
        assert_eq!(spec.growth_constant(0.1).unwrap(), 5.0);
        assert_eq!(spec.growth_constant(0.3).unwrap(), 3.0);
        assert!(spec.growth_constant(0.01).is_err());
        assert_eq!(EulerFactorSpec::zeta().growth_constant(0.0).unwrap(), 1.0);
    }
}
