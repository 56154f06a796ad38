//! Finite discrete measures on the real line, their potential functions,
//! the convex order, and the decomposition of a pair `mu <=c nu` into
//! irreducible components.

use serde::{Deserialize, Serialize};

use crate::error::{MotError, Result};
use crate::scalar::{sum, Scalar};

/// Finite nonnegative measure with finitely many atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure<S> {
    support: Vec<S>,
    weights: Vec<S>,
}

impl<S: Scalar> DiscreteMeasure<S> {
    /// Builds a measure from a strictly increasing support and matching
    /// nonnegative weights, at least one of them positive.
    pub fn new(support: Vec<S>, weights: Vec<S>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(MotError::InvalidMeasure(format!(
                "{} support points but {} weights",
                support.len(),
                weights.len()
            )));
        }
        if support.is_empty() {
            return Err(MotError::InvalidMeasure("empty support".into()));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MotError::InvalidMeasure("support must be strictly increasing".into()));
        }
        if weights.iter().any(|w| *w < S::zero()) {
            return Err(MotError::InvalidMeasure("negative weight".into()));
        }
        if !weights.iter().any(|w| *w > S::zero()) {
            return Err(MotError::InvalidMeasure("all weights are zero".into()));
        }
        Ok(Self { support, weights })
    }

    /// Sorts atoms, merges repeated locations and drops zero weights.
    pub fn from_atoms(atoms: impl IntoIterator<Item = (S, S)>) -> Result<Self> {
        let mut atoms: Vec<(S, S)> = atoms.into_iter().collect();
        atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("comparable support points"));
        let mut support: Vec<S> = Vec::with_capacity(atoms.len());
        let mut weights: Vec<S> = Vec::with_capacity(atoms.len());
        for (x, w) in atoms {
            if w.is_zero() {
                continue;
            }
            match support.last() {
                Some(last) if *last == x => {
                    let acc = weights.last_mut().expect("parallel vectors");
                    *acc = acc.clone() + w;
                }
                _ => {
                    support.push(x);
                    weights.push(w);
                }
            }
        }
        Self::new(support, weights)
    }

    pub fn dirac(x: S) -> Self {
        Self { support: vec![x], weights: vec![S::one()] }
    }

    /// Equal weights summing to one.
    pub fn uniform(points: Vec<S>) -> Result<Self> {
        let w = S::one() / S::from_int(points.len().max(1) as i64);
        let n = points.len();
        Self::new(points, vec![w; n])
    }

    pub fn support(&self) -> &[S] {
        &self.support
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&S, &S)> {
        self.support.iter().zip(&self.weights)
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Total mass.
    pub fn mass(&self) -> S {
        sum(self.weights.iter().cloned())
    }

    /// First moment, `sum w_i x_i`.
    pub fn first_moment(&self) -> S {
        sum(self.atoms().map(|(x, w)| x.clone() * w.clone()))
    }

    pub fn barycenter(&self) -> S {
        self.first_moment() / self.mass()
    }

    pub fn min_support(&self) -> &S {
        &self.support[0]
    }

    pub fn max_support(&self) -> &S {
        self.support.last().expect("nonempty support")
    }

    /// Potential function `x -> sum w_i |x - x_i|`.
    pub fn potential(&self, x: &S) -> S {
        sum(self.atoms().map(|(xi, w)| w.clone() * (x.clone() - xi.clone()).abs()))
    }

    /// `sum w_i f(x_i)`.
    pub fn integrate<F: Fn(&S) -> S>(&self, f: F) -> S {
        sum(self.atoms().map(|(x, w)| w.clone() * f(x)))
    }

    /// Weight of the atom located exactly at `x` (zero if none).
    pub fn atom_at(&self, x: &S) -> S {
        match self.support.binary_search_by(|p| p.partial_cmp(x).expect("comparable")) {
            Ok(i) => self.weights[i].clone(),
            Err(_) => S::zero(),
        }
    }

    /// Atoms satisfying `keep`, or `None` if nothing positive remains.
    pub fn restrict<F: Fn(&S) -> bool>(&self, keep: F) -> Option<Self> {
        let atoms: Vec<(S, S)> = self
            .atoms()
            .filter(|(x, w)| keep(x) && **w > S::zero())
            .map(|(x, w)| (x.clone(), w.clone()))
            .collect();
        if atoms.is_empty() {
            None
        } else {
            Self::from_atoms(atoms).ok()
        }
    }

    /// Converts every entry through `f64`.
    pub fn to_f64(&self) -> DiscreteMeasure<f64> {
        DiscreteMeasure {
            support: self.support.iter().map(Scalar::to_f64_lossy).collect(),
            weights: self.weights.iter().map(Scalar::to_f64_lossy).collect(),
        }
    }
}

impl DiscreteMeasure<f64> {
    /// Exact rational image of a double-valued measure.
    pub fn to_exact<S: Scalar>(&self) -> DiscreteMeasure<S> {
        DiscreteMeasure {
            support: self.support.iter().map(|x| S::from_f64_exact(*x)).collect(),
            weights: self.weights.iter().map(|x| S::from_f64_exact(*x)).collect(),
        }
    }
}

/// Sorted union of the supports of several measures.
pub fn union_support<S: Scalar>(measures: &[&DiscreteMeasure<S>]) -> Vec<S> {
    let mut pts: Vec<S> = measures.iter().flat_map(|m| m.support.iter().cloned()).collect();
    sort_dedup(&mut pts);
    pts
}

pub(crate) fn sort_dedup<S: Scalar>(pts: &mut Vec<S>) {
    pts.sort_by(|a, b| a.partial_cmp(b).expect("comparable"));
    pts.dedup();
}

/// Potential difference tolerance at a point, relative to its magnitude.
fn potential_tol<S: Scalar>(tol: &S, value: &S) -> S {
    tol.clone() * (S::one() + value.abs())
}

/// Decides `m1 <=c m2` with the default tolerance of the scalar type.
pub fn convex_order_leq<S: Scalar>(m1: &DiscreteMeasure<S>, m2: &DiscreteMeasure<S>) -> bool {
    convex_order_leq_tol(m1, m2, &S::default_tol())
}

/// Equal mass and barycenter, and `u_m1 <= u_m2` on the union of supports.
/// Both potentials are affine between consecutive support points and agree
/// outside the supports once mass and mean agree, so this is exact.
pub fn convex_order_leq_tol<S: Scalar>(m1: &DiscreteMeasure<S>, m2: &DiscreteMeasure<S>, tol: &S) -> bool {
    convex_order_violation(m1, m2, tol).is_none()
}

fn convex_order_violation<S: Scalar>(m1: &DiscreteMeasure<S>, m2: &DiscreteMeasure<S>, tol: &S) -> Option<String> {
    let (a, b) = (m1.mass(), m2.mass());
    if !a.approx_eq(&b, tol) {
        return Some(format!("masses differ: {a} vs {b}"));
    }
    let (a, b) = (m1.barycenter(), m2.barycenter());
    if !a.approx_eq(&b, tol) {
        return Some(format!("barycenters differ: {a} vs {b}"));
    }
    for p in union_support(&[m1, m2]) {
        let (u1, u2) = (m1.potential(&p), m2.potential(&p));
        if u1.clone() - u2.clone() > potential_tol(tol, &u2) {
            return Some(format!("potential at {p}: {u1} > {u2}"));
        }
    }
    None
}

/// The domain `(I, J)` of an irreducible pair: `I` is the open interval
/// `(left, right)`, and `J` adds each endpoint that carries an atom of `nu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain<S> {
    pub left: S,
    pub right: S,
    pub left_closed: bool,
    pub right_closed: bool,
}

impl<S: Scalar> Domain<S> {
    pub fn new(left: S, right: S, left_closed: bool, right_closed: bool) -> Result<Self> {
        if left >= right {
            return Err(MotError::InvalidMeasure(format!("empty domain ({left}, {right})")));
        }
        Ok(Self { left, right, left_closed, right_closed })
    }

    /// `x` in the open interval `I`.
    pub fn in_interior(&self, x: &S) -> bool {
        *x > self.left && *x < self.right
    }

    /// `x` in `J`.
    pub fn contains(&self, x: &S) -> bool {
        self.in_interior(x) || self.is_boundary(x)
    }

    /// `x` is a closed endpoint, i.e. a point of `J \ I`.
    pub fn is_boundary(&self, x: &S) -> bool {
        (self.left_closed && *x == self.left) || (self.right_closed && *x == self.right)
    }

    /// Closed endpoints of `J`.
    pub fn boundary_points(&self) -> Vec<S> {
        let mut out = Vec::new();
        if self.left_closed {
            out.push(self.left.clone());
        }
        if self.right_closed {
            out.push(self.right.clone());
        }
        out
    }
}

/// One irreducible piece `mu_k <=c nu_k` of a decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Component<S> {
    pub domain: Domain<S>,
    pub mu: DiscreteMeasure<S>,
    pub nu: DiscreteMeasure<S>,
}

/// Result of [`irreducible_components`]: the irreducible pieces plus the
/// part of `nu` (equal to the corresponding part of `mu`) that no martingale
/// transport can move.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition<S> {
    pub components: Vec<Component<S>>,
    pub static_residue: Option<DiscreteMeasure<S>>,
}

/// Open intervals of `{u_mu < u_nu}` as `(left, right)` pairs of support points.
pub fn open_components<S: Scalar>(mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>, tol: &S) -> Vec<(S, S)> {
    let pts = union_support(&[mu, nu]);
    let positive: Vec<bool> = pts
        .iter()
        .map(|p| {
            let (a, b) = (mu.potential(p), nu.potential(p));
            b.clone() - a > potential_tol(tol, &b)
        })
        .collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < pts.len() {
        if !positive[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < pts.len() && positive[i] {
            i += 1;
        }
        // Extreme support points always carry equal potentials, so the run
        // is bracketed by zero points on both sides.
        let l = pts[start.saturating_sub(1)].clone();
        let r = pts[i.min(pts.len() - 1)].clone();
        out.push((l, r));
    }
    out
}

/// Splits `mu <=c nu` into irreducible components.
///
/// `mu_k` is `mu` restricted to the open component. `nu_k` is `nu` restricted
/// to it plus the boundary mass needed to match the mass and mean of `mu_k`;
/// that boundary split is forced, so there is no choice to make. Whatever is
/// left of `nu` sits where `u_mu = u_nu` and must coincide with the matching
/// part of `mu`.
pub fn irreducible_components<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
) -> Result<Decomposition<S>> {
    irreducible_components_tol(mu, nu, &S::default_tol())
}

pub fn irreducible_components_tol<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    tol: &S,
) -> Result<Decomposition<S>> {
    if let Some(why) = convex_order_violation(mu, nu, tol) {
        return Err(MotError::NotInConvexOrder(why));
    }
    let scale = S::one() + mu.mass();
    let mass_tol = tol.clone() * scale;
    let intervals = open_components(mu, nu, tol);
    let mut nu_left: Vec<(S, S)> = nu.atoms().map(|(x, w)| (x.clone(), w.clone())).collect();
    let mut components = Vec::with_capacity(intervals.len());
    for (l, r) in intervals {
        let inside = |x: &S| *x > l && *x < r;
        let mu_k = mu.restrict(inside).ok_or_else(|| {
            MotError::NumericalFailure(format!("component ({l}, {r}) carries no mass of mu"))
        })?;
        let nu_int = nu.restrict(inside);
        let (m_int, f_int) = nu_int
            .as_ref()
            .map(|m| (m.mass(), m.first_moment()))
            .unwrap_or((S::zero(), S::zero()));
        let dm = mu_k.mass() - m_int;
        let df = mu_k.first_moment() - f_int;
        let mut w_r = (df - l.clone() * dm.clone()) / (r.clone() - l.clone());
        let mut w_l = dm - w_r.clone();
        for w in [&mut w_l, &mut w_r] {
            if *w < -mass_tol.clone() {
                return Err(MotError::NumericalFailure(format!(
                    "negative boundary mass {w} on component ({l}, {r})"
                )));
            }
            if w.abs() <= mass_tol {
                *w = S::zero();
            }
        }
        let mut atoms: Vec<(S, S)> = nu_int
            .map(|m| m.atoms().map(|(x, w)| (x.clone(), w.clone())).collect())
            .unwrap_or_default();
        for (b, w) in [(&l, &w_l), (&r, &w_r)] {
            if w.is_zero() {
                continue;
            }
            let slot = nu_left
                .iter_mut()
                .find(|(x, _)| x == b)
                .ok_or_else(|| MotError::NumericalFailure(format!("boundary {b} is not an atom of nu")))?;
            if slot.1.clone() - w.clone() < -mass_tol.clone() {
                return Err(MotError::NumericalFailure(format!(
                    "atom of nu at {b} is claimed beyond its mass by adjacent components"
                )));
            }
            slot.1 = S::max_of(slot.1.clone() - w.clone(), S::zero());
            atoms.push((b.clone(), w.clone()));
        }
        for (x, w) in nu_left.iter_mut() {
            if inside(x) {
                *w = S::zero();
            }
        }
        let nu_k = DiscreteMeasure::from_atoms(atoms)?;
        let domain = Domain::new(
            l.clone(),
            r.clone(),
            nu_k.atom_at(&l) > S::zero(),
            nu_k.atom_at(&r) > S::zero(),
        )?;
        components.push(Component { domain, mu: mu_k, nu: nu_k });
    }

    let in_component = |x: &S| components.iter().any(|c| c.domain.in_interior(x));
    let mu_static = mu.restrict(|x| !in_component(x));
    let nu_static: Vec<(S, S)> = nu_left.into_iter().filter(|(_, w)| w.abs() > mass_tol).collect();
    let nu_static = if nu_static.is_empty() { None } else { Some(DiscreteMeasure::from_atoms(nu_static)?) };
    match (&mu_static, &nu_static) {
        (None, None) => {}
        (Some(a), Some(b)) => {
            let pts = union_support(&[a, b]);
            if pts.iter().any(|p| !a.atom_at(p).approx_eq(&b.atom_at(p), tol)) {
                return Err(MotError::NumericalFailure("static parts of mu and nu differ".into()));
            }
        }
        _ => return Err(MotError::NumericalFailure("static parts of mu and nu differ".into())),
    }
    Ok(Decomposition { components, static_residue: nu_static })
}

/// Domain of an irreducible pair.
pub fn domain_of<S: Scalar>(mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>) -> Result<Domain<S>> {
    domain_of_tol(mu, nu, &S::default_tol())
}

pub fn domain_of_tol<S: Scalar>(mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>, tol: &S) -> Result<Domain<S>> {
    let decomposition = irreducible_components_tol(mu, nu, tol)?;
    let spans = || {
        decomposition
            .components
            .iter()
            .map(|c| (c.domain.left.to_f64_lossy(), c.domain.right.to_f64_lossy()))
            .collect::<Vec<_>>()
    };
    match decomposition.components.len() {
        0 => Err(MotError::NotIrreducible { reason: "{u_mu < u_nu} is empty".into(), components: vec![] }),
        1 if decomposition.static_residue.is_none() => {
            Ok(decomposition.components.into_iter().next().expect("one component").domain)
        }
        1 => Err(MotError::NotIrreducible {
            reason: "mu has mass outside {u_mu < u_nu}".into(),
            components: spans(),
        }),
        _ => Err(MotError::NotIrreducible { reason: "{u_mu < u_nu} is disconnected".into(), components: spans() }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn sym() -> DiscreteMeasure<Rational> {
        DiscreteMeasure::new(vec![q(-1, 1), q(1, 1)], vec![q(1, 2), q(1, 2)]).unwrap()
    }

    #[test]
    fn potential_values() {
        let d0 = DiscreteMeasure::dirac(0.0);
        assert_eq!(d0.potential(&3.0), 3.0);
        assert_eq!(sym().potential(&q(0, 1)), q(1, 1));
        let three = DiscreteMeasure::uniform(vec![q(-1, 1), q(0, 1), q(1, 1)]).unwrap();
        assert_eq!(three.potential(&q(1, 2)), q(5, 6));
    }

    #[test]
    fn rejects_bad_measures() {
        assert!(DiscreteMeasure::new(vec![1.0, 0.0], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![0.0], vec![-1.0]).is_err());
        assert!(DiscreteMeasure::new(vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(DiscreteMeasure::new(vec![0.0], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn from_atoms_merges() {
        let m = DiscreteMeasure::from_atoms(vec![(1.0, 0.25), (0.0, 0.5), (1.0, 0.25), (2.0, 0.0)]).unwrap();
        assert_eq!(m.support(), &[0.0, 1.0]);
        assert_eq!(m.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn convex_order_examples() {
        let d0 = DiscreteMeasure::dirac(q(0, 1));
        assert!(convex_order_leq(&d0, &sym()));
        assert!(convex_order_leq(&sym(), &sym()));
        assert!(!convex_order_leq(&sym(), &d0));
        // unequal mass
        let heavy = DiscreteMeasure::new(vec![q(0, 1)], vec![q(2, 1)]).unwrap();
        assert!(!convex_order_leq(&heavy, &sym()));
    }

    #[test]
    fn domain_of_symmetric_pair() {
        let dom = domain_of(&DiscreteMeasure::dirac(q(0, 1)), &sym()).unwrap();
        assert_eq!(dom, Domain { left: q(-1, 1), right: q(1, 1), left_closed: true, right_closed: true });
        assert!(dom.in_interior(&q(0, 1)));
        assert!(dom.is_boundary(&q(1, 1)));
        assert!(!dom.contains(&q(2, 1)));
    }

    #[test]
    fn identical_measures_are_not_irreducible() {
        let err = domain_of(&sym(), &sym()).unwrap_err();
        assert!(matches!(err, MotError::NotIrreducible { .. }));
        let dec = irreducible_components(&sym(), &sym()).unwrap();
        assert!(dec.components.is_empty());
        assert_eq!(dec.static_residue, Some(sym()));
    }

    #[test]
    fn not_in_convex_order_is_reported() {
        let err = domain_of(&sym(), &DiscreteMeasure::dirac(q(0, 1))).unwrap_err();
        assert!(matches!(err, MotError::NotInConvexOrder(_)));
    }

    /// Midpoint discretisation of the uniform law on (-2, 2) against the
    /// two-point law at -1 and 1: the potentials touch at 0.
    #[test]
    fn two_components_around_plus_minus_one() {
        let n = 8;
        let pts: Vec<Rational> = (0..2 * n).map(|k| q(-2, 1) + q(2 * k as i64 + 1, 2 * n as i64) * q(2, 1)).collect();
        let nu = DiscreteMeasure::uniform(pts).unwrap();
        let err = domain_of(&sym(), &nu).unwrap_err();
        match err {
            MotError::NotIrreducible { components, .. } => {
                assert_eq!(components.len(), 2);
                assert!(components[0].1 < 0.0 && components[1].0 > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        let dec = irreducible_components(&sym(), &nu).unwrap();
        assert_eq!(dec.components.len(), 2);
        for c in &dec.components {
            assert!(convex_order_leq(&c.mu, &c.nu));
            assert_eq!(domain_of(&c.mu, &c.nu).unwrap(), c.domain);
            assert_eq!(c.nu.mass(), q(1, 2));
        }
        assert!(dec.static_residue.is_none());
    }

    #[test]
    fn static_mass_outside_component() {
        let mu = DiscreteMeasure::new(vec![q(0, 1), q(5, 1)], vec![q(1, 2), q(1, 2)]).unwrap();
        let nu = DiscreteMeasure::new(vec![q(-1, 1), q(1, 1), q(5, 1)], vec![q(1, 4), q(1, 4), q(1, 2)]).unwrap();
        assert!(matches!(domain_of(&mu, &nu), Err(MotError::NotIrreducible { .. })));
        let dec = irreducible_components(&mu, &nu).unwrap();
        assert_eq!(dec.components.len(), 1);
        assert_eq!(dec.static_residue, Some(DiscreteMeasure::new(vec![q(5, 1)], vec![q(1, 2)]).unwrap()));
    }

    #[test]
    fn shared_boundary_atom_is_split_by_mass_balance() {
        // mu = 1/2 d_{-1} + 1/2 d_1, nu = 1/4 d_{-2} + 1/2 d_0 + 1/4 d_2
        let mu = sym();
        let nu = DiscreteMeasure::new(vec![q(-2, 1), q(0, 1), q(2, 1)], vec![q(1, 4), q(1, 2), q(1, 4)]).unwrap();
        let dec = irreducible_components(&mu, &nu).unwrap();
        assert_eq!(dec.components.len(), 2);
        assert_eq!(dec.components[0].nu.atom_at(&q(0, 1)), q(1, 4));
        assert_eq!(dec.components[1].nu.atom_at(&q(0, 1)), q(1, 4));
        assert!(dec.static_residue.is_none());
    }
}
