//! Seeded generators for irreducible pairs and payoffs on a 1/8 lattice.
#![allow(dead_code)]

use mot_core::convexfn::PiecewiseLinearFn;
use mot_core::measures::DiscreteMeasure;
use mot_core::{Rational, Scalar};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn q(n: i64, d: i64) -> Rational {
    Rational::ratio(n, d)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Lattice point `k / 8`.
pub fn eighth(k: i64) -> Rational {
    q(k, 8)
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub mu: DiscreteMeasure<Rational>,
    pub nu: DiscreteMeasure<Rational>,
    /// `I = (left, right)`, both endpoints atoms of `nu`.
    pub left: Rational,
    pub right: Rational,
}

impl Instance {
    pub fn mu_f64(&self) -> DiscreteMeasure<f64> {
        self.mu.to_f64()
    }

    pub fn nu_f64(&self) -> DiscreteMeasure<f64> {
        self.nu.to_f64()
    }
}

/// `mu` with up to `max_mu` atoms inside `(left, right)`; `nu` sends a
/// quarter of every atom to the two endpoints and spreads the rest over two
/// random points, so `u_mu < u_nu` on all of `(left, right)`.
pub fn irreducible_pair<R: Rng>(rng: &mut R, max_mu: usize) -> Instance {
    let half_width = rng.gen_range(12..=24i64);
    let (lk, rk) = (-half_width, half_width);
    let (left, right) = (eighth(lk), eighth(rk));
    let n = rng.gen_range(1..=max_mu);
    let mut xs: Vec<i64> = Vec::new();
    while xs.len() < n {
        let k = rng.gen_range(lk + 1..rk);
        if !xs.contains(&k) {
            xs.push(k);
        }
    }
    xs.sort_unstable();
    let raw: Vec<i64> = xs.iter().map(|_| rng.gen_range(1..=5)).collect();
    let total: i64 = raw.iter().sum();
    let mut mu_atoms = Vec::new();
    let mut nu_atoms = Vec::new();
    let width = right.clone() - left.clone();
    for (&k, &r) in xs.iter().zip(&raw) {
        let (x, w) = (eighth(k), q(r, total));
        mu_atoms.push((x.clone(), w.clone()));
        let edge = w.clone() * q(1, 4);
        nu_atoms.push((left.clone(), edge.clone() * (right.clone() - x.clone()) / width.clone()));
        nu_atoms.push((right.clone(), edge * (x.clone() - left.clone()) / width.clone()));
        let rest = w * q(3, 4);
        if rng.gen_bool(0.25) {
            nu_atoms.push((x, rest));
            continue;
        }
        let a = rng.gen_range(1..=(k - lk).min(10));
        let b = rng.gen_range(1..=(rk - k).min(10));
        let (lo, hi) = (eighth(k - a), eighth(k + b));
        nu_atoms.push((lo, rest.clone() * q(b, a + b)));
        nu_atoms.push((hi, rest * q(a, a + b)));
    }
    Instance {
        mu: DiscreteMeasure::from_atoms(mu_atoms).unwrap(),
        nu: DiscreteMeasure::from_atoms(nu_atoms).unwrap(),
        left,
        right,
    }
}

/// Random lattice point strictly inside `(left, right)`.
pub fn interior_point<R: Rng>(rng: &mut R, inst: &Instance) -> Rational {
    let lk = (inst.left.clone() * q(8, 1)).to_integer();
    let rk = (inst.right.clone() * q(8, 1)).to_integer();
    let (lk, rk): (i64, i64) = (lk.try_into().unwrap(), rk.try_into().unwrap());
    eighth(rng.gen_range(lk + 1..rk))
}

/// Nonnegative piecewise-linear payoff with flat tails and 2..=6 lattice
/// breakpoints near the hull of the instance.
pub fn nonnegative_payoff<R: Rng>(rng: &mut R, inst: &Instance) -> PiecewiseLinearFn<Rational> {
    let lk: i64 = (inst.left.clone() * q(8, 1)).to_integer().try_into().unwrap();
    let rk: i64 = (inst.right.clone() * q(8, 1)).to_integer().try_into().unwrap();
    let k = rng.gen_range(2..=6);
    let mut pts: Vec<i64> = Vec::new();
    while pts.len() < k {
        let p = rng.gen_range(lk - 4..=rk + 4);
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    pts.sort_unstable();
    let values = pts.iter().map(|_| eighth(rng.gen_range(0..=24))).collect();
    PiecewiseLinearFn::new(pts.into_iter().map(eighth).collect(), values, q(0, 1), q(0, 1)).unwrap()
}

/// Draw from `[-1, 1]`, snapped to multiples of 1/16.
pub fn small<R: Rng>(rng: &mut R) -> Rational {
    q(rng.gen_range(-16..=16), 16)
}

pub fn f64_payoff(f: &PiecewiseLinearFn<Rational>) -> PiecewiseLinearFn<f64> {
    f.to_f64()
}

pub fn as_f64(x: &Rational) -> f64 {
    x.to_f64_lossy()
}

/// `intercept + slope x + sum c_k |x - g_k|` with all `c_k` of sign `sign`,
/// kinks on the lattice inside `(left, right)`.
pub fn random_shape<R: Rng>(rng: &mut R, inst: &Instance, sign: i64) -> PiecewiseLinearFn<Rational> {
    let k = rng.gen_range(0..=4);
    let terms: Vec<(Rational, Rational)> = (0..k)
        .map(|_| (interior_point(rng, inst), q(sign * rng.gen_range(1..=16), 8)))
        .collect();
    PiecewiseLinearFn::abs_combination(&terms, small(rng), small(rng))
}

/// Concave with nonpositive jumps at the endpoints of `J`.
pub fn random_concave<R: Rng>(rng: &mut R, inst: &Instance) -> PiecewiseLinearFn<Rational> {
    let mut f = random_shape(rng, inst, -1);
    for b in [inst.left.clone(), inst.right.clone()] {
        if rng.gen_bool(0.3) {
            f = f.with_offset(b, q(-rng.gen_range(1..=8), 8));
        }
    }
    f
}

/// Convex with nonnegative jumps at the endpoints of `J`.
pub fn random_convex<R: Rng>(rng: &mut R, inst: &Instance) -> PiecewiseLinearFn<Rational> {
    let mut f = random_shape(rng, inst, 1);
    for b in [inst.left.clone(), inst.right.clone()] {
        if rng.gen_bool(0.3) {
            f = f.with_offset(b, q(rng.gen_range(1..=8), 8));
        }
    }
    f
}

/// Step path on `[0, 1]` starting at a lattice point of `I`, jumping at up
/// to four times from the 1/16 lattice, staying in `J` and absorbed at its
/// endpoints.
pub fn random_path<R: Rng>(rng: &mut R, inst: &Instance) -> mot_core::hedging::SteppedPath<Rational> {
    let lk: i64 = (inst.left.clone() * q(8, 1)).to_integer().try_into().unwrap();
    let rk: i64 = (inst.right.clone() * q(8, 1)).to_integer().try_into().unwrap();
    let mut times = vec![q(0, 1)];
    let mut values = vec![interior_point(rng, inst)];
    let jumps = rng.gen_range(0..=4);
    let mut marks: Vec<i64> = (0..jumps).map(|_| rng.gen_range(1..=16)).collect();
    marks.sort_unstable();
    marks.dedup();
    for m in marks {
        let last = values.last().unwrap().clone();
        let next = if last == inst.left || last == inst.right { last } else { eighth(rng.gen_range(lk..=rk)) };
        times.push(q(m, 16));
        values.push(next);
    }
    mot_core::hedging::SteppedPath::new(times, values, q(1, 1)).unwrap()
}

pub fn path_f64(p: &mot_core::hedging::SteppedPath<Rational>) -> mot_core::hedging::SteppedPath<f64> {
    mot_core::hedging::SteppedPath::new(
        p.times().iter().map(as_f64).collect(),
        p.values().iter().map(as_f64).collect(),
        as_f64(p.horizon()),
    )
    .unwrap()
}

/// Mean-preserving spread of every atom of `m` onto two lattice points at
/// most `reach` eighths away.
pub fn spread<R: Rng>(rng: &mut R, m: &DiscreteMeasure<Rational>, reach: i64) -> DiscreteMeasure<Rational> {
    let mut atoms = Vec::new();
    for (x, w) in m.atoms() {
        if rng.gen_bool(0.3) {
            atoms.push((x.clone(), w.clone()));
            continue;
        }
        let (a, b) = (rng.gen_range(1..=reach), rng.gen_range(1..=reach));
        atoms.push((x.clone() - eighth(a), w.clone() * q(b, a + b)));
        atoms.push((x.clone() + eighth(b), w.clone() * q(a, a + b)));
    }
    DiscreteMeasure::from_atoms(atoms).unwrap()
}

pub fn domain(inst: &Instance) -> mot_core::measures::Domain<Rational> {
    mot_core::measures::Domain::new(inst.left.clone(), inst.right.clone(), true, true).unwrap()
}

/// One of the averaging variants on `[0, 1]`.
pub fn random_averaging<R: Rng>(rng: &mut R) -> mot_core::simulation::AveragingProcess<Rational> {
    use mot_core::simulation::AveragingProcess;
    match rng.gen_range(0..5) {
        0 => AveragingProcess::Asian,
        1 => AveragingProcess::FixedTime(q(rng.gen_range(0..=16), 16)),
        2 => AveragingProcess::EuropeanAt(q(rng.gen_range(1..16), 16)),
        3 => AveragingProcess::TerminalHalf,
        _ => {
            let (a, b) = (rng.gen_range(0..=16), rng.gen_range(0..=16));
            AveragingProcess::CustomAtoms(vec![(q(a, 16), q(1, 4)), (q(b, 16), q(1, 2)), (q(1, 1), q(1, 4))])
        }
    }
}

pub fn averaging_f64(
    a: &mot_core::simulation::AveragingProcess<Rational>,
) -> mot_core::simulation::AveragingProcess<f64> {
    use mot_core::simulation::AveragingProcess as A;
    match a {
        A::Asian => A::Asian,
        A::FixedTime(t) => A::FixedTime(as_f64(t)),
        A::EuropeanAt(t) => A::EuropeanAt(as_f64(t)),
        A::TerminalHalf => A::TerminalHalf,
        A::CustomAtoms(v) => A::CustomAtoms(v.iter().map(|(t, m)| (as_f64(t), as_f64(m))).collect()),
    }
}

pub fn domain_f64(d: &mot_core::measures::Domain<Rational>) -> mot_core::measures::Domain<f64> {
    mot_core::measures::Domain::new(as_f64(&d.left), as_f64(&d.right), d.left_closed, d.right_closed).unwrap()
}
