//! Strategies and set-algebra properties shared by the property tests and the
//! acceptance harness.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use nzpc_core::Zonotope;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

pub const TOL: f64 = 1e-9;

pub fn vector(n: usize, bound: f64) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-bound..bound, n).prop_map(DVector::from_vec)
}

pub fn matrix(rows: usize, cols: usize, bound: f64) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-bound..bound, rows * cols)
        .prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

pub fn zonotope(n: usize, max_gens: usize) -> impl Strategy<Value = Zonotope> {
    (vector(n, 10.0), 0..=max_gens)
        .prop_flat_map(move |(c, g)| (Just(c), matrix(n, g, 5.0)))
        .prop_map(|(c, g)| Zonotope::new(c, g).unwrap())
}

pub fn beta(len: usize) -> impl Strategy<Value = DVector<f64>> {
    vector(len, 1.0)
}

/// A zonotope together with a coefficient vector for one of its members.
pub fn zonotope_with_member(
    n: usize,
    max_gens: usize,
) -> impl Strategy<Value = (Zonotope, DVector<f64>)> {
    zonotope(n, max_gens).prop_flat_map(|z| {
        let g = z.num_generators();
        (Just(z), beta(g))
    })
}

pub fn pair_with_members() -> impl Strategy<Value = (Zonotope, DVector<f64>, Zonotope, DVector<f64>)>
{
    (1usize..=4)
        .prop_flat_map(|n| (zonotope_with_member(n, 6), zonotope_with_member(n, 6)))
        .prop_map(|((a, ba), (b, bb))| (a, ba, b, bb))
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg.into()))
    }
}

fn contains(z: &Zonotope, p: &DVector<f64>) -> Result<bool, TestCaseError> {
    z.contains_point(p, TOL)
        .map_err(|e| TestCaseError::fail(e.to_string()))
}

/// `a + b` contains every sum of members.
pub fn minkowski_sum_sound(
    (a, ba, b, bb): (Zonotope, DVector<f64>, Zonotope, DVector<f64>),
) -> Result<(), TestCaseError> {
    let sum = a.minkowski_sum(&b).unwrap();
    check(
        sum.num_generators() == a.num_generators() + b.num_generators(),
        "generator count",
    )?;
    let p = a.member(&ba).unwrap() + b.member(&bb).unwrap();
    check(contains(&sum, &p)?, format!("sum member {p} rejected"))
}

/// Interval hull of `D z` equals `D` applied to the hull of `z` for diagonal
/// non-negative `D`.
pub fn linear_map_commutes((z, d): (Zonotope, DVector<f64>)) -> Result<(), TestCaseError> {
    let dm = DMatrix::from_diagonal(&d.abs());
    let mapped = z.linear_map(&dm).unwrap().to_interval();
    let hull = z.to_interval();
    for i in 0..z.dim() {
        let s = d[i].abs();
        let lo = s * hull.lower()[i];
        let hi = s * hull.upper()[i];
        let scale = 1.0 + lo.abs().max(hi.abs());
        check(
            (mapped.lower()[i] - lo).abs() <= 1e-12 * scale,
            "lower bound",
        )?;
        check(
            (mapped.upper()[i] - hi).abs() <= 1e-12 * scale,
            "upper bound",
        )?;
    }
    Ok(())
}

pub fn diag_map_case() -> impl Strategy<Value = (Zonotope, DVector<f64>)> {
    (1usize..=5).prop_flat_map(|n| (zonotope(n, 8), vector(n, 3.0)))
}

/// Members, and every point accepted by the LP, lie in the interval hull.
pub fn interval_hull_sound(
    (z, b, p): (Zonotope, DVector<f64>, DVector<f64>),
) -> Result<(), TestCaseError> {
    let hull = z.to_interval();
    let m = z.member(&b).unwrap();
    check(contains(&z, &m)?, "member rejected")?;
    check(hull.contains(&m, 1e-12), "member outside hull")?;
    if contains(&z, &p)? {
        check(hull.contains(&p, 1e-8), "accepted point outside hull")?;
    }
    Ok(())
}

pub fn hull_case() -> impl Strategy<Value = (Zonotope, DVector<f64>, DVector<f64>)> {
    (1usize..=4).prop_flat_map(|n| {
        zonotope_with_member(n, 6).prop_flat_map(move |(z, b)| (Just(z), Just(b), vector(n, 20.0)))
    })
}

/// Order reduction keeps every member.
pub fn reduce_order_monotone(
    (z, b, max): (Zonotope, DVector<f64>, usize),
) -> Result<(), TestCaseError> {
    let max = max.max(z.dim());
    let reduced = z.reduce_order(max).unwrap();
    check(
        reduced.num_generators() <= max.max(z.num_generators().min(max)),
        "generator bound",
    )?;
    let p = z.member(&b).unwrap();
    check(contains(&reduced, &p)?, "member lost by reduction")?;
    check(
        reduced.to_interval().encloses(&z.to_interval(), 1e-9),
        "hull shrank",
    )
}

pub fn reduce_case() -> impl Strategy<Value = (Zonotope, DVector<f64>, usize)> {
    (1usize..=4)
        .prop_flat_map(|n| (zonotope_with_member(n, 10), n..=10))
        .prop_map(|((z, b), m)| (z, b, m))
}

/// `a × b` projects back onto `a` and `b`, and contains stacked members.
pub fn cartesian_projection(
    (a, ba, b, bb): (Zonotope, DVector<f64>, Zonotope, DVector<f64>),
) -> Result<(), TestCaseError> {
    let prod = a.cartesian_product(&b);
    let (n, m) = (a.dim(), b.dim());
    check(prod.dim() == n + m, "dimension")?;
    let mut top = DMatrix::zeros(n, n + m);
    top.view_mut((0, 0), (n, n)).fill_with_identity();
    let mut bottom = DMatrix::zeros(m, n + m);
    bottom.view_mut((0, n), (m, m)).fill_with_identity();
    let pa = prod.linear_map(&top).unwrap();
    let pb = prod.linear_map(&bottom).unwrap();
    check(
        pa.center() == a.center() && pb.center() == b.center(),
        "projected centers",
    )?;
    check(pa.to_interval() == a.to_interval(), "first projection hull")?;
    check(
        pb.to_interval() == b.to_interval(),
        "second projection hull",
    )?;
    let mut stacked = DVector::zeros(n + m);
    stacked.rows_mut(0, n).copy_from(&a.member(&ba).unwrap());
    stacked.rows_mut(n, m).copy_from(&b.member(&bb).unwrap());
    check(contains(&prod, &stacked)?, "stacked member rejected")
}

pub fn product_case() -> impl Strategy<Value = (Zonotope, DVector<f64>, Zonotope, DVector<f64>)> {
    (1usize..=3, 1usize..=3)
        .prop_flat_map(|(n, m)| (zonotope_with_member(n, 5), zonotope_with_member(m, 5)))
        .prop_map(|((a, ba), (b, bb))| (a, ba, b, bb))
}

/// Points pushed beyond the interval hull are rejected by the LP.
pub fn outside_hull_rejected((z, dir): (Zonotope, DVector<f64>)) -> Result<(), TestCaseError> {
    let hull = z.to_interval();
    let i = dir.iamax();
    let mut p = z.center().clone();
    p[i] = if dir[i] >= 0.0 {
        hull.upper()[i] + 0.1 + dir[i].abs()
    } else {
        hull.lower()[i] - 0.1 - dir[i].abs()
    };
    check(!contains(&z, &p)?, "point outside hull accepted")
}

pub fn outside_case() -> impl Strategy<Value = (Zonotope, DVector<f64>)> {
    (1usize..=4).prop_flat_map(|n| (zonotope(n, 6), vector(n, 1.0)))
}
