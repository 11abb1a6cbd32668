//! Numerical reference for the inverse projection.
//!
//! Projected gradient descent minimizes `‖x − y‖²` over a parametric
//! description of `π⁻¹(ψ(R_g))` with the sign constraints relaxed:
//!
//! * quaternion: `y = k·q_g`
//! * 6D: `y = [k₁·u_g, k₂·u_g + k₃·v_g]`
//! * 9D: `y = S·R_g` with `S` symmetric
//! * 10D: `A(y)·q_g = μ·q_g` for some `μ`
//!
//! None of this shares code with the closed forms it checks.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use rotgrad_core::lin::{eig_sym4, Mat3, Vec3};
use rotgrad_core::repr::params_to_sym4;
use rotgrad_core::so3::{rot_to_quat, sample_uniform_rotation};
use rotgrad_core::{representation_map, Projection, RawOutput, RepKind, Rotation};

pub const ORACLE_STEPS: usize = 10_000;
pub const ORACLE_STEP: f64 = 1e-3;

/// Scale of the 10D multiplier coordinate. Descending on `ν = μ/MU_SCALE`
/// keeps the curvature along the multiplier direction near that of the
/// other directions, so the fixed step budget converges.
const MU_SCALE: f64 = 10.0;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Closest point of the relaxed inverse image, found numerically.
pub fn projection_oracle(x: &RawOutput<f64>, r_g: &Rotation<f64>) -> Vec<f64> {
    let v = x.values();
    match x.rep() {
        RepKind::Euler3 | RepKind::AxisAngle3 => representation_map(r_g, x.rep()).embed(),
        RepKind::Quat4 => {
            let q = *rot_to_quat(r_g).coords();
            let mut k = 0.0;
            for _ in 0..ORACLE_STEPS {
                let d: f64 = (0..4).map(|i| (v[i] - k * q[i]) * q[i]).sum();
                k += ORACLE_STEP * 2.0 * d;
            }
            q.0.iter().map(|qi| k * qi).collect()
        }
        RepKind::SixD => {
            let (u, w) = (r_g.matrix().col(0), r_g.matrix().col(1));
            let (a, b) = (Vec3::from_fn(|i| v[i]), Vec3::from_fn(|i| v[3 + i]));
            let mut k = [0.0; 3];
            for _ in 0..ORACLE_STEPS {
                let ra = a - u * k[0];
                let rb = b - u * k[1] - w * k[2];
                k[0] += ORACLE_STEP * 2.0 * ra.dot(&u);
                k[1] += ORACLE_STEP * 2.0 * rb.dot(&u);
                k[2] += ORACLE_STEP * 2.0 * rb.dot(&w);
            }
            let y1 = u * k[0];
            let y2 = u * k[1] + w * k[2];
            y1.0.iter().chain(y2.0.iter()).copied().collect()
        }
        RepKind::NineD => {
            let xm = Mat3::from_row_slice(v).expect("nine values");
            let rg = *r_g.matrix();
            let mut s = Mat3::zeros();
            for _ in 0..ORACLE_STEPS {
                let grad = (xm - s * rg) * rg.transpose() * -2.0;
                s = (s - grad * ORACLE_STEP).symmetric_part();
            }
            (s * rg).to_row_vec()
        }
        RepKind::TenD => project_10d_numeric(v, &rot_to_quat(r_g).coords().0),
    }
}

/// Rows of `N` with `N·(y, ν) = A(y)·q − MU_SCALE·ν·q`.
fn constraint_rows(q: &[f64; 4]) -> Vec<[f64; 11]> {
    let mut rows = Vec::with_capacity(4);
    for r in 0..4 {
        let mut row = [0.0; 11];
        // Coefficient of θ_p in (A(θ)q)_r, from the upper-triangle layout.
        let mut p = 0;
        for i in 0..4 {
            for j in i..4 {
                if i == r {
                    row[p] += q[j];
                }
                if j == r && i != j {
                    row[p] += q[i];
                }
                p += 1;
            }
        }
        row[10] = -MU_SCALE * q[r];
        rows.push(row);
    }
    rows
}

fn project_10d_numeric(x: &[f64], q: &[f64; 4]) -> Vec<f64> {
    // Orthonormal basis of the row space; subtracting it projects onto the
    // feasible subspace.
    let mut basis: Vec<[f64; 11]> = Vec::new();
    for mut row in constraint_rows(q) {
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&row, b);
                row.iter_mut().zip(b).for_each(|(r, bi)| *r -= c * bi);
            }
        }
        let n = dot(&row, &row).sqrt();
        if n > 1e-12 {
            basis.push(row.map(|r| r / n));
        }
    }
    let project = |z: &mut [f64; 11]| {
        for b in &basis {
            let c = dot(z, b);
            z.iter_mut().zip(b).for_each(|(zi, bi)| *zi -= c * bi);
        }
    };
    let mut z = [0.0; 11];
    z[..10].copy_from_slice(x);
    project(&mut z);
    for _ in 0..ORACLE_STEPS {
        let mut step = [0.0; 11];
        for i in 0..10 {
            step[i] = ORACLE_STEP * 2.0 * (x[i] - z[i]);
        }
        project(&mut step);
        z.iter_mut().zip(&step).for_each(|(zi, s)| *zi += s);
    }
    z[..10].to_vec()
}

/// Whether the closed-form projection lands where the sign and ordering
/// constraints of the inverse image hold, so `π(x_gp)` must be the goal.
pub fn satisfies_constraints(x: &RawOutput<f64>, r_g: &Rotation<f64>, p: &Projection<f64>) -> bool {
    let v = x.values();
    match x.rep() {
        RepKind::Euler3 | RepKind::AxisAngle3 => true,
        RepKind::Quat4 => dot(v, &p.goal) > 0.0,
        RepKind::SixD => {
            let (u, w) = (r_g.matrix().col(0), r_g.matrix().col(1));
            let (a, b) = (Vec3::from_fn(|i| v[i]), Vec3::from_fn(|i| v[3 + i]));
            a.dot(&u) > 0.0 && b.dot(&w) > 0.0
        }
        RepKind::NineD => {
            let s = Mat3::from_row_slice(&p.x_gp).expect("nine values") * r_g.matrix().transpose();
            match rotgrad_core::lin::eig_sym(&s.symmetric_part()) {
                Ok(e) => e.values[0] > 1e-9,
                Err(_) => false,
            }
        }
        RepKind::TenD => {
            let Some(mu) = p.lambda_eig else { return false };
            match eig_sym4(&params_to_sym4(&p.x_gp)) {
                Ok(e) => {
                    let scale = e.values[3].abs().max(e.values[0].abs()).max(1.0);
                    (e.values[0] - mu).abs() <= 1e-9 * scale && e.values[1] - e.values[0] > 1e-6 * scale
                }
                Err(_) => false,
            }
        }
    }
}

/// Angle between `x` and the embedded goal, in radians.
pub fn ambient_angle(x: &[f64], goal: &[f64]) -> f64 {
    let c = dot(x, goal) / (dot(x, x).sqrt() * dot(goal, goal).sqrt());
    c.clamp(-1.0, 1.0).acos()
}

/// A random raw output within `max_angle` of the embedded goal of a random
/// rotation, with a well-defined manifold image.
pub fn sample_case<R: Rng + ?Sized>(rep: RepKind, max_angle: f64, rng: &mut R) -> (RawOutput<f64>, Rotation<f64>) {
    loop {
        let r_g: Rotation<f64> = sample_uniform_rotation(rng);
        let e = representation_map(&r_g, rep).embed();
        let n = rep.ambient_dim();
        let en = dot(&e, &e).sqrt();
        let scale: f64 = rng.random_range(0.3..2.0);
        let sigma: f64 = rng.random_range(0.0..1.2) * en / (n as f64).sqrt();
        let sign = if rep == RepKind::Quat4 && rng.random_bool(0.5) { -1.0 } else { 1.0 };
        let x: Vec<f64> = e
            .iter()
            .map(|&ei| {
                let z: f64 = StandardNormal.sample(rng);
                sign * scale * ei + sigma * z
            })
            .collect();
        let Ok(raw) = RawOutput::new(rep, x) else { continue };
        let goal = rotgrad_core::rpmg::goal_embedding(&raw, &r_g);
        if ambient_angle(raw.values(), &goal) >= max_angle || rotgrad_core::baseline_rotation(&raw).is_err() {
            continue;
        }
        return (raw, r_g);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Stream};
    use rotgrad_core::inverse_project;

    #[test]
    fn quat_oracle_example() {
        let x = RawOutput::new(RepKind::Quat4, vec![1.0, 1.0, 0.0, 0.0]).unwrap();
        let y = projection_oracle(&x, &Rotation::identity());
        assert!((y[0] - 1.0).abs() < 1e-8 && y[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn oracle_points_lie_in_the_inverse_image() {
        let mut g = stream(0, Stream::Checks);
        for rep in RepKind::MANIFOLD {
            for _ in 0..5 {
                let (x, rg) = sample_case(rep, std::f64::consts::FRAC_PI_3, &mut g);
                let y = projection_oracle(&x, &rg);
                // The oracle point projected again is itself.
                let p = inverse_project(&RawOutput::new(rep, y.clone()).unwrap(), &rg).unwrap();
                let d: f64 = p.x_gp.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!(d < 1e-6, "{rep}: {d}");
            }
        }
    }

    #[test]
    fn sampled_cases_respect_the_angle_bound() {
        let mut g = stream(1, Stream::Checks);
        for rep in RepKind::MANIFOLD {
            for _ in 0..20 {
                let (x, rg) = sample_case(rep, 0.5, &mut g);
                let goal = rotgrad_core::rpmg::goal_embedding(&x, &rg);
                assert!(ambient_angle(x.values(), &goal) < 0.5);
            }
        }
    }
}
