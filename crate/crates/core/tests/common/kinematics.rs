//! Independent kinematics checks: a homogeneous-matrix FK chain, central
//! differences of the wrist frame and an IK convergence sweep.

use manibench_core::rng::{Stream, StreamRng};
use manibench_core::robot::ik::{solve, IkConfig};
use manibench_core::robot::{
    forward_kinematics, wrist_frame, wrist_jacobian, Effector, JointKind, RobotSpec, IK_DOF, SHIPPED_ROBOTS,
};
use manibench_core::{Frame, RotVec, Transform, Vec3};

type M4 = [[f64; 4]; 4];

const EYE: M4 = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]];

fn mul(a: &M4, b: &M4) -> M4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

/// Rodrigues rotation about `[x, y, z]` (angle = norm).
fn rot(v: [f64; 3]) -> M4 {
    let theta = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let mut m = EYE;
    if theta == 0.0 {
        return m;
    }
    let k = [v[0] / theta, v[1] / theta, v[2] / theta];
    let (s, c) = theta.sin_cos();
    let t = 1.0 - c;
    m[0][0] = c + k[0] * k[0] * t;
    m[0][1] = k[0] * k[1] * t - k[2] * s;
    m[0][2] = k[0] * k[2] * t + k[1] * s;
    m[1][0] = k[1] * k[0] * t + k[2] * s;
    m[1][1] = c + k[1] * k[1] * t;
    m[1][2] = k[1] * k[2] * t - k[0] * s;
    m[2][0] = k[2] * k[0] * t - k[1] * s;
    m[2][1] = k[2] * k[1] * t + k[0] * s;
    m[2][2] = c + k[2] * k[2] * t;
    m
}

fn trans(v: [f64; 3]) -> M4 {
    let mut m = EYE;
    for r in 0..3 {
        m[r][3] = v[r];
    }
    m
}

fn pose(t: &Transform) -> M4 {
    mul(&trans(t.translation.to_array()), &rot(t.rotation.0.to_array()))
}

fn joint(kind: JointKind, axis: Vec3, q: f64) -> M4 {
    let a = axis.to_array();
    let s = [a[0] * q, a[1] * q, a[2] * q];
    match kind {
        JointKind::Revolute => rot(s),
        JointKind::Prismatic => trans(s),
    }
}

fn origin(m: &M4) -> [f64; 3] {
    [m[0][3], m[1][3], m[2][3]]
}

struct Oracle {
    wrist: M4,
    palm: M4,
    points: Vec<[f64; 3]>,
}

fn oracle(spec: &RobotSpec, anchor: &Transform, q: &[f64]) -> Oracle {
    let mut m = pose(anchor);
    m = mul(&m, &joint(JointKind::Revolute, Vec3::Z, q[0]));
    m = mul(&m, &joint(JointKind::Prismatic, Vec3::Y, q[1]));
    m = mul(&m, &pose(&spec.base.mount));
    for (j, v) in spec.arm.iter().zip(&q[2..IK_DOF]) {
        m = mul(&m, &pose(&j.offset));
        m = mul(&m, &joint(j.kind, j.axis, *v));
    }
    let wrist = m;
    let palm = mul(&wrist, &pose(&spec.palm_offset));
    let qe = &q[IK_DOF..];
    let mut points = Vec::new();
    match &spec.effector {
        Effector::Gripper(g) => {
            let half = g.open_half_width - qe[0];
            for p in &g.hand_points {
                let local = g.slide_axis * (p.side * half) + p.offset;
                points.push(origin(&mul(&palm, &trans(local.to_array()))));
            }
        }
        Effector::Hand(h) => {
            let mut k = 0;
            for f in &h.fingers {
                let mut m = mul(&palm, &pose(&f.base));
                for j in &f.joints {
                    m = mul(&m, &pose(&j.offset));
                    m = mul(&m, &joint(j.kind, j.axis, qe[k]));
                    k += 1;
                }
                points.push(origin(&mul(&m, &trans(f.tip.to_array()))));
            }
        }
    }
    Oracle { wrist, palm, points }
}

fn max_frame_err(f: &Frame, m: &M4) -> f64 {
    let mut e: f64 = 0.0;
    for r in 0..3 {
        e = e.max((f.origin[r] - m[r][3]).abs());
        for c in 0..3 {
            e = e.max((f.rotation.0[r][c] - m[r][c]).abs());
        }
    }
    e
}

fn random_q(spec: &RobotSpec, rng: &mut StreamRng, margin: f64) -> Vec<f64> {
    spec.joint_limits()
        .iter()
        .map(|l| {
            let pad = (l.upper - l.lower) * margin;
            rng.uniform_range(l.lower + pad, l.upper - pad)
        })
        .collect()
}

fn random_anchor(rng: &mut StreamRng) -> Transform {
    Transform::new(
        Vec3::new(rng.uniform_range(-2.0, 2.0), rng.uniform_range(-2.0, 2.0), 0.0),
        RotVec::new(0.0, 0.0, rng.uniform_range(-3.0, 3.0)),
    )
}

pub fn robots() -> Vec<RobotSpec> {
    SHIPPED_ROBOTS.iter().map(|n| RobotSpec::by_name(n).unwrap()).collect()
}

/// Largest deviation of wrist, palm and hand points from the matrix chain.
pub fn fk_error(spec: &RobotSpec, anchor: &Transform, q: &[f64]) -> f64 {
    let k = forward_kinematics(spec, anchor, q).unwrap();
    let o = oracle(spec, anchor, q);
    assert_eq!(k.hand_points.len(), o.points.len());
    let mut worst = max_frame_err(&k.wrist, &o.wrist).max(max_frame_err(&k.palm, &o.palm));
    for (h, p) in k.hand_points.iter().zip(&o.points) {
        worst = worst.max(h.origin.distance(Vec3::from_slice(p)));
    }
    worst
}

/// Worst FK error over `n` random configurations and anchors.
pub fn worst_fk_error(spec: &RobotSpec, n: usize) -> f64 {
    let mut rng = StreamRng::new(11, 0, Stream::Reset);
    (0..n)
        .map(|_| {
            let q = random_q(spec, &mut rng, 0.0);
            let anchor = random_anchor(&mut rng);
            fk_error(spec, &anchor, &q)
        })
        .fold(0.0, f64::max)
}

/// Worst relative Jacobian error over `n` random configurations.
pub fn worst_jacobian_error(spec: &RobotSpec, n: usize) -> f64 {
    let mut rng = StreamRng::new(12, 0, Stream::Reset);
    (0..n)
        .map(|_| {
            let q = random_q(spec, &mut rng, 0.0);
            let anchor = random_anchor(&mut rng);
            jacobian_error(spec, &anchor, &q)
        })
        .fold(0.0, f64::max)
}


/// Angular velocity taking `from` to `to` over unit time: log(to · fromᵀ).
fn rotation_delta(to: &Frame, from: &Frame) -> Vec3 {
    RotVec::from_matrix(&(to.rotation * from.rotation.transpose())).0
}

pub fn jacobian_error(spec: &RobotSpec, anchor: &Transform, q: &[f64]) -> f64 {
    let h = 1e-6;
    let jac = wrist_jacobian(spec, anchor, q).unwrap();
    let (mut diff, mut norm) = (0.0, 0.0);
    for c in 0..IK_DOF {
        let mut qp = q.to_vec();
        let mut qm = q.to_vec();
        qp[c] += h;
        qm[c] -= h;
        let fp = wrist_frame(spec, anchor, &qp).unwrap();
        let fm = wrist_frame(spec, anchor, &qm).unwrap();
        let lin = (fp.origin - fm.origin) * (0.5 / h);
        let ang = rotation_delta(&fp, &fm) * (0.5 / h);
        for r in 0..3 {
            diff += (jac[r][c] - lin[r]).powi(2) + (jac[r + 3][c] - ang[r]).powi(2);
            norm += lin[r].powi(2) + ang[r].powi(2);
        }
    }
    (diff / norm).sqrt()
}


fn random_unit(rng: &mut StreamRng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.normal(), rng.normal(), rng.normal());
        if v.norm() > 1e-6 {
            return v.normalized();
        }
    }
}

/// Fraction of small wrist displacements solved to a 0.1 mm residual.
pub fn ik_success(spec: &RobotSpec, trials: usize) -> f64 {
    let mut rng = StreamRng::new(13, 0, Stream::Reset);
    let cfg = IkConfig::default();
    let mut ok = 0;
    for _ in 0..trials {
        let q = random_q(spec, &mut rng, 0.1);
        let anchor = random_anchor(&mut rng);
        let wrist = wrist_frame(spec, &anchor, &q).unwrap();
        let dp = random_unit(&mut rng) * rng.uniform_range(0.0, 0.02);
        let dr = RotVec::from_axis_angle(random_unit(&mut rng), rng.uniform_range(0.0, 0.05));
        let target = Frame::new(dr.to_matrix() * wrist.rotation, wrist.origin + dp);
        let out = solve(spec, &anchor, &q, &target, &[true; IK_DOF], &cfg).unwrap();
        if out.position_residual < 1e-4 && out.iterations <= 50 {
            ok += 1;
        }
    }
    ok as f64 / trials as f64
}

