use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::bell::{dot, BlochVector};

/// Shared hidden variable: a point on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HiddenVariable {
    pub lambda: [f64; 3],
}

/// Uniform point on S² from three normalized standard normals.
pub fn sample_sphere<R: Rng + ?Sized>(rng: &mut R) -> HiddenVariable {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let n2 = dot(v, v);
        if n2 > 1e-300 {
            let n = n2.sqrt();
            return HiddenVariable {
                lambda: [v[0] / n, v[1] / n, v[2] / n],
            };
        }
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j - 1) as f64 * z * p2 - (j - 1) as f64 * p3) / j as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

const NODES_PER_PIECE: usize = 48;

/// Deterministic quadrature of
/// `−(1/2π) ∫ |x·λ| sign(x·λ) sign(y·λ) dλ` over the unit sphere.
///
/// In coordinates with `x` as the pole, `u = x·λ`, the azimuthal integral of
/// `sign(y·λ)` has a closed form, leaving a one-dimensional integral in `u`
/// with kinks at `u = 0, ±|y_⊥|`. Each smooth piece is integrated with
/// Gauss–Legendre after the substitution `u = a + (b − a)(1 − cos t)/2`,
/// which absorbs the square-root behaviour at the kinks.
pub fn sphere_quadrature_correlator(x: BlochVector, y: BlochVector) -> f64 {
    let (xv, yv) = (x.components(), y.components());
    let y_par = dot(xv, yv);
    let perp = [0, 1, 2].map(|i| yv[i] - y_par * xv[i]);
    let y_perp = dot(perp, perp).sqrt();

    let azimuthal = |u: f64| -> f64 {
        let along = y_par * u;
        let across = y_perp * (1.0 - u * u).max(0.0).sqrt();
        if across <= along.abs() {
            if along == 0.0 {
                0.0
            } else {
                2.0 * PI * along.signum()
            }
        } else {
            let c = along / across;
            4.0 * (-c).acos() - 2.0 * PI
        }
    };

    let mut breaks = vec![-1.0, -y_perp, 0.0, y_perp, 1.0];
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-15);

    let (nodes, weights) = gauss_legendre(NODES_PER_PIECE);
    let mut integral = 0.0;
    for piece in breaks.windows(2) {
        let (a, b) = (piece[0], piece[1]);
        let mut acc = 0.0;
        for (&node, &weight) in nodes.iter().zip(&weights) {
            let t = 0.5 * PI * (node + 1.0);
            let u = a + 0.5 * (b - a) * (1.0 - t.cos());
            let du = 0.5 * (b - a) * t.sin();
            acc += weight * u * azimuthal(u) * du;
        }
        integral += acc * 0.5 * PI;
    }
    -integral / (2.0 * PI)
}
