//! Line geometry in `RP^3` through Plücker coordinates: real transversals to
//! four lines, and Monte Carlo counts of them for random lines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geomlin::{Frame, RngStream};
use crate::stats::{mc_mean, Estimate, McConfig};
use crate::stats::tags;

/// Maximal allowed `|Q(p)|` of a unit Plücker vector.
pub const QUADRIC_TOL: f64 = 1e-10;
/// Rank threshold of the pairing system, relative to the largest singular value.
pub const KERNEL_RANK_TOL: f64 = 1e-10;
/// Default tangency tolerance: `|disc| < tol · (max coefficient)²` is a tangency.
pub const DEFAULT_TANGENCY_TOL: f64 = 1e-12;
/// Largest `r_1 r_2 r_3 r_4` accepted by [`rig_union_of_lines_mc`].
pub const MAX_RIG_PRODUCT: usize = 1000;

/// Unit Plücker vector `(p01, p02, p03, p12, p13, p23)` of a line in `RP^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PluckerLine {
    pub p: [f64; 6],
}

/// `p01 p23 − p02 p13 + p03 p12`; zero exactly on the Klein quadric.
#[inline]
pub fn klein_quadric(p: &[f64; 6]) -> f64 {
    p[0] * p[5] - p[1] * p[4] + p[2] * p[3]
}

#[inline]
fn pairing(p: &[f64; 6], q: &[f64; 6]) -> f64 {
    p[0] * q[5] - p[1] * q[4] + p[2] * q[3] + p[3] * q[2] - p[4] * q[1] + p[5] * q[0]
}

impl PluckerLine {
    /// Normalizes `p` and checks that it lies on the Klein quadric.
    pub fn new(p: [f64; 6]) -> Result<Self> {
        let nrm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::Dimension("zero or non-finite Plücker vector".into()));
        }
        let p = p.map(|x| x / nrm);
        let res = klein_quadric(&p);
        if res.abs() > QUADRIC_TOL {
            return Err(Error::Numerical(format!("not on the Klein quadric (residual {res:e})")));
        }
        Ok(PluckerLine { p })
    }

    /// The line through the projective points `[a]` and `[b]`.
    pub fn from_vectors(a: [f64; 4], b: [f64; 4]) -> Result<Self> {
        let mut p = [0.0; 6];
        let mut idx = 0;
        for i in 0..4 {
            for j in i + 1..4 {
                p[idx] = a[i] * b[j] - a[j] * b[i];
                idx += 1;
            }
        }
        let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nrm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(nrm > 1e-12 * scale) {
            return Err(Error::Dimension("the two vectors do not span a line".into()));
        }
        PluckerLine::new(p)
    }

    pub fn quadric_residual(&self) -> f64 {
        klein_quadric(&self.p)
    }
}

/// Plücker coordinates of the 2-plane spanned by a `4×2` frame.
pub fn plucker_of(frame: &Frame) -> Result<PluckerLine> {
    if frame.n() != 4 || frame.k() != 2 {
        return Err(Error::Dimension(format!("expected a 4x2 frame, got {}x{}", frame.n(), frame.k())));
    }
    let m = frame.matrix();
    PluckerLine::from_vectors(
        [m[(0, 0)], m[(1, 0)], m[(2, 0)], m[(3, 0)]],
        [m[(0, 1)], m[(1, 1)], m[(2, 1)], m[(3, 1)]],
    )
}

/// Polar form of the Klein quadric; zero iff the two lines meet.
pub fn meet_pairing(p: &PluckerLine, q: &PluckerLine) -> f64 {
    pairing(&p.p, &q.p)
}

/// Number of real lines meeting four given lines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransversalCount {
    pub count: u8,
    /// Kernel of the wrong dimension or a tangency; the sample must be discarded.
    pub degenerate: bool,
}

impl TransversalCount {
    const DEGENERATE: TransversalCount = TransversalCount { count: 0, degenerate: true };
}

// Maps q ↦ pairing(p, q) to a coefficient row.
#[inline]
fn pairing_row(p: &[f64; 6]) -> [f64; 6] {
    [p[5], -p[4], p[3], p[2], -p[1], p[0]]
}

const KERNEL_SWEEPS: usize = 60;

/// Orthonormal basis of the kernel of the `4×6` system, when it is exactly
/// two-dimensional. One-sided Jacobi SVD on the six columns.
fn kernel_2(rows: &[[f64; 6]; 4]) -> Option<([f64; 6], [f64; 6])> {
    let mut a = [[0.0; 4]; 6];
    for (i, row) in rows.iter().enumerate() {
        for j in 0..6 {
            a[j][i] = row[j];
        }
    }
    let mut v = [[0.0; 6]; 6];
    for (j, col) in v.iter_mut().enumerate() {
        col[j] = 1.0;
    }
    let dot4 = |x: &[f64; 4], y: &[f64; 4]| x[0] * y[0] + x[1] * y[1] + x[2] * y[2] + x[3] * y[3];
    let frob2: f64 = a.iter().map(|c| dot4(c, c)).sum();
    let floor = (1e-30 * frob2).max(f64::MIN_POSITIVE);
    let mut converged = false;
    for _ in 0..KERNEL_SWEEPS {
        let mut rotated = false;
        for i in 0..6 {
            for j in i + 1..6 {
                let alpha = dot4(&a[i], &a[i]);
                let beta = dot4(&a[j], &a[j]);
                let gamma = dot4(&a[i], &a[j]);
                if alpha <= floor || beta <= floor || gamma.abs() <= 1e-14 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..4 {
                    let (x, y) = (a[i][r], a[j][r]);
                    a[i][r] = c * x - s * y;
                    a[j][r] = s * x + c * y;
                }
                for r in 0..6 {
                    let (x, y) = (v[i][r], v[j][r]);
                    v[i][r] = c * x - s * y;
                    v[j][r] = s * x + c * y;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return None;
    }
    let mut order: [(f64, usize); 6] = [(0.0, 0); 6];
    for (j, o) in order.iter_mut().enumerate() {
        *o = (dot4(&a[j], &a[j]).sqrt(), j);
    }
    order.sort_by(|x, y| y.0.total_cmp(&x.0));
    let smax = order[0].0;
    let thr = KERNEL_RANK_TOL * smax;
    if smax == 0.0 || order[3].0 <= thr || order[4].0 > thr {
        return None;
    }
    Some((v[order[4].1], v[order[5].1]))
}

/// Counts the real lines meeting `l1..l4`: the pairing hyperplanes cut a
/// projective line out of `P^5`, which meets the Klein quadric in the roots
/// of a binary quadratic. `tol` is the relative tangency tolerance.
pub fn transversals_of_four(lines: &[PluckerLine; 4], tol: f64) -> TransversalCount {
    let rows = [
        pairing_row(&lines[0].p),
        pairing_row(&lines[1].p),
        pairing_row(&lines[2].p),
        pairing_row(&lines[3].p),
    ];
    let Some((u, v)) = kernel_2(&rows) else {
        return TransversalCount::DEGENERATE;
    };
    let a = klein_quadric(&u);
    let b = pairing(&u, &v);
    let c = klein_quadric(&v);
    let scale = a.abs().max(b.abs()).max(c.abs());
    // The kernel basis is orthonormal, so the coefficients are O(1) unless
    // the whole pencil lies on the quadric.
    if scale < 1e-12 {
        return TransversalCount::DEGENERATE;
    }
    let disc = b * b - 4.0 * a * c;
    if disc.abs() < tol * scale * scale {
        TransversalCount::DEGENERATE
    } else if disc > 0.0 {
        TransversalCount { count: 2, degenerate: false }
    } else {
        TransversalCount { count: 0, degenerate: false }
    }
}

/// Plücker vector of a uniform random line: the span of two Gaussian vectors.
fn random_line(rng: &mut RngStream) -> Option<PluckerLine> {
    let mut a = [0.0; 4];
    let mut b = [0.0; 4];
    rng.fill_normal(&mut a);
    rng.fill_normal(&mut b);
    PluckerLine::from_vectors(a, b).ok()
}

fn apply(g: &[[f64; 4]; 4], x: &[f64; 4]) -> [f64; 4] {
    let mut y = [0.0; 4];
    for i in 0..4 {
        y[i] = (0..4).map(|j| g[i][j] * x[j]).sum();
    }
    y
}

fn transversal_mc_impl(cfg: McConfig, samples: u64, g: Option<[[f64; 4]; 4]>) -> Result<Estimate> {
    mc_mean(cfg, tags::TRANSVERSAL, samples, "transversal_mc", move |rng| {
        let mut lines = [PluckerLine { p: [0.0; 6] }; 4];
        for l in lines.iter_mut() {
            let mut a = [0.0; 4];
            let mut b = [0.0; 4];
            rng.fill_normal(&mut a);
            rng.fill_normal(&mut b);
            if let Some(g) = &g {
                a = apply(g, &a);
                b = apply(g, &b);
            }
            *l = PluckerLine::from_vectors(a, b).ok()?;
        }
        let t = transversals_of_four(&lines, DEFAULT_TANGENCY_TOL);
        (!t.degenerate).then_some(t.count as f64)
    })
}

/// Mean number of real lines meeting four independent uniform lines, i.e.
/// `edeg G(2,4)`.
pub fn edeg24_transversal_mc(cfg: McConfig, samples: u64) -> Result<Estimate> {
    transversal_mc_impl(cfg, samples, None)
}

/// As [`edeg24_transversal_mc`] with the same draws, after mapping every
/// line by the fixed orthogonal matrix `g`.
pub fn edeg24_transversal_mc_transformed(cfg: McConfig, samples: u64, g: [[f64; 4]; 4]) -> Result<Estimate> {
    transversal_mc_impl(cfg, samples, Some(g))
}

/// Total number of transversals to `X_1..X_4`, where `X_i` is a union of
/// `r_i` independent uniform lines; its mean is `edeg G(2,4) · Π r_i`.
pub fn rig_union_of_lines_mc(r: [usize; 4], cfg: McConfig, samples: u64) -> Result<Estimate> {
    if r.contains(&0) {
        return Err(Error::Dimension("every r_i must be positive".into()));
    }
    let prod: usize = r.iter().product();
    if prod > MAX_RIG_PRODUCT {
        return Err(Error::Unsupported(format!("r_1 r_2 r_3 r_4 = {prod} exceeds {MAX_RIG_PRODUCT}")));
    }
    mc_mean(cfg, tags::RIG, samples, "rig_mc", move |rng| {
        let mut sets: [Vec<PluckerLine>; 4] = Default::default();
        for (set, &ri) in sets.iter_mut().zip(&r) {
            for _ in 0..ri {
                set.push(random_line(rng)?);
            }
        }
        let mut total = 0u32;
        for l0 in &sets[0] {
            for l1 in &sets[1] {
                for l2 in &sets[2] {
                    for l3 in &sets[3] {
                        let t = transversals_of_four(&[*l0, *l1, *l2, *l3], DEFAULT_TANGENCY_TOL);
                        if t.degenerate {
                            return None;
                        }
                        total += t.count as u32;
                    }
                }
            }
        }
        Some(total as f64)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geomlin::{principal_angles, random_orthogonal, sample_uniform_subspace, Mat};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn line_from_frame(f: &Frame) -> PluckerLine {
        plucker_of(f).unwrap()
    }

    fn rand_line(rng: &mut RngStream) -> PluckerLine {
        random_line(rng).unwrap()
    }

    #[test]
    fn coordinate_lines() {
        let e12 = plucker_of(&Frame::coordinate(4, &[0, 1]).unwrap()).unwrap();
        assert_eq!(e12.p, [1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let e34 = plucker_of(&Frame::coordinate(4, &[2, 3]).unwrap()).unwrap();
        assert_eq!(e34.p, [0.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        let e13 = plucker_of(&Frame::coordinate(4, &[0, 2]).unwrap()).unwrap();
        assert_eq!(meet_pairing(&e12, &e13), 0.0);
        assert_eq!(meet_pairing(&e12, &e34).abs(), 1.0);
        assert!(plucker_of(&Frame::coordinate(5, &[0, 1]).unwrap()).is_err());
        assert!(PluckerLine::from_vectors([1.0, 2.0, 0.0, 0.0], [2.0, 4.0, 0.0, 0.0]).is_err());
        assert!(PluckerLine::new([1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn random_frames_on_quadric_and_pairing_is_sigma() {
        let mut rng = RngStream::new(1, 0);
        for _ in 0..500 {
            let a = sample_uniform_subspace(&mut rng, 4, 2).unwrap();
            let b = sample_uniform_subspace(&mut rng, 4, 2).unwrap();
            let (p, q) = (line_from_frame(&a), line_from_frame(&b));
            assert!(p.quadric_residual().abs() <= 1e-12);
            assert!(meet_pairing(&p, &p).abs() <= 1e-12);
            let sigma = principal_angles(&a, &b).unwrap().sin_product();
            assert!((meet_pairing(&p, &q).abs() - sigma).abs() < 1e-12);
        }
    }

    #[test]
    fn pairing_zero_iff_planes_meet() {
        let mut rng = RngStream::new(2, 0);
        for i in 0..400 {
            let a = sample_uniform_subspace(&mut rng, 4, 2).unwrap();
            let b = if i % 2 == 0 {
                // share the first basis vector of `a`
                let w: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
                Frame::orthonormalize(&Mat::from_columns(&[a.column(0), w]).unwrap()).unwrap()
            } else {
                sample_uniform_subspace(&mut rng, 4, 2).unwrap()
            };
            let meets = principal_angles(&a, &b).unwrap().angles[0] < 1e-8;
            let zero = meet_pairing(&line_from_frame(&a), &line_from_frame(&b)).abs() < 1e-9;
            assert_eq!(meets, zero);
            assert_eq!(meets, i % 2 == 0);
        }
    }

    #[test]
    fn repeated_line_is_degenerate() {
        let mut rng = RngStream::new(3, 0);
        let l: Vec<PluckerLine> = (0..3).map(|_| rand_line(&mut rng)).collect();
        let t = transversals_of_four(&[l[0], l[1], l[2], l[0]], DEFAULT_TANGENCY_TOL);
        assert!(t.degenerate);
    }

    // Points of x w = y z are (ac, ad, bc, bd). Fixing (a, b) gives one
    // ruling, fixing (c, d) the other.
    fn ruling_one(a: f64, b: f64) -> PluckerLine {
        PluckerLine::from_vectors([a, 0.0, b, 0.0], [0.0, a, 0.0, b]).unwrap()
    }

    fn ruling_two(c: f64, d: f64) -> PluckerLine {
        PluckerLine::from_vectors([c, d, 0.0, 0.0], [0.0, 0.0, c, d]).unwrap()
    }

    // Lines meeting three lines of one ruling form the other ruling; count
    // those meeting `l` by sign changes of the pairing around the loop.
    fn ruled_quadric_oracle(l: &PluckerLine, points: usize) -> usize {
        let val = |i: usize| {
            let phi = std::f64::consts::PI * i as f64 / points as f64;
            meet_pairing(&ruling_two(phi.cos(), phi.sin()), l)
        };
        let first = val(0);
        let mut prev = first;
        let mut changes = 0;
        for i in 1..points {
            let v = val(i);
            if v.signum() != prev.signum() {
                changes += 1;
            }
            prev = v;
        }
        if first.signum() != prev.signum() {
            changes += 1;
        }
        changes
    }

    #[test]
    fn ruled_quadric_oracle_agrees() {
        let skew = [ruling_one(1.0, 0.0), ruling_one(0.0, 1.0), ruling_one(1.0, 1.0)];
        let mut rng = RngStream::new(4, 0);
        let mut seen = [0usize; 3];
        let mut checked = 0;
        while checked < 40 {
            let mut a = [0.0; 4];
            let mut b = [0.0; 4];
            for x in a.iter_mut().chain(b.iter_mut()) {
                *x = (rng.uniform() * 20.0 - 10.0).round();
            }
            let Ok(l) = PluckerLine::from_vectors(a, b) else { continue };
            let t = transversals_of_four(&[skew[0], skew[1], skew[2], l], DEFAULT_TANGENCY_TOL);
            if t.degenerate {
                continue;
            }
            let oracle = ruled_quadric_oracle(&l, 1_000_000 / 40);
            assert_eq!(t.count as usize, oracle, "line {a:?} {b:?}");
            seen[oracle] += 1;
            checked += 1;
        }
        assert!(seen[0] > 0 && seen[2] > 0, "{seen:?}");
    }

    #[test]
    fn tangency_is_rare() {
        let mut rng = RngStream::new(5, 0);
        let mut degenerate = 0;
        for _ in 0..20_000 {
            let l = [rand_line(&mut rng), rand_line(&mut rng), rand_line(&mut rng), rand_line(&mut rng)];
            let t = transversals_of_four(&l, DEFAULT_TANGENCY_TOL);
            if t.degenerate {
                degenerate += 1;
            } else {
                assert!(t.count == 0 || t.count == 2);
            }
        }
        assert!(degenerate <= 2, "{degenerate}");
    }

    #[test]
    fn permutation_and_orthogonal_invariance() {
        let mut rng = RngStream::new(6, 0);
        for _ in 0..10_000 {
            let mut vecs = [[0.0; 4]; 8];
            for v in vecs.iter_mut() {
                rng.fill_normal(v);
            }
            let lines: Vec<PluckerLine> =
                (0..4).map(|i| PluckerLine::from_vectors(vecs[2 * i], vecs[2 * i + 1]).unwrap()).collect();
            let base = transversals_of_four(&[lines[0], lines[1], lines[2], lines[3]], DEFAULT_TANGENCY_TOL);
            if base.degenerate {
                continue;
            }
            let perm = transversals_of_four(&[lines[2], lines[0], lines[3], lines[1]], DEFAULT_TANGENCY_TOL);
            assert_eq!(perm, base);
            let g = random_orthogonal(&mut rng, 4);
            let mut ga = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    ga[i][j] = g[(i, j)];
                }
            }
            let moved: Vec<PluckerLine> = (0..4)
                .map(|i| PluckerLine::from_vectors(apply(&ga, &vecs[2 * i]), apply(&ga, &vecs[2 * i + 1])).unwrap())
                .collect();
            let t = transversals_of_four(&[moved[0], moved[1], moved[2], moved[3]], DEFAULT_TANGENCY_TOL);
            assert_eq!(t, base);
        }
    }

    #[test]
    fn transversal_mc_small_and_invariant() {
        let cfg = McConfig::new(7, 1);
        let e = edeg24_transversal_mc(cfg, 200_000).unwrap();
        assert!((e.value - 1.7262).abs() < 4.0 * e.stderr, "{e:?}");
        let mut rng = RngStream::new(8, 0);
        let g = random_orthogonal(&mut rng, 4);
        let mut ga = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                ga[i][j] = g[(i, j)];
            }
        }
        let f = edeg24_transversal_mc_transformed(cfg, 200_000, ga).unwrap();
        assert!((e.value - f.value).abs() <= 3.0 * e.stderr, "{e:?} {f:?}");
    }

    #[test]
    fn rig_base_case_matches() {
        let cfg = McConfig::new(9, 1);
        let a = rig_union_of_lines_mc([1, 1, 1, 1], cfg, 100_000).unwrap();
        assert!((a.value - 1.7262).abs() < 4.0 * a.stderr, "{a:?}");
        let b = rig_union_of_lines_mc([2, 1, 1, 1], cfg, 100_000).unwrap();
        assert!((b.value - 2.0 * 1.7262).abs() < 4.0 * b.stderr, "{b:?}");
        assert!(rig_union_of_lines_mc([11, 10, 10, 1], cfg, 10).is_err());
        assert!(rig_union_of_lines_mc([0, 1, 1, 1], cfg, 10).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn projective_scaling_invariance(
            v in proptest::array::uniform8(-1.0f64..1.0),
            w in proptest::array::uniform8(-1.0f64..1.0),
            s in prop_oneof![-3.0f64..-0.1, 0.1f64..3.0],
            t in prop_oneof![-3.0f64..-0.1, 0.1f64..3.0],
        ) {
            let vs = [[v[0], v[1], v[2], v[3]], [v[4], v[5], v[6], v[7]], [w[0], w[1], w[2], w[3]], [w[4], w[5], w[6], w[7]]];
            let mut seed = RngStream::new(10, 0);
            let extra = [rand_line(&mut seed), rand_line(&mut seed)];
            let (Ok(l0), Ok(l1)) = (PluckerLine::from_vectors(vs[0], vs[1]), PluckerLine::from_vectors(vs[2], vs[3])) else {
                return Ok(());
            };
            let scaled = PluckerLine::from_vectors(vs[0].map(|x| x * s), vs[1].map(|x| x * t)).unwrap();
            for i in 0..6 {
                prop_assert!((scaled.p[i].abs() - l0.p[i].abs()).abs() < 1e-12);
            }
            let a = transversals_of_four(&[l0, l1, extra[0], extra[1]], DEFAULT_TANGENCY_TOL);
            let b = transversals_of_four(&[scaled, l1, extra[0], extra[1]], DEFAULT_TANGENCY_TOL);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn quadric_residual_of_constructed_lines(v in proptest::array::uniform8(-5.0f64..5.0)) {
            if let Ok(l) = PluckerLine::from_vectors([v[0], v[1], v[2], v[3]], [v[4], v[5], v[6], v[7]]) {
                prop_assert!(l.quadric_residual().abs() <= QUADRIC_TOL);
                let n: f64 = l.p.iter().map(|x| x * x).sum();
                assert_relative_eq!(n, 1.0, max_relative = 1e-12);
            }
        }
    }
}
