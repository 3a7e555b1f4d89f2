//! Vector-valued martingales over nested interval partitions of `[0, 1)`,
//! their correspondence with 1-Lipschitz curves (integrate down, split up),
//! and the separation obstruction that rules out approximate differentiability
//! of the integrated curve.

use crate::solvers::Polyline;
use crate::space::NormedSpace;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// One atom `[a, c)` with its martingale value and optional split at `b`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Node {
    pub a: f64,
    pub c: f64,
    pub value: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub left: Option<Box<Node>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub right: Option<Box<Node>>,
}

impl Node {
    pub fn leaf(a: f64, c: f64, value: Vec<f64>) -> Self {
        Node { a, c, value, b: None, left: None, right: None }
    }

    pub fn width(&self) -> f64 {
        self.c - self.a
    }

    pub fn is_leaf(&self) -> bool {
        self.left.is_none()
    }
}

/// A martingale over nested partitions of `[0, 1)`: the root atom is
/// `[0, 1)`, each internal atom splits into two half-open subintervals, and
/// every parent value is the width-weighted average of its children.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartitionMartingale {
    pub root: Node,
    /// Norm used for value comparisons (separation, bound).
    pub space: NormedSpace,
}

const MARTINGALE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub is_martingale: bool,
    pub is_bounded: bool,
    pub bound: f64,
    pub is_separated: bool,
    pub min_separation: Option<f64>,
    pub depth: u32,
    /// Whether every split is exactly at the midpoint (the strict dyadic
    /// special case).
    pub is_dyadic: bool,
}

fn walk(node: &Node, f: &mut dyn FnMut(&Node)) {
    f(node);
    if let (Some(l), Some(r)) = (&node.left, &node.right) {
        walk(l, f);
        walk(r, f);
    }
}

fn structural_check(node: &Node, dim: usize) -> Result<()> {
    if !(node.a < node.c) {
        return Err(Error::BadInterval { a: node.a, c: node.c });
    }
    if node.value.len() != dim {
        return Err(Error::DimMismatch { expected: dim, got: node.value.len() });
    }
    match (&node.b, &node.left, &node.right) {
        (None, None, None) => Ok(()),
        (Some(b), Some(l), Some(r)) => {
            let b = *b;
            if !(node.a < b && b < node.c) {
                return Err(Error::BadMartingale(format!(
                    "split {b} not interior to [{}, {})",
                    node.a, node.c
                )));
            }
            if l.a != node.a || l.c != b || r.a != b || r.c != node.c {
                return Err(Error::BadMartingale(format!(
                    "children of [{}, {}) do not partition it at {b}",
                    node.a, node.c
                )));
            }
            structural_check(l, dim)?;
            structural_check(r, dim)
        }
        _ => Err(Error::BadMartingale("node has a partial split".into())),
    }
}

impl PartitionMartingale {
    pub fn dim(&self) -> usize {
        self.space.dim
    }

    /// Rejects overlap/gap/partial-split trees; value dimensions must match
    /// the declared space.
    pub fn check_structure(&self) -> Result<()> {
        if self.root.a != 0.0 || self.root.c != 1.0 {
            return Err(Error::BadMartingale(format!(
                "root atom is [{}, {}), expected [0, 1)",
                self.root.a, self.root.c
            )));
        }
        structural_check(&self.root, self.dim())
    }

    pub fn depth(&self) -> u32 {
        fn go(n: &Node) -> u32 {
            match (&n.left, &n.right) {
                (Some(l), Some(r)) => 1 + go(l).max(go(r)),
                _ => 0,
            }
        }
        go(&self.root)
    }

    /// The leaf atoms left to right.
    pub fn leaves(&self) -> Vec<&Node> {
        let mut out = Vec::new();
        fn go<'a>(n: &'a Node, out: &mut Vec<&'a Node>) {
            if let (Some(l), Some(r)) = (&n.left, &n.right) {
                go(l, out);
                go(r, out);
            } else {
                out.push(n);
            }
        }
        go(&self.root, &mut out);
        out
    }
}

/// Checks the averaging identity at every internal node, the uniform bound,
/// and `delta`-separation on every parent-child edge.
pub fn validate_martingale(m: &PartitionMartingale, delta: f64) -> Result<MartingaleReport> {
    m.check_structure()?;
    let space = &m.space;
    let mut is_martingale = true;
    let mut bound = 0.0f64;
    let mut min_sep: Option<f64> = None;
    let mut is_dyadic = true;
    let mut err: Option<Error> = None;
    walk(&m.root, &mut |n| {
        if err.is_some() {
            return;
        }
        match space.norm(&n.value) {
            Ok(v) => bound = bound.max(v),
            Err(e) => err = Some(e),
        }
        if let (Some(b), Some(l), Some(r)) = (n.b, &n.left, &n.right) {
            if (b - 0.5 * (n.a + n.c)).abs() > MARTINGALE_TOL {
                is_dyadic = false;
            }
            for j in 0..n.value.len() {
                let lhs = n.value[j] * n.width();
                let rhs = l.value[j] * l.width() + r.value[j] * r.width();
                if (lhs - rhs).abs() > MARTINGALE_TOL * (1.0 + lhs.abs().max(rhs.abs())) {
                    is_martingale = false;
                }
            }
            for child in [l, r] {
                match space.dist(&n.value, &child.value) {
                    Ok(d) => min_sep = Some(min_sep.map_or(d, |s| s.min(d))),
                    Err(e) => err = Some(e),
                }
            }
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(MartingaleReport {
        is_martingale,
        is_bounded: bound.is_finite(),
        bound,
        is_separated: min_sep.map_or(true, |s| s >= delta),
        min_separation: min_sep,
        depth: m.depth(),
        is_dyadic,
    })
}

fn kahan_add(sum: &mut f64, comp: &mut f64, term: f64) {
    let y = term - *comp;
    let t = *sum + y;
    *comp = (t - *sum) - y;
    *sum = t;
}

/// Integrates the deepest level: `f(t) = integral of the leaf values up to
/// t`, a piecewise-linear curve with breakpoints at every leaf endpoint.
/// Also certifies the stabilization property — the integral of every
/// subtree's leaves equals the subtree root's `value * width` to `1e-12` —
/// so partial integrals at a level-`n` endpoint agree at all deeper levels.
pub fn to_curve(m: &PartitionMartingale) -> Result<Polyline> {
    let rep = validate_martingale(m, 0.0)?;
    if !rep.is_martingale {
        return Err(Error::BadMartingale("averaging identity fails; refusing to integrate".into()));
    }
    let dim = m.dim();

    // Stabilization certificate, bottom-up with compensated summation.
    fn subtree_integral(n: &Node, dim: usize) -> Result<Vec<f64>> {
        if let (Some(l), Some(r)) = (&n.left, &n.right) {
            let li = subtree_integral(l, dim)?;
            let ri = subtree_integral(r, dim)?;
            let total: Vec<f64> = li.iter().zip(&ri).map(|(x, y)| x + y).collect();
            for j in 0..dim {
                let want = n.value[j] * n.width();
                if (total[j] - want).abs() > MARTINGALE_TOL * (1.0 + want.abs()) {
                    return Err(Error::BadMartingale(format!(
                        "subtree integral over [{}, {}) drifts from value * width by {:.3e}",
                        n.a,
                        n.c,
                        (total[j] - want).abs()
                    )));
                }
            }
            Ok(total)
        } else {
            Ok(n.value.iter().map(|v| v * n.width()).collect())
        }
    }
    subtree_integral(&m.root, dim)?;

    let leaves = m.leaves();
    let mut times = Vec::with_capacity(leaves.len() + 1);
    let mut points = Vec::with_capacity(leaves.len() + 1);
    times.push(0.0);
    points.push(vec![0.0; dim]);
    let mut sum = vec![0.0f64; dim];
    let mut comp = vec![0.0f64; dim];
    for leaf in leaves {
        for j in 0..dim {
            kahan_add(&mut sum[j], &mut comp[j], leaf.value[j] * leaf.width());
        }
        times.push(leaf.c);
        points.push(sum.clone());
    }
    Polyline::new(times, points, rep.bound)
}

/// Outcome of [`from_curve`]: the constructed martingale plus the flag for a
/// root-level curve with no qualifying split (affine at scale one).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FromCurveResult {
    pub martingale: PartitionMartingale,
    pub no_deviation: bool,
}

/// Builds a separated martingale from a curve on `[0, 1]` with `lip_bound
/// <= 1`: per atom `[a, c)`, scans `b_grid - 1` interior grid points for the
/// `b` maximizing the chord deviation `|f(b) - ((c-b)/(c-a)) f(a) -
/// ((b-a)/(c-a)) f(c)|` (ties to the smallest `b`); splits when the
/// deviation exceeds `delta * (c - a)`, assigning children the difference
/// quotients of `f`, and recurses to `max_depth`.
pub fn from_curve(
    f: &Polyline,
    space: &NormedSpace,
    delta: f64,
    max_depth: u32,
    b_grid: usize,
) -> Result<FromCurveResult> {
    if f.dim() != space.dim {
        return Err(Error::DimMismatch { expected: space.dim, got: f.dim() });
    }
    if f.lip_bound > 1.0 + 1e-9 {
        return Err(Error::BadArgument(format!(
            "curve lip bound {} exceeds 1; rescale first",
            f.lip_bound
        )));
    }
    if f.times[0].abs() > 1e-12 || (f.times.last().unwrap() - 1.0).abs() > 1e-12 {
        return Err(Error::BadPolyline);
    }
    if !(delta > 0.0) || b_grid < 2 {
        return Err(Error::BadArgument("need delta > 0 and b_grid >= 2".into()));
    }

    let quotient = |a: f64, c: f64| -> Vec<f64> {
        let fa = f.eval(a);
        let fc = f.eval(c);
        fa.iter().zip(&fc).map(|(x, y)| (y - x) / (c - a)).collect()
    };

    fn build(
        f: &Polyline,
        space: &NormedSpace,
        delta: f64,
        b_grid: usize,
        quotient: &dyn Fn(f64, f64) -> Vec<f64>,
        a: f64,
        c: f64,
        value: Vec<f64>,
        depth_left: u32,
    ) -> Result<Node> {
        let mut node = Node::leaf(a, c, value);
        if depth_left == 0 {
            return Ok(node);
        }
        let fa = f.eval(a);
        let fc = f.eval(c);
        let w = c - a;
        let mut best_dev = 0.0f64;
        let mut best_b = None;
        for i in 1..b_grid {
            let b = a + w * i as f64 / b_grid as f64;
            let fb = f.eval(b);
            let wl = (c - b) / w;
            let wr = (b - a) / w;
            let dev: Vec<f64> =
                (0..fb.len()).map(|j| fb[j] - wl * fa[j] - wr * fc[j]).collect();
            let d = space.norm(&dev)?;
            if d > best_dev + 1e-15 {
                best_dev = d;
                best_b = Some(b);
            }
        }
        if best_dev > delta * w {
            let b = best_b.unwrap();
            let lv = quotient(a, b);
            let rv = quotient(b, c);
            node.b = Some(b);
            node.left = Some(Box::new(build(
                f, space, delta, b_grid, quotient, a, b, lv, depth_left - 1,
            )?));
            node.right = Some(Box::new(build(
                f, space, delta, b_grid, quotient, b, c, rv, depth_left - 1,
            )?));
        }
        Ok(node)
    }

    let root_value = quotient(0.0, 1.0);
    let root = build(f, space, delta, b_grid, &quotient, 0.0, 1.0, root_value, max_depth)?;
    let no_deviation = root.is_leaf();
    Ok(FromCurveResult {
        martingale: PartitionMartingale { root, space: *space },
        no_deviation,
    })
}

/// Separation and width-ratio statistics on every parent-child edge.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeStat {
    pub parent_interval: (f64, f64),
    pub child_interval: (f64, f64),
    pub separation: f64,
    /// `parent width / child width`.
    pub width_ratio: f64,
}

pub fn edge_stats(m: &PartitionMartingale) -> Result<Vec<EdgeStat>> {
    let mut out = Vec::new();
    let mut err = None;
    walk(&m.root, &mut |n| {
        if err.is_some() {
            return;
        }
        if let (Some(l), Some(r)) = (&n.left, &n.right) {
            for child in [l, r] {
                match m.space.dist(&n.value, &child.value) {
                    Ok(d) => out.push(EdgeStat {
                        parent_interval: (n.a, n.c),
                        child_interval: (child.a, child.c),
                        separation: d,
                        width_ratio: n.width() / child.width(),
                    }),
                    Err(e) => err = Some(e),
                }
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Lower bound on the accuracy of any affine model of the integrated curve
/// near `x0` at scales up to `eta`: locates the deepest parent-child atom
/// pair containing `x0` with parent width `<= eta` and returns a quarter of
/// the edge's value jump.
pub fn frechet_obstruction(m: &PartitionMartingale, x0: f64, eta: f64) -> Result<f64> {
    m.check_structure()?;
    if !(0.0..1.0).contains(&x0) {
        return Err(Error::BadArgument(format!("x0 = {x0} outside [0, 1)")));
    }
    let mut node = &m.root;
    let mut best: Option<f64> = None;
    loop {
        let (Some(&b), Some(l), Some(r)) = (node.b.as_ref(), &node.left, &node.right) else {
            break;
        };
        let child: &Node = if x0 < b { l } else { r };
        if node.width() <= eta {
            best = Some(m.space.dist(&node.value, &child.value)? / 4.0);
        }
        node = child;
    }
    best.ok_or(Error::NoAtomPair(eta))
}

/// The depth-1 signed martingale: value 0 at the root, +1 on `[0, 1/2)`,
/// -1 on `[1/2, 1)`.
pub fn rademacher() -> PartitionMartingale {
    let root = Node {
        a: 0.0,
        c: 1.0,
        value: vec![0.0],
        b: Some(0.5),
        left: Some(Box::new(Node::leaf(0.0, 0.5, vec![1.0]))),
        right: Some(Box::new(Node::leaf(0.5, 1.0, vec![-1.0]))),
    };
    PartitionMartingale { root, space: NormedSpace::l2(1) }
}
