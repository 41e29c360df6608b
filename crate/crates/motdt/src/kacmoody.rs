//! Star-shaped Kac–Moody root systems attached to parabolic data, and the
//! non-emptiness deciders for connections and Higgs bundles on `P^1`.
//!
//! A class `gamma` maps to the root-lattice vector with `r` at the center and
//! `dim E_{x,j} = r - sum_{i<=j} r_{x,i}` at the `j`-th vertex of the leg of
//! `x`.  Root membership is decided by reflection descent.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::coeffring::Rational;
use crate::dt::{normalize_conn_ss_weights, Eigenvalues, Weights};
use crate::error::{Error, Result};
use crate::gammaring::{GammaIndex, PointId};

/// Largest rank handled by the decomposition search.
pub const MAX_SEARCH_RANK: u32 = 6;

/// A star-shaped graph: a center `v_*` joined to one chain (leg) per point.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StarGraph {
    points: Vec<PointId>,
    legs: Vec<usize>,
}

impl StarGraph {
    /// Star with legs of the given lengths, labelled by points `0, 1, ...`.
    pub fn new(legs: Vec<usize>) -> Self {
        StarGraph {
            points: (0..legs.len() as PointId).collect(),
            legs,
        }
    }

    /// Star with labelled legs (`points` must be distinct).
    pub fn with_points(points: Vec<PointId>, legs: Vec<usize>) -> Result<Self> {
        if points.len() != legs.len() {
            return Err(Error::InvalidInput("one leg length per point is required".into()));
        }
        let mut sorted = points.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != points.len() {
            return Err(Error::InvalidInput("leg labels must be distinct".into()));
        }
        Ok(StarGraph { points, legs })
    }

    /// The smallest star carrying `gamma`: leg of `x` has length `(max level at x) - 1`.
    pub fn for_gamma(g: &GammaIndex) -> Self {
        let points: Vec<PointId> = g.points().collect();
        let legs = points
            .iter()
            .map(|x| g.levels(*x).len().saturating_sub(1))
            .collect();
        StarGraph { points, legs }
    }

    /// Leg labels.
    pub fn points(&self) -> &[PointId] {
        &self.points
    }

    /// Leg lengths.
    pub fn legs(&self) -> &[usize] {
        &self.legs
    }

    /// Number of vertices (center included).
    pub fn num_vertices(&self) -> usize {
        1 + self.legs.iter().sum::<usize>()
    }

    /// Adjacency lists; vertex 0 is the center, then each leg outwards.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let n = self.num_vertices();
        let mut adj = vec![vec![]; n];
        let mut next = 1;
        for &len in &self.legs {
            let mut prev = 0;
            for _ in 0..len {
                adj[prev].push(next);
                adj[next].push(prev);
                prev = next;
                next += 1;
            }
        }
        adj
    }
}

/// An element of the root lattice of a star-shaped graph.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct RootVector {
    /// Coefficient of the center vertex.
    pub center: i64,
    /// Coefficients along each leg, outwards, in the graph's leg order.
    pub legs: Vec<Vec<i64>>,
}

impl RootVector {
    /// Flat coordinates in the vertex order of [`StarGraph::adjacency`].
    pub fn to_flat(&self, graph: &StarGraph) -> Vec<i64> {
        let mut out = vec![self.center];
        for (i, &len) in graph.legs.iter().enumerate() {
            let leg = self.legs.get(i).map(|v| v.as_slice()).unwrap_or(&[]);
            for j in 0..len {
                out.push(leg.get(j).copied().unwrap_or(0));
            }
        }
        out
    }

    /// Inverse of [`RootVector::to_flat`].
    pub fn from_flat(flat: &[i64], graph: &StarGraph) -> Self {
        let mut legs = vec![];
        let mut pos = 1;
        for &len in &graph.legs {
            legs.push(flat[pos..pos + len].to_vec());
            pos += len;
        }
        RootVector {
            center: flat[0],
            legs,
        }
    }

    /// JSON form `{"center": r, "legs": {"x": [c1, c2, ...]}}`.
    pub fn to_json(&self, graph: &StarGraph) -> Value {
        let legs: serde_json::Map<String, Value> = graph
            .points
            .iter()
            .zip(&self.legs)
            .map(|(x, v)| (x.to_string(), json!(v)))
            .collect();
        json!({"center": self.center, "legs": legs})
    }
}

impl fmt::Display for RootVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = vec![self.center.to_string()];
        for leg in &self.legs {
            parts.extend(leg.iter().map(|c| c.to_string()));
        }
        write!(f, "({})", parts.join(","))
    }
}

/// The root-lattice vector of `gamma` on `graph`.
///
/// Errors with `LegTooShort` if some `r_{x,j} != 0` with `j` beyond
/// `leg length + 1`, or if a point of `gamma` has no leg.
pub fn rho_of_gamma(g: &GammaIndex, graph: &StarGraph) -> Result<RootVector> {
    let r = g.r() as i64;
    let mut legs = vec![];
    for (i, (&x, &len)) in graph.points.iter().zip(&graph.legs).enumerate() {
        let levels = g.levels(x);
        if levels.len() > len + 1 {
            return Err(Error::LegTooShort {
                point: i,
                level: levels.len(),
            });
        }
        let mut leg = Vec::with_capacity(len);
        let mut partial = 0i64;
        for j in 0..len {
            partial += levels.get(j).copied().unwrap_or(0) as i64;
            leg.push(r - partial);
        }
        legs.push(leg);
    }
    for x in g.points() {
        if !graph.points.contains(&x) {
            return Err(Error::LegTooShort { point: x as usize, level: g.levels(x).len() });
        }
    }
    Ok(RootVector { center: r, legs })
}

/// The symmetric form `q(a) = sum a_v^2 - sum_{edges} a_u a_v`.
pub fn tits_form(alpha: &RootVector, graph: &StarGraph) -> i64 {
    let a = alpha.to_flat(graph);
    let adj = graph.adjacency();
    let mut q: i64 = a.iter().map(|x| x * x).sum();
    for (u, nbrs) in adj.iter().enumerate() {
        for &v in nbrs {
            if u < v {
                q -= a[u] * a[v];
            }
        }
    }
    q
}

/// Outcome of the root test.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RootKind {
    /// A Weyl translate of a simple root.
    RealRoot,
    /// A Weyl translate of a vector in the fundamental imaginary region.
    ImaginaryRoot,
    /// Not a root.
    NotARoot,
}

fn support_connected(a: &[i64], adj: &[Vec<usize>]) -> bool {
    let support: Vec<usize> = (0..a.len()).filter(|i| a[*i] != 0).collect();
    let Some(&start) = support.first() else {
        return false;
    };
    let mut seen = vec![false; a.len()];
    let mut stack = vec![start];
    seen[start] = true;
    let mut count = 0;
    while let Some(u) = stack.pop() {
        count += 1;
        for &v in &adj[u] {
            if !seen[v] && a[v] != 0 {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    count == support.len()
}

/// Root test on flat coordinates.
pub fn classify_flat(a: &[i64], adj: &[Vec<usize>]) -> RootKind {
    let pos = a.iter().any(|c| *c > 0);
    let neg = a.iter().any(|c| *c < 0);
    if pos == neg {
        // Zero or mixed signs.
        return RootKind::NotARoot;
    }
    let mut a: Vec<i64> = if neg { a.iter().map(|c| -c).collect() } else { a.to_vec() };
    loop {
        if a.iter().sum::<i64>() == 1 {
            return RootKind::RealRoot;
        }
        let pairing = |i: usize, a: &[i64]| 2 * a[i] - adj[i].iter().map(|j| a[*j]).sum::<i64>();
        match (0..a.len()).find(|i| pairing(*i, &a) > 0) {
            None => {
                return if support_connected(&a, adj) {
                    RootKind::ImaginaryRoot
                } else {
                    RootKind::NotARoot
                };
            }
            Some(i) => {
                a[i] -= pairing(i, &a);
                if a[i] < 0 {
                    return RootKind::NotARoot;
                }
            }
        }
    }
}

/// Decides whether `alpha` is a (real or imaginary) root by reflection descent.
pub fn is_root(alpha: &RootVector, graph: &StarGraph) -> RootKind {
    classify_flat(&alpha.to_flat(graph), &graph.adjacency())
}

/// Whether `gamma` is a root (on its minimal star).
pub fn gamma_is_root(g: &GammaIndex) -> bool {
    let graph = StarGraph::for_gamma(g);
    let rho = rho_of_gamma(g, &graph).expect("minimal star always fits");
    is_root(&rho, &graph) != RootKind::NotARoot
}

/// Result of a non-emptiness decision.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Nonemptiness {
    /// Whether the moduli stack is non-empty.
    pub nonempty: bool,
    /// A decomposition `gamma = sum gamma_i` into roots (genus 0 only).
    pub witness: Vec<GammaIndex>,
}

/// Flattened flag data `(r, levels at each point)` with a fixed layout.
struct Layout {
    points: Vec<PointId>,
    widths: Vec<usize>,
}

impl Layout {
    fn of(g: &GammaIndex) -> Self {
        let points: Vec<PointId> = g.points().collect();
        let widths = points.iter().map(|x| g.levels(*x).len()).collect();
        Layout { points, widths }
    }

    fn flatten(&self, g: &GammaIndex) -> Vec<u32> {
        let mut out = vec![g.r()];
        for (x, w) in self.points.iter().zip(&self.widths) {
            let lv = g.levels(*x);
            for j in 0..*w {
                out.push(lv.get(j).copied().unwrap_or(0));
            }
        }
        out
    }

    fn gamma(&self, v: &[u32], d: i64) -> GammaIndex {
        let mut flags = BTreeMap::new();
        let mut pos = 1;
        for (x, w) in self.points.iter().zip(&self.widths) {
            flags.insert(*x, v[pos..pos + w].to_vec());
            pos += w;
        }
        GammaIndex::new(v[0], flags, d).expect("consistent flag data")
    }

    /// All non-zero sub-vectors `u <= v` that are flag data of positive rank.
    fn parts(&self, v: &[u32]) -> Vec<Vec<u32>> {
        let mut out = vec![];
        for r in 1..=v[0] {
            let mut partial: Vec<Vec<u32>> = vec![vec![r]];
            let mut pos = 1;
            for w in &self.widths {
                let bounds = &v[pos..pos + w];
                let mut comps = vec![];
                compositions(r, bounds, &mut vec![], &mut comps);
                partial = partial
                    .iter()
                    .flat_map(|p| {
                        comps.iter().map(move |c| {
                            let mut q = p.clone();
                            q.extend(c);
                            q
                        })
                    })
                    .collect();
                pos += w;
            }
            out.extend(partial);
        }
        out
    }
}

/// Vectors `c <= bounds` with `sum c = total`.
fn compositions(total: u32, bounds: &[u32], cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if cur.len() == bounds.len() {
        if total == 0 {
            out.push(cur.clone());
        }
        return;
    }
    let rest: u32 = bounds[cur.len() + 1..].iter().sum();
    let lo = total.saturating_sub(rest);
    for c in lo..=total.min(bounds[cur.len()]) {
        cur.push(c);
        compositions(total - c, bounds, cur, out);
        cur.pop();
    }
}

/// Searches for a multiset of admissible parts summing to `gamma`'s flag
/// data; `degree_of` returns the (solved) degree of an admissible part.
fn decompose(g: &GammaIndex, degree_of: &dyn Fn(&GammaIndex) -> Option<i64>) -> Result<Option<Vec<GammaIndex>>> {
    if g.r() > MAX_SEARCH_RANK {
        return Err(Error::OutOfDeskScale(format!(
            "decomposition search is limited to rank {MAX_SEARCH_RANK}"
        )));
    }
    let layout = Layout::of(g);
    let v = layout.flatten(g);
    let mut good: Vec<(Vec<u32>, GammaIndex)> = vec![];
    for p in layout.parts(&v) {
        let probe = layout.gamma(&p, 0);
        if let Some(d) = degree_of(&probe) {
            let gi = probe.shift_degree(d);
            if gamma_is_root(&gi) {
                good.push((p, gi));
            }
        }
    }
    // Larger parts first, so the witness is as coarse as possible (a single
    // summand whenever gamma itself is admissible).
    good.sort_by_key(|(p, _)| std::cmp::Reverse(p[0]));
    fn search(
        rem: &[u32],
        start: usize,
        good: &[(Vec<u32>, GammaIndex)],
        memo: &mut HashMap<(Vec<u32>, usize), bool>,
        path: &mut Vec<usize>,
    ) -> bool {
        if rem[0] == 0 {
            return true;
        }
        if let Some(false) = memo.get(&(rem.to_vec(), start)) {
            return false;
        }
        for i in start..good.len() {
            let p = &good[i].0;
            if p.iter().zip(rem).all(|(a, b)| a <= b) {
                let next: Vec<u32> = rem.iter().zip(p).map(|(a, b)| a - b).collect();
                path.push(i);
                if search(&next, i, good, memo, path) {
                    return true;
                }
                path.pop();
            }
        }
        memo.insert((rem.to_vec(), start), false);
        false
    }
    let mut path = vec![];
    if search(&v, 0, &good, &mut HashMap::new(), &mut path) {
        let witness: Vec<GammaIndex> = path.into_iter().map(|i| good[i].1.clone()).collect();
        // Solved degrees are additive, so they always sum to the degree of gamma.
        debug_assert_eq!(witness.iter().map(|w| w.d()).sum::<i64>(), g.d());
        return Ok(Some(witness));
    }
    Ok(None)
}

fn integer_of(x: &Rational) -> Option<i64> {
    if x.is_integer() {
        i64::try_from(x.to_integer()).ok()
    } else {
        None
    }
}

/// Degree `d_i` forced by `deg_{1,zeta} gamma_i = 0`, if integral and the
/// basis coordinates vanish.
fn conn_degree(part: &GammaIndex, zeta: &Eigenvalues) -> Option<i64> {
    let deg = zeta.degree(part, &Rational::one());
    if deg[1..].iter().any(|c| !c.is_zero()) {
        return None;
    }
    integer_of(&-deg[0].clone())
}

fn check_points(g: &GammaIndex) -> Result<()> {
    if g.is_zero() || g.points().next().is_none() {
        return Err(Error::InvalidInput(
            "gamma must be nonzero with flags at one or more parabolic points".into(),
        ));
    }
    Ok(())
}

/// Non-emptiness of `Conn_gamma(zeta)`.
pub fn nonempty_conn(g: &GammaIndex, zeta: &Eigenvalues, genus: u32) -> Result<Nonemptiness> {
    check_points(g)?;
    if zeta.degree(g, &Rational::one()).iter().any(|c| !c.is_zero()) {
        return Ok(Nonemptiness { nonempty: false, witness: vec![] });
    }
    if genus > 0 {
        return Ok(Nonemptiness { nonempty: true, witness: vec![] });
    }
    let w = decompose(g, &|p| conn_degree(p, zeta))?;
    Ok(Nonemptiness {
        nonempty: w.is_some(),
        witness: w.unwrap_or_default(),
    })
}

/// Non-emptiness of `Higgs_gamma^{sigma-ss}(zeta)`.
pub fn nonempty_higgs_ss(g: &GammaIndex, zeta: &Eigenvalues, w: &Weights, genus: u32) -> Result<Nonemptiness> {
    check_points(g)?;
    let zero = Rational::zero();
    if zeta.degree(g, &zero).iter().any(|c| !c.is_zero()) {
        return Ok(Nonemptiness { nonempty: false, witness: vec![] });
    }
    if genus > 0 {
        return Ok(Nonemptiness { nonempty: true, witness: vec![] });
    }
    let one = Rational::one();
    let tau = w.degree(g, &one) / Rational::from_integer(g.r().into());
    let degree_of = |p: &GammaIndex| -> Option<i64> {
        if zeta.degree(p, &zero).iter().any(|c| !c.is_zero()) {
            return None;
        }
        // kappa = 1: d_i = tau r_i - sum sigma r_i.
        let r = Rational::from_integer(p.r().into());
        integer_of(&(&tau * r - w.degree(p, &zero)))
    };
    let wit = decompose(g, &degree_of)?;
    Ok(Nonemptiness {
        nonempty: wit.is_some(),
        witness: wit.unwrap_or_default(),
    })
}

/// Non-emptiness of `Conn_gamma^{(kappa,sigma)-ss}(zeta)`.
pub fn nonempty_conn_ss(g: &GammaIndex, zeta: &Eigenvalues, w: &Weights, genus: u32) -> Result<Nonemptiness> {
    check_points(g)?;
    let w = normalize_conn_ss_weights(zeta, w)?;
    if zeta.degree(g, &Rational::one()).iter().any(|c| !c.is_zero()) {
        return Ok(Nonemptiness { nonempty: false, witness: vec![] });
    }
    if genus > 0 {
        return Ok(Nonemptiness { nonempty: true, witness: vec![] });
    }
    let r = Rational::from_integer(g.r().into());
    let tau = w.degree(g, w.kappa()) / r;
    let degree_of = |p: &GammaIndex| -> Option<i64> {
        let d = conn_degree(p, zeta)?;
        let full = p.shift_degree(d);
        let ri = Rational::from_integer(p.r().into());
        if w.degree(&full, w.kappa()) == &tau * ri {
            Some(d)
        } else {
            None
        }
    };
    let wit = decompose(g, &degree_of)?;
    Ok(Nonemptiness {
        nonempty: wit.is_some(),
        witness: wit.unwrap_or_default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffring::rat;

    fn g(r: u32, flags: &[(PointId, &[u32])], d: i64) -> GammaIndex {
        GammaIndex::new(r, flags.iter().map(|(x, v)| (*x, v.to_vec())).collect(), d).unwrap()
    }

    fn rv(center: i64, legs: &[&[i64]]) -> RootVector {
        RootVector {
            center,
            legs: legs.iter().map(|l| l.to_vec()).collect(),
        }
    }

    #[test]
    fn rho_examples() {
        let star = StarGraph::new(vec![1; 4]);
        let gamma = g(2, &[(0, &[1, 1]), (1, &[1, 1]), (2, &[1, 1]), (3, &[1, 1])], -3);
        assert_eq!(rho_of_gamma(&gamma, &star).unwrap(), rv(2, &[&[1], &[1], &[1], &[1]]));
        let trivial = g(2, &[(0, &[2])], 0);
        assert_eq!(rho_of_gamma(&trivial, &StarGraph::new(vec![1])).unwrap(), rv(2, &[&[0]]));
        let deep = g(1, &[(0, &[0, 0, 1])], 0);
        assert!(matches!(
            rho_of_gamma(&deep, &StarGraph::new(vec![1])),
            Err(Error::LegTooShort { point: 0, level: 3 })
        ));
        assert_eq!(rho_of_gamma(&deep, &StarGraph::new(vec![2])).unwrap(), rv(1, &[&[1, 1]]));
    }

    #[test]
    fn tits_examples() {
        let star4 = StarGraph::new(vec![1; 4]);
        assert_eq!(tits_form(&rv(1, &[&[0], &[0], &[0], &[0]]), &star4), 1);
        assert_eq!(tits_form(&rv(2, &[&[1], &[1], &[1], &[1]]), &star4), 0);
        assert_eq!(tits_form(&rv(2, &[&[2]]), &StarGraph::new(vec![1])), 4);
    }

    #[test]
    fn root_examples() {
        let star4 = StarGraph::new(vec![1; 4]);
        assert_eq!(is_root(&rv(0, &[&[1], &[0], &[0], &[0]]), &star4), RootKind::RealRoot);
        assert_eq!(is_root(&rv(2, &[&[1], &[1], &[1], &[1]]), &star4), RootKind::ImaginaryRoot);
        assert_eq!(is_root(&rv(-2, &[&[-1], &[-1], &[-1], &[-1]]), &star4), RootKind::ImaginaryRoot);
        assert_eq!(is_root(&rv(2, &[&[2]]), &StarGraph::new(vec![1])), RootKind::NotARoot);
        assert_eq!(is_root(&rv(1, &[&[-1]]), &StarGraph::new(vec![1])), RootKind::NotARoot);
        assert_eq!(is_root(&rv(0, &[&[0]]), &StarGraph::new(vec![1])), RootKind::NotARoot);
    }

    #[test]
    fn nonempty_examples() {
        let zeta = Eigenvalues::zero(0);
        // Trivial connection on O + O: two rank-1 summands of degree 0.
        let two = g(2, &[(0, &[2]), (1, &[2])], 0);
        let res = nonempty_conn(&two, &zeta, 0).unwrap();
        assert!(res.nonempty);
        assert_eq!(res.witness, vec![g(1, &[(0, &[1]), (1, &[1])], 0); 2]);
        // With zero eigenvalues a connection forces degree 0.
        assert!(!nonempty_conn(&two.shift_degree(-2), &zeta, 0).unwrap().nonempty);
        // Higgs bundles of degree -2 split into two rank-1 summands of degree -1.
        let res = nonempty_higgs_ss(&two.shift_degree(-2), &zeta, &Weights::trivial(), 0).unwrap();
        assert!(res.nonempty);
        assert_eq!(res.witness, vec![g(1, &[(0, &[1]), (1, &[1])], -1); 2]);
        let rank1 = g(1, &[(0, &[1])], 0);
        assert!(nonempty_conn(&rank1, &zeta, 0).unwrap().nonempty);
        assert!(!nonempty_conn(&rank1.shift_degree(-1), &zeta, 0).unwrap().nonempty);
        assert!(nonempty_conn(&rank1, &zeta, 1).unwrap().nonempty);
        let z1 = Eigenvalues::rational([((0, 1), rat(1))]);
        assert!(!nonempty_higgs_ss(&rank1, &z1, &Weights::trivial(), 0).unwrap().nonempty);
        assert!(nonempty_higgs_ss(&rank1, &zeta, &Weights::trivial(), 0).unwrap().nonempty);
    }
}
