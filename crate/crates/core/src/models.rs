//! Model generators: the eight-location sample system, rotating quadrant
//! systems and the hybridized linear switched system.

use std::f64::consts::PI;

use crate::pphs::{ConeInvariant, GuardEdge, Halfspace, InitPoint, Location, Pphs, Polyhedron};

/// Switched-system modes.
pub const SWITCHED_A1: [[f64; 2]; 2] = [[-5.0, -4.0], [-1.0, -2.0]];
pub const SWITCHED_A2: [[f64; 2]; 2] = [[-2.0, -4.0], [20.0, -2.0]];

fn rot(k: usize, v: [f64; 2]) -> [f64; 2] {
    match k % 4 {
        0 => v,
        1 => [-v[1], v[0]],
        2 => [-v[0], -v[1]],
        _ => [v[1], -v[0]],
    }
}

/// Quadrant `k` (counter-clockwise from the first). Halfspace 0 is bounded
/// by the axis the rotation exits through, halfspace 1 by the one it
/// enters through.
pub fn quadrant(k: usize) -> ConeInvariant {
    let (e1, e2) = (rot(k, [1.0, 0.0]), rot(k, [0.0, 1.0]));
    ConeInvariant::new(Polyhedron {
        dim: 2,
        halfspaces: vec![Halfspace::le(vec![-e1[0], -e1[1]], 0.0), Halfspace::le(vec![-e2[0], -e2[1]], 0.0)],
    })
    .expect("homogeneous")
}

/// Four locations, one per quadrant; location `k` flows with the single
/// direction `flows[k]` (written in the first quadrant's frame and rotated
/// into quadrant `k`) and switches to location `k + 1` on its exit axis.
/// With `flows[k] = [-1, c]` every switch scales the norm by `c`.
pub fn rotating_quadrants(flows: [[f64; 2]; 4]) -> Pphs {
    let locations = (0..4)
        .map(|k| Location { invariant: quadrant(k), flow: Polyhedron::point(&rot(k, flows[k])) })
        .collect();
    let edges = (0..4).map(|k| GuardEdge { loc: k, facet: 0, dist: vec![((k + 1) % 4, 1.0)] }).collect();
    Pphs { dim: 2, locations, edges, init: InitPoint { loc: 0, point: vec![1.0, 0.0] } }
}

/// The eight-location system over the four quadrants (`q0, q7` in the
/// first, `q1, q2` in the second, `q3, q4` in the third, `q5, q6` in the
/// fourth). Location `i` scales the norm by `c[i]` per quarter turn and
/// switches with the ring distribution of probability `p[i]`, so the
/// abstraction reproduces `ring_example(c.map(ln), p)`.
pub fn sample_pphs(c: [f64; 8], p: [f64; 8]) -> Pphs {
    const REGION: [usize; 8] = [0, 1, 1, 2, 2, 3, 3, 0];
    let locations = (0..8)
        .map(|i| Location { invariant: quadrant(REGION[i]), flow: Polyhedron::point(&rot(REGION[i], [-1.0, c[i]])) })
        .collect();
    let edges = (0..8)
        .map(|i| {
            let j = i + 1;
            let (a, b) = if j % 2 == 0 { ((j + 1) % 8, (j + 2) % 8) } else { (j % 8, (j + 1) % 8) };
            GuardEdge { loc: i, facet: 0, dist: vec![(a, p[i]), (b, 1.0 - p[i])] }
        })
        .collect();
    Pphs { dim: 2, locations, edges, init: InitPoint { loc: 0, point: vec![1.0, 0.0] } }
}

fn apply(a: [[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

fn snap(x: f64) -> f64 {
    if x.abs() < 1e-15 {
        0.0
    } else {
        x
    }
}

fn ray(k: usize, sectors: usize) -> [f64; 2] {
    let t = 2.0 * PI * (k % sectors) as f64 / sectors as f64;
    [snap(t.cos()), snap(t.sin())]
}

/// Hybridization of `v' = A v` switching between `a1` and `a2` over
/// `sectors` equal angular sectors (at least 3). Sector `k` hosts location
/// `2k` (flow cone spanned by `a1` applied to the sector's rays) and `2k+1`
/// (same with `a2`). At a sector boundary the system moves to either
/// location of the adjacent sector with probability 1/2. Halfspace 0 of a
/// sector is bounded by its clockwise ray, halfspace 1 by the other. The
/// initial point is `(1, 0)`.
pub fn switched_system(a1: [[f64; 2]; 2], a2: [[f64; 2]; 2], sectors: usize) -> Pphs {
    assert!(sectors >= 3, "sectors must span less than a half plane");
    let mut locations = Vec::with_capacity(2 * sectors);
    let mut edges = Vec::with_capacity(4 * sectors);
    for k in 0..sectors {
        let (r0, r1) = (ray(k, sectors), ray(k + 1, sectors));
        let invariant = ConeInvariant::new(Polyhedron {
            dim: 2,
            halfspaces: vec![Halfspace::le(vec![r0[1], -r0[0]], 0.0), Halfspace::le(vec![-r1[1], r1[0]], 0.0)],
        })
        .expect("homogeneous");
        let prev = (k + sectors - 1) % sectors;
        let next = (k + 1) % sectors;
        for (m, a) in [a1, a2].into_iter().enumerate() {
            let loc = 2 * k + m;
            locations.push(Location { invariant: invariant.clone(), flow: Polyhedron::cone2(apply(a, r0), apply(a, r1)) });
            edges.push(GuardEdge { loc, facet: 0, dist: vec![(2 * prev, 0.5), (2 * prev + 1, 0.5)] });
            edges.push(GuardEdge { loc, facet: 1, dist: vec![(2 * next, 0.5), (2 * next + 1, 0.5)] });
        }
    }
    // start on the first ray in a mode that flows into the sector
    let r0 = ray(0, sectors);
    let loc = if cross(r0, apply(a1, r0)) > 0.0 || cross(r0, apply(a2, r0)) <= 0.0 { 0 } else { 1 };
    Pphs { dim: 2, locations, edges, init: InitPoint { loc, point: r0.to_vec() } }
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

/// The switched-system case study at the given partition size.
pub fn switched_case_study(sectors: usize) -> Pphs {
    switched_system(SWITCHED_A1, SWITCHED_A2, sectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_models_are_valid() {
        assert!(rotating_quadrants([[-2.0, 1.0]; 4]).validate().is_empty());
        assert!(sample_pphs([0.5; 8], [0.5; 8]).validate().is_empty());
        for n in [4, 8, 16] {
            let h = switched_case_study(n);
            assert_eq!(h.location_count(), 2 * n);
            assert!(h.validate().is_empty(), "{n}: {:?}", h.validate());
        }
    }

    #[test]
    fn quadrant_facets() {
        let q = quadrant(0);
        assert!(q.base().contains(&[1.0, 1.0], 0.0));
        assert!(!q.base().contains(&[-1.0, 1.0], 0.0));
        let q2 = quadrant(2);
        assert!(q2.base().contains(&[-1.0, -1.0], 0.0));
    }
}
