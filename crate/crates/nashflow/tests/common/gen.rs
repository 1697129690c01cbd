//! Seeded random instances, inflows and piecewise-linear families.

use nashflow::netmodel::Instance;
use nashflow::rational::{frac, q, Q};
use nashflow::timefn::{PwlFunction, StepFunction};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

fn pick_q<R: Rng>(rng: &mut R, halves: &[i64]) -> Q {
    frac(*halves.choose(rng).unwrap(), 2)
}

/// Random network with at most `max_nodes` nodes, `max_arcs` arcs and
/// `max_commodities` commodities, each commodity routed between connected
/// nodes with inflow on `[0, 1)`.
pub fn random_instance<R: Rng>(rng: &mut R, max_nodes: usize, max_arcs: usize, max_commodities: usize) -> Instance {
    loop {
        let n = rng.gen_range(2..=max_nodes);
        let m = rng.gen_range(1..=max_arcs);
        let mut arcs = Vec::new();
        let mut adj = vec![Vec::new(); n];
        for k in 0..m {
            let u = rng.gen_range(0..n);
            let mut v = rng.gen_range(0..n - 1);
            if v >= u {
                v += 1;
            }
            adj[u].push(v);
            let tau = pick_q(rng, &[1, 2, 3, 4, 6]);
            let nu = pick_q(rng, &[1, 2, 3, 4, 6]);
            arcs.push(format!(
                r#"{{"id": "e{k}", "tail": "v{u}", "head": "v{v}", "transit": "{tau}", "capacity": "{nu}"}}"#
            ));
        }
        let mut pairs = Vec::new();
        for s in 0..n {
            let mut seen = vec![false; n];
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                if !std::mem::replace(&mut seen[u], true) {
                    stack.extend(adj[u].iter().copied());
                }
            }
            pairs.extend((0..n).filter(|&t| t != s && seen[t]).map(|t| (s, t)));
        }
        if pairs.is_empty() {
            continue;
        }
        let k = rng.gen_range(1..=max_commodities);
        let commodities: Vec<String> = (0..k)
            .map(|j| {
                let (s, t) = *pairs.choose(rng).unwrap();
                let r = pick_q(rng, &[1, 2, 4]);
                format!(
                    r#"{{"id": "c{j}", "origin": "v{s}", "destination": "v{t}", "rate": "{r}", "inflow_start": 0, "inflow_end": 1}}"#
                )
            })
            .collect();
        let nodes: Vec<String> = (0..n).map(|v| format!("\"v{v}\"")).collect();
        let json = format!(
            r#"{{"nodes": [{}], "arcs": [{}], "commodities": [{}]}}"#,
            nodes.join(","),
            arcs.join(","),
            commodities.join(",")
        );
        if let Ok(inst) = Instance::from_json_str(&json) {
            return inst;
        }
    }
}

/// Random non-negative step function vanishing outside `[0, horizon)`.
pub fn random_inflow<R: Rng>(rng: &mut R, horizon: i64) -> StepFunction {
    if rng.gen_bool(0.4) {
        return StepFunction::zero();
    }
    let mut cuts: Vec<i64> = (0..rng.gen_range(1..=3)).map(|_| rng.gen_range(1..2 * horizon)).collect();
    cuts.push(0);
    cuts.push(2 * horizon);
    cuts.sort();
    cuts.dedup();
    let pieces = cuts
        .windows(2)
        .map(|w| (frac(w[0], 2), frac(w[1], 2), pick_q(rng, &[0, 1, 2, 4, 6])))
        .collect();
    StepFunction::from_pieces(pieces).unwrap()
}

/// Continuous piecewise-linear function with up to four kinks in `[0, 10]`.
pub fn random_pwl<R: Rng>(rng: &mut R) -> PwlFunction {
    let mut xs: Vec<i64> = (0..rng.gen_range(1..=4)).map(|_| rng.gen_range(0..=20)).collect();
    xs.sort();
    xs.dedup();
    let mut y = frac(rng.gen_range(-8..=8), 2);
    let mut points = vec![(frac(xs[0], 2), y.clone())];
    for w in xs.windows(2) {
        let slope = frac(rng.gen_range(-6..=6), 2);
        y += slope * frac(w[1] - w[0], 2);
        points.push((frac(w[1], 2), y.clone()));
    }
    let before = frac(rng.gen_range(-6..=6), 2);
    let after = frac(rng.gen_range(-6..=6), 2);
    PwlFunction::new(points, before, after).unwrap_or_else(|_| PwlFunction::linear(q(1), q(0)))
}
