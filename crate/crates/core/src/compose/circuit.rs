//! Reduction of feed-forward block diagrams to a single periodic kernel.
//!
//! Fan-out is modelled as a copy (split) kernel and fan-in as an adder (sum)
//! kernel, both memoryless and phase-constant. The diagram is folded in
//! topological order into a running "bus" kernel that maps the circuit inputs
//! to every signal still needed downstream, using only [`series`] and
//! [`parallel`].

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{lift_lti, parallel, series};
use crate::continuous::{discretize, ContinuousSpec, DiscretizeOptions, DEFAULT_TAIL_TOL};
use crate::error::{PtvError, Result};
use crate::kernel::PeriodicKernel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "lowercase")]
pub enum Block {
    Kernel(PeriodicKernel),
    Spec(ContinuousSpec),
    Fir {
        taps: Vec<f64>,
        #[serde(default)]
        lag_min: i64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub block: Block,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Circuit {
    pub nodes: Vec<Node>,
    /// `(from, to)` node ids.
    pub edges: Vec<(String, String)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReduceOptions {
    /// Common sampling period, required when the circuit contains continuous specs.
    pub sample_period_s: Option<f64>,
    pub lag_window: (i64, i64),
    pub tail_tolerance: f64,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        Self {
            sample_period_s: None,
            lag_window: (0, 0),
            tail_tolerance: DEFAULT_TAIL_TOL,
        }
    }
}

impl Circuit {
    pub fn node(mut self, id: impl Into<String>, block: Block) -> Self {
        self.nodes.push(Node {
            id: id.into(),
            block,
        });
        self
    }

    pub fn edge(mut self, from: impl Into<String>, to: impl Into<String>) -> Self {
        self.edges.push((from.into(), to.into()));
        self
    }
}

/// `width`-channel signal copied to `fanout` outputs.
pub fn split_kernel(width: usize, fanout: usize) -> Result<PeriodicKernel> {
    PeriodicKernel::from_fn(width * fanout, width, 1, 0, 0, |i, j, _, _| {
        if i % width == j {
            1.0
        } else {
            0.0
        }
    })
}

/// Sum of `fanin` signals of `width` channels each.
pub fn sum_kernel(width: usize, fanin: usize) -> Result<PeriodicKernel> {
    PeriodicKernel::from_fn(width, width * fanin, 1, 0, 0, |i, j, _, _| {
        if j % width == i {
            1.0
        } else {
            0.0
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Wire {
    /// External input feeding a source node.
    Input(usize),
    /// Output of a processed node.
    Output(usize),
}

fn materialize(node: &Node, opts: &ReduceOptions) -> Result<PeriodicKernel> {
    match &node.block {
        Block::Kernel(k) => Ok(k.clone()),
        Block::Fir { taps, lag_min } => lift_lti(taps, *lag_min, 1),
        Block::Spec(spec) => {
            let ts = opts.sample_period_s.ok_or_else(|| {
                PtvError::InvalidArgument(format!(
                    "node '{}' is a continuous spec but no sample period was given",
                    node.id
                ))
            })?;
            discretize(
                spec,
                ts,
                opts.lag_window,
                DiscretizeOptions {
                    tail_tolerance: opts.tail_tolerance,
                },
            )
            .map_err(|e| match e {
                PtvError::IncommensurateRate { period_s, .. } => PtvError::IncommensuratePeriods(format!(
                    "node '{}' has period {period_s} s, not a multiple of {ts} s",
                    node.id
                )),
                e => e,
            })
        }
    }
}

/// Kahn topological order; `CyclicGraph` when some node is never freed.
fn topo_order(n: usize, preds: &[Vec<usize>], succs: &[Vec<usize>]) -> Result<Vec<usize>> {
    let mut indeg: Vec<usize> = preds.iter().map(Vec::len).collect();
    let mut ready: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).rev().collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop() {
        order.push(v);
        for &w in succs[v].iter().rev() {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                ready.push(w);
            }
        }
    }
    if order.len() != n {
        return Err(PtvError::CyclicGraph);
    }
    Ok(order)
}

/// Memoryless selector from the concatenated `wires` to the concatenated
/// `targets`, each target being a sum of wires.
fn selector(
    wires: &[Wire],
    targets: &[Vec<Wire>],
    width: impl Fn(Wire) -> usize,
) -> Result<PeriodicKernel> {
    let mut offsets = HashMap::new();
    let mut n_in = 0;
    for &w in wires {
        offsets.insert(w, n_in);
        n_in += width(w);
    }
    let out_widths: Vec<usize> = targets
        .iter()
        .map(|t| t.first().map_or(0, |&w| width(w)))
        .collect();
    let n_out: usize = out_widths.iter().sum();
    let mut k = PeriodicKernel::zeros(n_out, n_in, 1, 0, 0)?;
    let mut row = 0;
    for (t, w_out) in targets.iter().zip(out_widths) {
        for &src in t {
            let col = offsets[&src];
            for c in 0..w_out {
                let v = k.tap(row + c, col + c, 0, 0) + 1.0;
                k.set_tap(row + c, col + c, 0, 0, v);
            }
        }
        row += w_out;
    }
    Ok(k)
}

/// Folds a feed-forward circuit into one equivalent kernel.
///
/// Circuit inputs are the inputs of the source nodes (no incoming edges) and
/// circuit outputs are the outputs of the sink nodes (no outgoing edges), both
/// concatenated in node order.
pub fn reduce_circuit(circuit: &Circuit, opts: &ReduceOptions) -> Result<PeriodicKernel> {
    let n = circuit.nodes.len();
    if n == 0 {
        return Err(PtvError::InvalidArgument("circuit has no nodes".into()));
    }
    let mut index = HashMap::new();
    for (i, node) in circuit.nodes.iter().enumerate() {
        if index.insert(node.id.as_str(), i).is_some() {
            return Err(PtvError::InvalidArgument(format!("duplicate node id '{}'", node.id)));
        }
    }
    let mut preds = vec![Vec::new(); n];
    let mut succs = vec![Vec::new(); n];
    for (from, to) in &circuit.edges {
        let lookup = |id: &str| {
            index
                .get(id)
                .copied()
                .ok_or_else(|| PtvError::InvalidArgument(format!("edge references unknown node '{id}'")))
        };
        let (u, v) = (lookup(from)?, lookup(to)?);
        preds[v].push(u);
        succs[u].push(v);
    }
    let order = topo_order(n, &preds, &succs)?;

    let kernels = circuit
        .nodes
        .iter()
        .map(|node| materialize(node, opts))
        .collect::<Result<Vec<_>>>()?;
    for (v, ps) in preds.iter().enumerate() {
        for &u in ps {
            if kernels[u].n_out() != kernels[v].n_in() {
                return Err(PtvError::DimensionMismatch(format!(
                    "'{}' has {} outputs but '{}' expects {} inputs",
                    circuit.nodes[u].id,
                    kernels[u].n_out(),
                    circuit.nodes[v].id,
                    kernels[v].n_in()
                )));
            }
        }
    }
    let width = |w: Wire| match w {
        Wire::Input(v) => kernels[v].n_in(),
        Wire::Output(v) => kernels[v].n_out(),
    };

    let sources: Vec<usize> = (0..n).filter(|&v| preds[v].is_empty()).collect();
    let sinks: Vec<usize> = (0..n).filter(|&v| succs[v].is_empty()).collect();
    let mut wires: Vec<Wire> = sources.iter().map(|&s| Wire::Input(s)).collect();
    let n_inputs: usize = wires.iter().map(|&w| width(w)).sum();
    let mut bus = PeriodicKernel::identity(n_inputs, 1)?;
    let mut done = vec![false; n];

    for &v in &order {
        done[v] = true;
        let feed: Vec<Wire> = if preds[v].is_empty() {
            vec![Wire::Input(v)]
        } else {
            preds[v].iter().map(|&u| Wire::Output(u)).collect()
        };
        let kept: Vec<Wire> = wires
            .iter()
            .copied()
            .filter(|&w| match w {
                Wire::Input(s) => !done[s],
                Wire::Output(u) => succs[u].iter().any(|&x| !done[x]) || succs[u].is_empty(),
            })
            .collect();
        let mut targets: Vec<Vec<Wire>> = kept.iter().map(|&w| vec![w]).collect();
        targets.push(feed);
        let sel = selector(&wires, &targets, width)?;
        let kept_width: usize = kept.iter().map(|&w| width(w)).sum();
        let stage = if kept_width == 0 {
            kernels[v].clone()
        } else {
            parallel(&PeriodicKernel::identity(kept_width, 1)?, &kernels[v])?
        };
        bus = series(&bus, &series(&sel, &stage)?)?;
        wires = kept;
        wires.push(Wire::Output(v));
    }

    let outputs: Vec<Vec<Wire>> = sinks.iter().map(|&s| vec![Wire::Output(s)]).collect();
    let sel = selector(&wires, &outputs, width)?;
    series(&bus, &sel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compose::{lcm_period, parallel};

    fn kernel(period: usize, seed: f64) -> PeriodicKernel {
        PeriodicKernel::from_fn(1, 1, period, -1, 2, |_, _, p, m| {
            ((p as f64 + 1.3) * seed + m as f64 * 0.7).sin()
        })
        .unwrap()
    }

    #[test]
    fn single_node_is_unchanged() {
        let k = kernel(3, 0.4).with_sample_period(Some(0.5));
        let c = Circuit::default().node("only", Block::Kernel(k.clone()));
        let r = reduce_circuit(&c, &ReduceOptions::default()).unwrap();
        assert_eq!(r, k);
    }

    #[test]
    fn parallel_only_graph() {
        let a = kernel(2, 0.3);
        let b = kernel(3, 1.1);
        let c = Circuit::default()
            .node("a", Block::Kernel(a.clone()))
            .node("b", Block::Kernel(b.clone()));
        let r = reduce_circuit(&c, &ReduceOptions::default()).unwrap();
        let direct = parallel(&a, &b).unwrap();
        assert_eq!(r.period(), 6);
        assert_eq!(r.max_abs_diff(&direct).unwrap(), 0.0);
    }

    #[test]
    fn chain_equals_series() {
        let a = kernel(2, 0.3);
        let b = kernel(3, 1.1);
        let c = Circuit::default()
            .node("a", Block::Kernel(a.clone()))
            .node("b", Block::Kernel(b.clone()))
            .edge("a", "b");
        let r = reduce_circuit(&c, &ReduceOptions::default()).unwrap();
        assert_eq!(r.period(), lcm_period(2, 3));
        assert!(r.max_abs_diff(&series(&a, &b).unwrap()).unwrap() < 1e-15);
    }

    #[test]
    fn split_and_sum() {
        // in -> {a, b} -> out: a + b
        let a = kernel(2, 0.3);
        let b = kernel(4, 0.9);
        let c = Circuit::default()
            .node("in", Block::Fir { taps: vec![1.0], lag_min: 0 })
            .node("a", Block::Kernel(a.clone()))
            .node("b", Block::Kernel(b.clone()))
            .node("out", Block::Fir { taps: vec![1.0], lag_min: 0 })
            .edge("in", "a")
            .edge("in", "b")
            .edge("a", "out")
            .edge("b", "out");
        let r = reduce_circuit(&c, &ReduceOptions::default()).unwrap();
        assert_eq!((r.n_out(), r.n_in(), r.period()), (1, 1, 4));
        for p in 0..4 {
            for m in -1..=2 {
                let expected = a.tap(0, 0, p, m) + b.tap(0, 0, p, m);
                assert!((r.tap(0, 0, p, m) - expected).abs() < 1e-15);
            }
        }
        let s = split_kernel(2, 3).unwrap();
        assert_eq!((s.n_out(), s.n_in()), (6, 2));
        let a = sum_kernel(2, 3).unwrap();
        assert_eq!((a.n_out(), a.n_in()), (2, 6));
    }

    #[test]
    fn cycle_is_rejected() {
        let k = kernel(1, 0.5);
        let c = Circuit::default()
            .node("a", Block::Kernel(k.clone()))
            .node("b", Block::Kernel(k))
            .edge("a", "b")
            .edge("b", "a");
        assert!(matches!(
            reduce_circuit(&c, &ReduceOptions::default()),
            Err(PtvError::CyclicGraph)
        ));
    }

    #[test]
    fn spec_needs_commensurate_rate() {
        let spec = crate::continuous::build_modulator(crate::continuous::sine_harmonics(), 2.5).unwrap();
        let c = Circuit::default().node("m", Block::Spec(spec));
        let opts = ReduceOptions {
            sample_period_s: Some(1.0),
            ..Default::default()
        };
        assert!(matches!(
            reduce_circuit(&c, &opts),
            Err(PtvError::IncommensuratePeriods(_))
        ));
        assert!(reduce_circuit(&c, &ReduceOptions::default()).is_err());
    }

    #[test]
    fn unknown_edge_and_dimension_errors() {
        let c = Circuit::default()
            .node("a", Block::Kernel(kernel(1, 0.1)))
            .edge("a", "zz");
        assert!(matches!(
            reduce_circuit(&c, &ReduceOptions::default()),
            Err(PtvError::InvalidArgument(_))
        ));
        let c = Circuit::default()
            .node("a", Block::Kernel(PeriodicKernel::identity(2, 1).unwrap()))
            .node("b", Block::Kernel(kernel(1, 0.1)))
            .edge("a", "b");
        assert!(matches!(
            reduce_circuit(&c, &ReduceOptions::default()),
            Err(PtvError::DimensionMismatch(_))
        ));
    }
}
