use serde::{Deserialize, Serialize};

use super::{LpError, LpModel, Relation, Sense};
use crate::capacity::{ChannelParams, Randomness};
use crate::combin::{binomial, Combinations};

/// Default limit on the number of eavesdropper placements in the outer bound.
pub const DEFAULT_PLACEMENT_CAP: u128 = 100_000;

/// A chain of `hops.len()` erasure hops. `node_randomness[j]` is the private
/// randomness of node j, the transmitter on hop j + 1 (node 0 is the source).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineNetwork {
    pub hops: Vec<ChannelParams>,
    pub node_randomness: Vec<Randomness>,
    /// Number of eavesdropped hops V.
    pub eve_cardinality: usize,
}

impl LineNetwork {
    pub fn new(
        hops: Vec<ChannelParams>,
        node_randomness: Vec<Randomness>,
        eve_cardinality: usize,
    ) -> Result<Self, LpError> {
        let net = Self {
            hops,
            node_randomness,
            eve_cardinality,
        };
        net.validate()?;
        Ok(net)
    }

    /// N identical hops, unlimited source, relays with `relay` randomness.
    pub fn uniform(n: usize, hop: ChannelParams, relay: Randomness, eve_cardinality: usize) -> Result<Self, LpError> {
        let mut rand = vec![relay; n];
        if let Some(first) = rand.first_mut() {
            *first = Randomness::Unlimited;
        }
        Self::new(vec![hop; n], rand, eve_cardinality)
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.hops.len();
        if n == 0 {
            return Err(LpError::InvalidNetwork("a line network needs at least one hop".into()));
        }
        if self.node_randomness.len() != n {
            return Err(LpError::InvalidNetwork(format!(
                "{n} hops need {n} node randomness rates (nodes 0..{}), got {}",
                n - 1,
                self.node_randomness.len()
            )));
        }
        if !(1..=n).contains(&self.eve_cardinality) {
            return Err(LpError::InvalidNetwork(format!(
                "eve_cardinality {} outside 1..={n}",
                self.eve_cardinality
            )));
        }
        for h in &self.hops {
            h.validate()?;
        }
        for r in &self.node_randomness {
            r.validate()?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.hops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hops.is_empty()
    }
}

/// Name suffix for a placement: sorted 1-based hop indices joined by `_`.
pub fn placement_suffix(placement: &[usize]) -> String {
    let mut p = placement.to_vec();
    p.sort_unstable();
    p.iter().map(|j| j.to_string()).collect::<Vec<_>>().join("_")
}

/// k / ((1 - delta) delta_e) + m / (1 - delta) <= 1, with the zero
/// denominators written as k <= 0 (and m <= 0 when delta = 1).
fn add_time_constraint(
    model: &mut LpModel,
    name: &str,
    hop: &ChannelParams,
    k: usize,
    m: usize,
) -> Result<(), LpError> {
    let slot = hop.secret_slot_rate();
    let receive = 1.0 - hop.delta;
    if slot > 0.0 {
        return model.add_constraint(name, vec![(k, 1.0 / slot), (m, 1.0 / receive)], Relation::Le, 1.0);
    }
    model.add_constraint(format!("{name}_key"), vec![(k, 1.0)], Relation::Le, 0.0)?;
    if receive > 0.0 {
        model.add_constraint(name, vec![(m, 1.0 / receive)], Relation::Le, 1.0)
    } else {
        model.add_constraint(name, vec![(m, 1.0)], Relation::Le, 0.0)
    }
}

/// max k s.t. k / ((1 - delta) delta_e) <= 1, k <= D delta_e (1 - delta) / (1 - delta delta_e).
pub fn build_single_hop_sk(p: &ChannelParams, d: Randomness) -> Result<LpModel, LpError> {
    p.validate()?;
    d.validate()?;
    let mut model = LpModel::new("single_hop_sk");
    let k = model.add_variable("k")?;
    let slot = p.secret_slot_rate();
    if slot > 0.0 {
        model.add_constraint("time", vec![(k, 1.0 / slot)], Relation::Le, 1.0)?;
    } else {
        model.add_constraint("time", vec![(k, 1.0)], Relation::Le, 0.0)?;
    }
    if let Randomness::Limited(rate) = d {
        model.add_constraint("rand", vec![(k, 1.0)], Relation::Le, rate * p.secret_fraction())?;
    }
    model.set_objective(Sense::Maximize, vec![(k, 1.0)])?;
    Ok(model)
}

/// Single-hop secret-message LP: security, time and (for limited D) randomness rows.
pub fn build_single_hop_sm(p: &ChannelParams, d: Randomness) -> Result<LpModel, LpError> {
    p.validate()?;
    d.validate()?;
    let mut model = LpModel::new("single_hop_sm");
    let m = model.add_variable("m")?;
    let k = model.add_variable("k")?;
    model.add_constraint("sec", vec![(m, p.key_cost_per_message()), (k, -1.0)], Relation::Le, 0.0)?;
    add_time_constraint(&mut model, "time", p, k, m)?;
    if let Randomness::Limited(rate) = d {
        model.add_constraint("rand", vec![(k, 1.0)], Relation::Le, rate * p.secret_fraction())?;
    }
    model.set_objective(Sense::Maximize, vec![(m, 1.0)])?;
    Ok(model)
}

struct HopVars {
    k: Vec<usize>,
    d: Vec<usize>,
}

fn declare_hop_vars(model: &mut LpModel, n: usize, suffix: &str) -> Result<HopVars, LpError> {
    let mut k = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    for j in 1..=n {
        k.push(model.add_variable(format!("k_{j}{suffix}"))?);
    }
    for j in 1..=n {
        d.push(model.add_variable(format!("d_{j}{suffix}"))?);
    }
    Ok(HopVars { k, d })
}

/// Randomness available to node j - 1 (hop j) as LP terms: the forwarded
/// d_{j-1} (absent for j = 1 since d_0 = 0) plus D_{j-1}, either a constant
/// or a variable in extension models.
enum NodeRandomness {
    Constant(Randomness),
    Variable(usize),
}

/// k_j <= (d_{j-1} + D_{j-1}) delta_e (1 - delta) / (1 - delta delta_e).
/// Omitted when D_{j-1} is unlimited.
fn add_randomness_constraint(
    model: &mut LpModel,
    name: &str,
    hop: &ChannelParams,
    k: usize,
    prev_d: Option<usize>,
    node: &NodeRandomness,
) -> Result<(), LpError> {
    let c = hop.secret_fraction();
    let mut terms = vec![(k, 1.0)];
    if let Some(d) = prev_d {
        terms.push((d, -c));
    }
    match *node {
        NodeRandomness::Constant(Randomness::Unlimited) => Ok(()),
        NodeRandomness::Constant(Randomness::Limited(r)) => model.add_constraint(name, terms, Relation::Le, c * r),
        NodeRandomness::Variable(v) => {
            terms.push((v, -c));
            model.add_constraint(name, terms, Relation::Le, 0.0)
        }
    }
}

/// d_j <= d_{j-1} + D_{j-1}; omitted when D_{j-1} is unlimited.
fn add_forward_constraint(
    model: &mut LpModel,
    name: &str,
    d: usize,
    prev_d: Option<usize>,
    node: &NodeRandomness,
) -> Result<(), LpError> {
    let mut terms = vec![(d, 1.0)];
    if let Some(p) = prev_d {
        terms.push((p, -1.0));
    }
    match *node {
        NodeRandomness::Constant(Randomness::Unlimited) => Ok(()),
        NodeRandomness::Constant(Randomness::Limited(r)) => model.add_constraint(name, terms, Relation::Le, r),
        NodeRandomness::Variable(v) => {
            terms.push((v, -1.0));
            model.add_constraint(name, terms, Relation::Le, 0.0)
        }
    }
}

fn one_eve_rows(
    model: &mut LpModel,
    net: &LineNetwork,
    m: usize,
    vars: &HopVars,
    nodes: &[NodeRandomness],
) -> Result<(), LpError> {
    for (idx, hop) in net.hops.iter().enumerate() {
        let j = idx + 1;
        let (k, d) = (vars.k[idx], vars.d[idx]);
        let prev_d = (idx > 0).then(|| vars.d[idx - 1]);
        model.add_constraint(format!("sec_{j}"), vec![(m, hop.key_cost_per_message()), (k, -1.0)], Relation::Le, 0.0)?;
        add_time_constraint(model, &format!("time_{j}"), hop, k, m)?;
        add_randomness_constraint(model, &format!("rand_{j}"), hop, k, prev_d, &nodes[idx])?;
        model.add_constraint(format!("flow_{j}"), vec![(d, 1.0), (m, 1.0)], Relation::Le, 1.0 - hop.delta)?;
        add_forward_constraint(model, &format!("fwd_{j}"), d, prev_d, &nodes[idx])?;
    }
    Ok(())
}

fn all_eves_rows(
    model: &mut LpModel,
    net: &LineNetwork,
    m: usize,
    vars: &HopVars,
    nodes: &[NodeRandomness],
) -> Result<(), LpError> {
    for (idx, hop) in net.hops.iter().enumerate() {
        let j = idx + 1;
        let (k, d) = (vars.k[idx], vars.d[idx]);
        let prev_d = (idx > 0).then(|| vars.d[idx - 1]);
        model.add_constraint(
            format!("sec_{j}"),
            vec![(m, hop.key_cost_per_message()), (k, -1.0), (d, 1.0)],
            Relation::Le,
            0.0,
        )?;
        add_time_constraint(model, &format!("time_{j}"), hop, k, m)?;
        add_randomness_constraint(model, &format!("rand_{j}"), hop, k, prev_d, &nodes[idx])?;
    }
    Ok(())
}

fn constant_nodes(net: &LineNetwork) -> Vec<NodeRandomness> {
    net.node_randomness.iter().map(|&r| NodeRandomness::Constant(r)).collect()
}

/// One-Eve LP: every hop gets security, time, randomness and flow rows.
/// Unlimited node randomness drops that node's randomness and forwarding rows.
pub fn build_one_eve(net: &LineNetwork) -> Result<LpModel, LpError> {
    net.validate()?;
    let mut model = LpModel::new("one_eve");
    let m = model.add_variable("m")?;
    let vars = declare_hop_vars(&mut model, net.len(), "")?;
    one_eve_rows(&mut model, net, m, &vars, &constant_nodes(net))?;
    model.set_objective(Sense::Maximize, vec![(m, 1.0)])?;
    Ok(model)
}

/// All-Eves LP: the forwarded d_j is subtracted from the hop-j key budget.
pub fn build_all_eves(net: &LineNetwork) -> Result<LpModel, LpError> {
    net.validate()?;
    let mut model = LpModel::new("all_eves");
    let m = model.add_variable("m")?;
    let vars = declare_hop_vars(&mut model, net.len(), "")?;
    all_eves_rows(&mut model, net, m, &vars, &constant_nodes(net))?;
    model.set_objective(Sense::Maximize, vec![(m, 1.0)])?;
    Ok(model)
}

pub fn build_v_eves_outer(net: &LineNetwork) -> Result<LpModel, LpError> {
    build_v_eves_outer_with_cap(net, DEFAULT_PLACEMENT_CAP)
}

/// Outer bound over every size-V placement (lexicographic), one (k, d)
/// family per placement sharing the rate m.
pub fn build_v_eves_outer_with_cap(net: &LineNetwork, cap: u128) -> Result<LpModel, LpError> {
    net.validate()?;
    let n = net.len();
    let v = net.eve_cardinality;
    let count = binomial(n as u64, v as u64);
    if count > cap {
        return Err(LpError::PlacementLimit { count, cap });
    }
    let mut model = LpModel::new(format!("v_eves_outer_v{v}"));
    let m = model.add_variable("m")?;
    for placement in Combinations::new(n, v) {
        let hops: Vec<usize> = placement.iter().map(|i| i + 1).collect();
        let suffix = format!("__{}", placement_suffix(&hops));
        let vars = declare_hop_vars(&mut model, n, &suffix)?;
        for (idx, hop) in net.hops.iter().enumerate() {
            let j = idx + 1;
            let (k, d) = (vars.k[idx], vars.d[idx]);
            let prev_d = (idx > 0).then(|| vars.d[idx - 1]);
            let node = NodeRandomness::Constant(net.node_randomness[idx]);
            if placement.contains(&idx) {
                model.add_constraint(
                    format!("sec_{j}{suffix}"),
                    vec![(m, hop.key_cost_per_message()), (k, -1.0), (d, 1.0)],
                    Relation::Le,
                    0.0,
                )?;
                add_time_constraint(&mut model, &format!("time_{j}{suffix}"), hop, k, m)?;
                add_randomness_constraint(&mut model, &format!("rand_{j}{suffix}"), hop, k, prev_d, &node)?;
            } else {
                model.add_constraint(
                    format!("flow_{j}{suffix}"),
                    vec![(d, 1.0), (m, 1.0)],
                    Relation::Le,
                    1.0 - hop.delta,
                )?;
                // with d_0 = 0 the first hop reads d_1 <= D_0
                add_forward_constraint(&mut model, &format!("fwd_{j}{suffix}"), d, prev_d, &node)?;
            }
        }
    }
    model.set_objective(Sense::Maximize, vec![(m, 1.0)])?;
    Ok(model)
}

/// Linear form sum_j a_j D_j + c, constrained to be <= 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearForm {
    /// One coefficient per node 0..N-1.
    pub coefficients: Vec<f64>,
    #[serde(default)]
    pub constant: f64,
}

/// Minimize sum_j g_j D_j while delivering `target_rate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostObjective {
    pub weights: Vec<f64>,
    pub target_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtensionBase {
    #[default]
    OneEve,
    AllEves,
}

/// Extra linear requirements on the node randomness rates. The D_j become
/// decision variables; finite rates in the network act as upper bounds.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpExtension {
    #[serde(default)]
    pub base: ExtensionBase,
    #[serde(default)]
    pub constraints: Vec<LinearForm>,
    #[serde(default)]
    pub cost: Option<CostObjective>,
}

pub fn build_extension(net: &LineNetwork, ext: &LpExtension) -> Result<LpModel, LpError> {
    net.validate()?;
    let n = net.len();
    let mut model = LpModel::new(match ext.cost {
        Some(_) => "randomness_cost",
        None => "randomness_constrained",
    });
    let m = model.add_variable("m")?;
    let vars = declare_hop_vars(&mut model, n, "")?;
    let mut dvars = Vec::with_capacity(n);
    for j in 0..n {
        dvars.push(model.add_variable(format!("D_{j}"))?);
    }
    let nodes: Vec<NodeRandomness> = dvars.iter().map(|&v| NodeRandomness::Variable(v)).collect();
    match ext.base {
        ExtensionBase::OneEve => one_eve_rows(&mut model, net, m, &vars, &nodes)?,
        ExtensionBase::AllEves => all_eves_rows(&mut model, net, m, &vars, &nodes)?,
    }
    for (j, r) in net.node_randomness.iter().enumerate() {
        if let Randomness::Limited(cap) = r {
            model.add_constraint(format!("cap_{j}"), vec![(dvars[j], 1.0)], Relation::Le, *cap)?;
        }
    }
    for (i, f) in ext.constraints.iter().enumerate() {
        if f.coefficients.len() != n {
            return Err(LpError::InvalidNetwork(format!(
                "extension constraint {i} has {} coefficients for {n} nodes",
                f.coefficients.len()
            )));
        }
        let terms = dvars.iter().copied().zip(f.coefficients.iter().copied()).collect();
        model.add_constraint(format!("ext_{i}"), terms, Relation::Le, -f.constant)?;
    }
    match &ext.cost {
        Some(cost) => {
            if cost.weights.len() != n {
                return Err(LpError::InvalidNetwork(format!(
                    "cost has {} weights for {n} nodes",
                    cost.weights.len()
                )));
            }
            model.add_constraint("target", vec![(m, 1.0)], Relation::Eq, cost.target_rate)?;
            let terms = dvars.iter().copied().zip(cost.weights.iter().copied()).collect();
            model.set_objective(Sense::Minimize, terms)?;
        }
        None => model.set_objective(Sense::Maximize, vec![(m, 1.0)])?,
    }
    Ok(model)
}
