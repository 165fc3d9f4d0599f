use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::{adapt_mcs, LinkState, ResolvedLink, XhaulError, XhaulLinkConfig};
use crate::domain::{CandidateLink, PlatformCatalog, Topology};
use crate::telemetry::WeatherSample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshDemand {
    pub source: String,
    pub sink: String,
    pub offered_bps: f64,
}

/// One undirected mesh edge with its current and clear-sky capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshLink {
    pub id: String,
    pub a: String,
    pub b: String,
    pub platform: String,
    pub state: LinkState,
    pub nominal_bps: f64,
}

impl MeshLink {
    fn usable(&self) -> bool {
        self.state.available && self.state.throughput_bps > 0.0
    }

    fn other(&self, node: &str) -> &str {
        if self.a == node {
            &self.b
        } else {
            &self.a
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingPolicy {
    /// Widest path on current capacities.
    ThroughputMax,
    /// Widest path on clear-sky capacities, never re-routed for weather.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    pub demand: usize,
    /// Link ids from source to sink; `None` when undeliverable.
    pub path: Option<Vec<String>>,
    pub nodes: Vec<String>,
    pub delivered_bps: f64,
}

/// Evaluates every candidate link of the topology. Microwave and mmWave
/// links run the widest channel with the best modulation that fits the
/// current SNR; optical links are evaluated by `optical`.
pub fn build_mesh(
    topology: &Topology,
    catalog: &PlatformCatalog,
    weather: &dyn Fn(&CandidateLink) -> WeatherSample,
    optical: &dyn Fn(&CandidateLink, f64, &WeatherSample) -> LinkState,
) -> Result<Vec<MeshLink>, XhaulError> {
    let mut out = Vec::new();
    for l in topology.links() {
        let spec = catalog.require(&l.platform)?;
        let d_km = topology.distance(&l.a, &l.b)? / 1e3;
        let w = weather(l);
        let (state, nominal_bps) = if spec.xhaul.is_some() {
            let base = XhaulLinkConfig::nominal(spec)?;
            let eval = |ws: &WeatherSample| -> Result<LinkState, XhaulError> {
                let cfg = adapt_mcs(catalog, &base, d_km, ws, 0.0)?;
                Ok(ResolvedLink::new(catalog, &cfg)?.state(d_km, ws, &Default::default()))
            };
            (eval(&w)?, eval(&WeatherSample::clear())?.throughput_bps)
        } else {
            (optical(l, d_km, &w), optical(l, d_km, &WeatherSample::clear()).throughput_bps)
        };
        out.push(MeshLink {
            id: l.id.clone(),
            a: l.a.clone(),
            b: l.b.clone(),
            platform: l.platform.clone(),
            state,
            nominal_bps,
        });
    }
    Ok(out)
}

fn weight(l: &MeshLink, policy: RoutingPolicy) -> f64 {
    match policy {
        RoutingPolicy::ThroughputMax if l.usable() => l.state.throughput_bps,
        RoutingPolicy::ThroughputMax => 0.0,
        RoutingPolicy::Fixed => l.nominal_bps,
    }
}

/// Widest path, then fewest hops, then the lexicographically smallest
/// sequence of (node, link id) steps. Returns link indices.
fn widest_path(links: &[MeshLink], w: &[f64], src: &str, dst: &str) -> Option<Vec<usize>> {
    let mut adj: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, l) in links.iter().enumerate() {
        if w[i] > 0.0 {
            adj.entry(&l.a).or_default().push(i);
            adj.entry(&l.b).or_default().push(i);
        }
    }
    // Maximin Dijkstra on bottleneck width.
    let mut best: BTreeMap<&str, f64> = BTreeMap::new();
    let mut done: BTreeMap<&str, bool> = BTreeMap::new();
    best.insert(src, f64::INFINITY);
    loop {
        let next = best
            .iter()
            .filter(|(n, _)| !done.contains_key(*n))
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(a.0)))
            .map(|(n, v)| (*n, *v));
        let Some((u, bu)) = next else { break };
        done.insert(u, true);
        if u == dst {
            break;
        }
        for &i in adj.get(u).map(Vec::as_slice).unwrap_or(&[]) {
            let v = links[i].other(u);
            let cand = bu.min(w[i]);
            let e = best.entry(v).or_insert(0.0);
            if cand > *e {
                *e = cand;
            }
        }
    }
    let bottleneck = *best.get(dst)?;
    if !(bottleneck > 0.0) || src == dst {
        return None;
    }
    // Hop distances to dst over links at least as wide as the bottleneck.
    let wide = |i: usize| w[i] >= bottleneck;
    let mut hops: BTreeMap<&str, usize> = BTreeMap::new();
    hops.insert(dst, 0);
    let mut q = VecDeque::from([dst]);
    while let Some(u) = q.pop_front() {
        let hu = hops[u];
        for &i in adj.get(u).map(Vec::as_slice).unwrap_or(&[]) {
            if !wide(i) {
                continue;
            }
            let v = links[i].other(u);
            if !hops.contains_key(v) {
                hops.insert(v, hu + 1);
                q.push_back(v);
            }
        }
    }
    let mut path = Vec::new();
    let mut u = src;
    while u != dst {
        let hu = *hops.get(u)?;
        let step = adj[u]
            .iter()
            .copied()
            .filter(|&i| wide(i) && hops.get(links[i].other(u)) == Some(&(hu - 1)))
            .min_by(|&i, &j| {
                (links[i].other(u), &links[i].id).cmp(&(links[j].other(u), &links[j].id))
            })?;
        path.push(step);
        u = links[step].other(u);
    }
    Some(path)
}

/// Routes each demand on its widest path, then shares every link equally
/// among the demands that traverse it.
pub fn route_flows(
    links: &[MeshLink],
    demands: &[MeshDemand],
    policy: RoutingPolicy,
) -> Result<Vec<FlowResult>, XhaulError> {
    for d in demands {
        if !(d.offered_bps > 0.0) {
            return Err(XhaulError::Demand(format!("{} -> {}: load must be positive", d.source, d.sink)));
        }
        if d.source == d.sink {
            return Err(XhaulError::Demand(format!("{}: endpoints must differ", d.source)));
        }
    }
    let w: Vec<f64> = links.iter().map(|l| weight(l, policy)).collect();
    let paths: Vec<Option<Vec<usize>>> = demands
        .iter()
        .map(|d| {
            widest_path(links, &w, &d.source, &d.sink)
                .filter(|p| p.iter().all(|&i| links[i].usable()))
        })
        .collect();
    let mut users = vec![0usize; links.len()];
    for p in paths.iter().flatten() {
        for &i in p {
            users[i] += 1;
        }
    }
    Ok(demands
        .iter()
        .zip(paths)
        .enumerate()
        .map(|(k, (d, p))| match p {
            None => FlowResult {
                demand: k,
                path: None,
                nodes: Vec::new(),
                delivered_bps: 0.0,
            },
            Some(p) => {
                let share = p
                    .iter()
                    .map(|&i| links[i].state.throughput_bps / users[i] as f64)
                    .fold(f64::INFINITY, f64::min);
                let mut nodes = vec![d.source.clone()];
                for &i in &p {
                    let last = nodes.last().cloned().unwrap_or_default();
                    nodes.push(links[i].other(&last).to_string());
                }
                FlowResult {
                    demand: k,
                    path: Some(p.iter().map(|&i| links[i].id.clone()).collect()),
                    nodes,
                    delivered_bps: d.offered_bps.min(share),
                }
            }
        })
        .collect())
}
