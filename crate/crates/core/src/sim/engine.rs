use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use super::model::{infer_time, quality_oracle};
use super::trace::{quality_by_category, summarize, TraceRecord};
use crate::domain::{InferenceRequest, NodePair, RequestCategory, Topology};
use crate::error::{Error, Result};
use crate::metrics::{request_cost, response_time_i, ObjectiveVector, RouterSummary, RtBreakdown};
use crate::policy::{DecisionReason, Router, SystemState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Requests kept in flight at once in closed-loop mode.
    pub concurrency: u32,
    pub seed: u64,
    /// Release requests at their own arrival times instead of a closed loop.
    #[serde(default)]
    pub open_loop: bool,
}

impl SimConfig {
    pub fn closed(concurrency: u32, seed: u64) -> Self {
        SimConfig {
            concurrency,
            seed,
            open_loop: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.concurrency == 0 {
            return Err(Error::validation("concurrency", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Arrival,
    UplinkDone,
    InferenceStart,
    InferenceDone,
    DownlinkDone,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    /// Insertion counter; breaks time ties so the order is total.
    pub sequence: u64,
    pub kind: EventKind,
    pub request: usize,
    pub node: usize,
}

impl Eq for Event {}

impl Ord for Event {
    // reversed so the max-heap pops the earliest event
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.sequence.cmp(&self.sequence))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Default)]
struct NodeLoad {
    in_transit: u32,
    waiting: VecDeque<usize>,
    in_service: u32,
}

#[derive(Debug, Clone)]
struct Flight {
    pair: NodePair,
    reason: DecisionReason,
    redirected: bool,
    admitted_at: f64,
    uplink_done_at: f64,
    started_at: f64,
    rt: RtBreakdown,
}

/// Result of one simulated run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub trace: Vec<TraceRecord>,
    pub summary: RouterSummary,
    pub objectives: ObjectiveVector,
    pub quality_by_category: BTreeMap<RequestCategory, f64>,
    /// Requests moved to the cloud because their node was full.
    pub overflow_count: u64,
    /// Time the last response arrived.
    pub makespan: f64,
}

/// Discrete-event model of the cloud-edge system for one router.
///
/// Each request is routed on arrival against a snapshot of the node queues,
/// uploaded, served FIFO by one of the node's parallel slots, and
/// downloaded. Transfers never contend for bandwidth.
pub struct Simulator<'a> {
    config: SimConfig,
    topology: &'a Topology,
    requests: &'a [InferenceRequest],
    router: &'a mut dyn Router,
    fallback: Option<NodePair>,
    events: BinaryHeap<Event>,
    sequence: u64,
    now: f64,
    loads: Vec<NodeLoad>,
    flights: Vec<Option<Flight>>,
    records: Vec<Option<TraceRecord>>,
    next_admit: usize,
    overflow_count: u64,
}

impl<'a> Simulator<'a> {
    pub fn new(
        config: SimConfig,
        topology: &'a Topology,
        requests: &'a [InferenceRequest],
        router: &'a mut dyn Router,
    ) -> Result<Self> {
        config.validate()?;
        if requests.is_empty() {
            return Err(Error::Domain("workload has no requests".into()));
        }
        let n = requests.len();
        let mut sim = Simulator {
            fallback: topology.high_capacity_pair().ok(),
            loads: vec![NodeLoad::default(); topology.nodes().len()],
            flights: vec![None; n],
            records: vec![None; n],
            events: BinaryHeap::new(),
            sequence: 0,
            now: 0.0,
            next_admit: 0,
            overflow_count: 0,
            config,
            topology,
            requests,
            router,
        };
        if sim.config.open_loop {
            for (i, r) in requests.iter().enumerate() {
                sim.push(r.arrival_time, EventKind::Arrival, i, 0);
            }
            sim.next_admit = n;
        } else {
            let window = (sim.config.concurrency as usize).min(n);
            for i in 0..window {
                sim.push(0.0, EventKind::Arrival, i, 0);
            }
            sim.next_admit = window;
        }
        Ok(sim)
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn snapshot(&self) -> SystemState {
        SystemState {
            queue_lengths: self.loads.iter().map(|l| l.waiting.len() as u32).collect(),
            in_flight: self.loads.iter().map(|l| l.in_service).collect(),
        }
    }

    pub fn is_done(&self) -> bool {
        self.events.is_empty()
    }

    /// Processes the next event; `false` once nothing is left.
    pub fn step(&mut self) -> Result<bool> {
        let Some(ev) = self.events.pop() else {
            return Ok(false);
        };
        self.now = ev.time;
        match ev.kind {
            EventKind::Arrival => self.on_arrival(ev.request)?,
            EventKind::UplinkDone => self.on_uplink_done(ev.request, ev.node),
            EventKind::InferenceStart => self.on_start(ev.request, ev.node),
            EventKind::InferenceDone => self.on_inference_done(ev.request, ev.node),
            EventKind::DownlinkDone => self.on_downlink_done(ev.request)?,
        }
        Ok(true)
    }

    /// Processes every event scheduled at or before `time`.
    pub fn run_until(&mut self, time: f64) -> Result<()> {
        while self.events.peek().is_some_and(|e| e.time <= time) {
            self.step()?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<SimOutcome> {
        while self.step()? {}
        let trace: Vec<TraceRecord> = self
            .records
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                r.ok_or_else(|| Error::Evaluation(format!("request {i} never completed")))
            })
            .collect::<Result<_>>()?;
        let (summary, objectives) = summarize(self.router.name(), &trace)?;
        let makespan = trace.iter().map(|r| r.finished_at).fold(0.0, f64::max);
        Ok(SimOutcome {
            quality_by_category: quality_by_category(&trace),
            trace,
            summary,
            objectives,
            overflow_count: self.overflow_count,
            makespan,
        })
    }

    fn push(&mut self, time: f64, kind: EventKind, request: usize, node: usize) {
        self.events.push(Event {
            time,
            sequence: self.sequence,
            kind,
            request,
            node,
        });
        self.sequence += 1;
    }

    fn on_arrival(&mut self, i: usize) -> Result<()> {
        let request = &self.requests[i];
        let state = self.snapshot();
        let decision = self
            .router
            .route(request, &state, self.topology)
            .map_err(|e| Error::Unroutable {
                request_id: request.id,
                message: e.to_string(),
            })?;
        let mut pair = decision.pair;
        if !self.topology.contains(pair) {
            return Err(Error::Unroutable {
                request_id: request.id,
                message: format!("router `{}` chose an undeployed pair {pair:?}", self.router.name()),
            });
        }

        let mut redirected = false;
        let node = self.topology.node(pair.node);
        let load = &self.loads[pair.node];
        let occupied = load.in_transit + load.waiting.len() as u32 + load.in_service;
        if occupied >= node.max_concurrent + node.queue_limit {
            let fallback = self.fallback.ok_or_else(|| Error::Unroutable {
                request_id: request.id,
                message: format!("node `{}` is full and no cloud fallback exists", node.id),
            })?;
            // the fallback absorbs overflow beyond its own limit
            if fallback.node != pair.node {
                pair = fallback;
                redirected = true;
                self.overflow_count += 1;
            }
        }

        let node = self.topology.node(pair.node);
        let t_infer = infer_time(request, self.topology.model(pair.model), node);
        let rt = response_time_i(request, node, t_infer, 0.0)?;
        self.flights[i] = Some(Flight {
            pair,
            reason: decision.reason,
            redirected,
            admitted_at: self.now,
            uplink_done_at: f64::NAN,
            started_at: f64::NAN,
            rt,
        });
        self.loads[pair.node].in_transit += 1;
        self.push(self.now + rt.uplink, EventKind::UplinkDone, i, pair.node);
        Ok(())
    }

    fn on_uplink_done(&mut self, i: usize, node: usize) {
        self.flights[i].as_mut().expect("admitted").uplink_done_at = self.now;
        let slots = self.topology.node(node).max_concurrent;
        let load = &mut self.loads[node];
        load.in_transit -= 1;
        if load.in_service < slots && load.waiting.is_empty() {
            load.in_service += 1;
            self.push(self.now, EventKind::InferenceStart, i, node);
        } else {
            load.waiting.push_back(i);
        }
    }

    fn on_start(&mut self, i: usize, node: usize) {
        let f = self.flights[i].as_mut().expect("admitted");
        f.started_at = self.now;
        let t_infer = f.rt.infer;
        self.push(self.now + t_infer, EventKind::InferenceDone, i, node);
    }

    fn on_inference_done(&mut self, i: usize, node: usize) {
        let downlink = self.flights[i].as_ref().expect("admitted").rt.downlink;
        self.push(self.now + downlink, EventKind::DownlinkDone, i, node);
        let load = &mut self.loads[node];
        match load.waiting.pop_front() {
            // the slot passes straight to the next waiter
            Some(next) => self.push(self.now, EventKind::InferenceStart, next, node),
            None => load.in_service -= 1,
        }
    }

    fn on_downlink_done(&mut self, i: usize) -> Result<()> {
        let f = self.flights[i].take().expect("admitted");
        let request = &self.requests[i];
        let model = self.topology.model(f.pair.model);
        let node = self.topology.node(f.pair.node);
        let queue_wait = f.started_at - f.uplink_done_at;
        let rt = response_time_i(request, node, f.rt.infer, queue_wait)?;
        let tokens = request.total_tokens();
        self.records[i] = Some(TraceRecord {
            dataset: request.category,
            global_index: request.id,
            assigned_model: model.id.clone(),
            node_id: node.id.clone(),
            quality: quality_oracle(request, model, self.config.seed),
            response_time: rt.total,
            cost: request_cost(tokens, model.price_per_million_tokens),
            total_tokens: tokens,
            price_per_million_tokens: model.price_per_million_tokens,
            inference_time: rt.infer,
            uplink: rt.uplink,
            queue_wait: rt.queue_wait,
            downlink: rt.downlink,
            reason: f.reason,
            redirected: f.redirected,
            admitted_at: f.admitted_at,
            finished_at: self.now,
        });
        if self.next_admit < self.requests.len() {
            self.push(self.now, EventKind::Arrival, self.next_admit, 0);
            self.next_admit += 1;
        }
        Ok(())
    }
}

/// Runs `requests` through `router` to completion.
pub fn run_simulation(
    config: &SimConfig,
    topology: &Topology,
    requests: &[InferenceRequest],
    router: &mut dyn Router,
) -> Result<SimOutcome> {
    Simulator::new(config.clone(), topology, requests, router)?.finish()
}
