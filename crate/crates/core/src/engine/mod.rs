//! The distributed coordinate descent iteration over `c` simulated nodes.
//!
//! Each node owns one block of coordinates and the matching columns of `A`, samples
//! `tau` of its coordinates per iteration, updates them in closed form and publishes
//! the resulting residual change. Two synchronization protocols are provided:
//!
//! * reduce-all (RA): the deltas of all nodes are summed and every replica receives the
//!   sum, so all replicas equal the true residual after each iteration;
//! * asynchronous streamlined ring (ASL): every node sends one cumulative delta to its
//!   ring successor per iteration, so replicas see remote updates with a delay that
//!   grows with ring distance.
//!
//! Lockstep execution runs the nodes one after another in node order and is bitwise
//! reproducible. Threaded execution runs one worker thread per node exchanging
//! messages over channels; it produces the same iterates.

mod node;
mod threaded;
mod trace;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub use node::{MessageCounters, NodeState, StepContext};
pub use trace::{
    empty_trace_csv, EvalRecord, RunTrace, StopReason, TRACE_HEADER, TRACE_HEADER_NO_GAP,
};

use crate::error::{Error, Result};
use crate::loss::{loss_value_of, Residual};
use crate::matrix::Partition;
use crate::problem::Problem;
use crate::sampling::SamplingPlan;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Protocol {
    ReduceAll,
    AsyncRing,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::ReduceAll => "ra",
            Protocol::AsyncRing => "asl",
        })
    }
}

impl FromStr for Protocol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ra" | "reduce-all" => Ok(Protocol::ReduceAll),
            "asl" | "ring" => Ok(Protocol::AsyncRing),
            o => Err(Error::InvalidArgument(format!("unknown protocol '{o}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Lockstep,
    Threaded,
}

impl FromStr for Execution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lockstep" => Ok(Execution::Lockstep),
            "threaded" => Ok(Execution::Threaded),
            o => Err(Error::InvalidArgument(format!(
                "unknown execution mode '{o}'"
            ))),
        }
    }
}

/// Which ring message a node folds into its residual at the end of iteration `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AslIndexing {
    /// Use `delta G_{k-1,l-}`, received one iteration earlier, and subtract
    /// `delta g_{k-c,l}`. Messages may stay in flight for a full iteration; a node's
    /// replica holds node `j`'s updates from iterations `t <= k - 1 - dist(j, l)`.
    #[default]
    Overlapped,
    /// Use `delta G_{k,l-}` just received and subtract `delta g_{k-c+1,l}`;
    /// updates from iterations `t <= k - dist(j, l)` are visible.
    Immediate,
}

impl AslIndexing {
    /// Extra iterations of delay beyond the ring distance.
    pub fn lag(self) -> u64 {
        match self {
            AslIndexing::Overlapped => 1,
            AslIndexing::Immediate => 0,
        }
    }
}

impl FromStr for AslIndexing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "overlapped" => Ok(AslIndexing::Overlapped),
            "immediate" => Ok(AslIndexing::Immediate),
            o => Err(Error::InvalidArgument(format!(
                "unknown ASL indexing '{o}'"
            ))),
        }
    }
}

/// Where the stepsize parameter came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaSource {
    /// `beta*` from sigma (power iteration) and the omega' bound on sigma'.
    Auto,
    /// `2 beta1*`.
    DoubleBeta1,
    User,
}

impl fmt::Display for BetaSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BetaSource::Auto => "auto",
            BetaSource::DoubleBeta1 => "double-beta1",
            BetaSource::User => "user",
        })
    }
}

/// Phase-accounting cost model behind the simulated clock of lockstep runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostModel {
    /// Seconds per floating-point operation on a node.
    pub flop_s: f64,
    /// Per-message latency.
    pub latency_s: f64,
    /// Seconds per transmitted vector entry.
    pub word_s: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            flop_s: 1e-9,
            latency_s: 1e-6,
            word_s: 8e-9,
        }
    }
}

impl CostModel {
    /// Compute time is the slowest node; RA serializes `2(c-1)` messages at the star root,
    /// ASL costs one neighbour message.
    fn iteration_seconds(&self, max_flops: u64, protocol: Protocol, c: usize, n: usize) -> f64 {
        let msg = self.latency_s + n as f64 * self.word_s;
        let comm = match protocol {
            Protocol::ReduceAll => 2.0 * (c as f64 - 1.0) * msg,
            Protocol::AsyncRing => msg,
        };
        max_flops as f64 * self.flop_s + comm
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<F> {
    pub protocol: Protocol,
    pub execution: Execution,
    pub tau: usize,
    pub beta: F,
    pub beta_source: BetaSource,
    pub max_iters: u64,
    pub eval_every: u64,
    pub seed: u64,
    pub asl_indexing: AslIndexing,
    /// Stop once `L(x_k) - L* <= target_gap` (needs a known optimum).
    pub target_gap: Option<F>,
    pub cost_model: CostModel,
}

impl<F: Scalar> RunConfig<F> {
    pub fn new(tau: usize, beta: F, beta_source: BetaSource) -> Self {
        Self {
            protocol: Protocol::ReduceAll,
            execution: Execution::Lockstep,
            tau,
            beta,
            beta_source,
            max_iters: 1000,
            eval_every: 1,
            seed: 0,
            asl_indexing: AslIndexing::default(),
            target_gap: None,
            cost_model: CostModel::default(),
        }
    }

    pub fn validate(&self, partition: &Partition) -> Result<()> {
        let s = partition.block_size();
        if self.tau == 0 || self.tau > s {
            return Err(Error::InvalidArgument(format!(
                "tau = {} must lie in [1, s = {s}]",
                self.tau
            )));
        }
        if !(self.beta >= F::one() && self.beta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "beta = {} must be finite and >= 1",
                self.beta
            )));
        }
        if self.eval_every == 0 {
            return Err(Error::InvalidArgument("eval_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// `L(x)` as seen by the harness: under RA from node 0's residual replica, under ASL
/// from a residual recomputed out of band (no replica is current).
pub fn evaluate_loss_global<F: Scalar>(
    problem: &Problem<F>,
    protocol: Protocol,
    x: &[F],
    replica: &[F],
) -> Result<F> {
    let f = match protocol {
        Protocol::ReduceAll => loss_value_of(replica, problem.loss()),
        Protocol::AsyncRing => loss_value_of(problem.residual(x)?.values(), problem.loss()),
    };
    Ok(f + problem.regularizer().value(x))
}

/// Simulated cluster advanced one iteration at a time in node order.
pub struct Cluster<'p, F> {
    problem: &'p Problem<F>,
    partition: &'p Partition,
    config: RunConfig<F>,
    nodes: Vec<NodeState<F>>,
    iteration: u64,
    sim_time: f64,
    total: Vec<F>,
}

impl<'p, F: Scalar> Cluster<'p, F> {
    pub fn new(
        problem: &'p Problem<F>,
        partition: &'p Partition,
        config: RunConfig<F>,
    ) -> Result<Self> {
        let x0 = vec![F::zero(); problem.dim()];
        Self::with_start(problem, partition, config, &x0)
    }

    pub fn with_start(
        problem: &'p Problem<F>,
        partition: &'p Partition,
        config: RunConfig<F>,
        x0: &[F],
    ) -> Result<Self> {
        if partition.dim() != problem.dim() {
            return Err(Error::DimensionMismatch {
                what: "partition size vs problem dimension",
                expected: problem.dim(),
                got: partition.dim(),
            });
        }
        config.validate(partition)?;
        let g0 = problem.residual(x0)?;
        let ring = config.protocol == Protocol::AsyncRing;
        let nodes = (0..partition.nodes())
            .map(|l| {
                NodeState::new(
                    l,
                    partition,
                    problem.matrix(),
                    problem.m_diag(),
                    x0,
                    g0.values(),
                    ring,
                )
            })
            .collect();
        Ok(Self {
            problem,
            partition,
            config,
            nodes,
            iteration: 0,
            sim_time: 0.0,
            total: vec![F::zero(); problem.n_rows()],
        })
    }

    pub fn context(&self) -> StepContext<'p, F> {
        StepContext {
            plan: SamplingPlan::new(self.partition, self.config.tau, self.config.seed)
                .expect("tau validated"),
            beta: self.config.beta,
            labels: self.problem.labels(),
            loss: self.problem.loss(),
            reg: self.problem.regularizer(),
        }
    }

    pub fn config(&self) -> &RunConfig<F> {
        &self.config
    }

    pub fn nodes(&self) -> &[NodeState<F>] {
        &self.nodes
    }

    /// Mutable access for harnesses that drive node phases individually.
    pub fn nodes_mut(&mut self) -> &mut [NodeState<F>] {
        &mut self.nodes
    }

    /// Number of completed iterations.
    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn simulated_seconds(&self) -> f64 {
        self.sim_time
    }

    pub fn messages_sent(&self) -> u64 {
        self.nodes.iter().map(|n| n.counters().sent).sum()
    }

    /// Assembles the distributed iterate.
    pub fn gather_x(&self) -> Vec<F> {
        gather(
            self.problem.dim(),
            self.nodes.iter().map(|n| (n.block(), n.x_local())),
        )
    }

    /// The residual of the current iterate, recomputed from scratch.
    pub fn true_residual(&self) -> Result<Residual<F>> {
        self.problem.residual(&self.gather_x())
    }

    pub fn evaluate_loss(&self) -> Result<F> {
        evaluate_loss_global(
            self.problem,
            self.config.protocol,
            &self.gather_x(),
            self.nodes[0].residual(),
        )
    }

    /// One full iteration: every node's local step, then synchronization.
    pub fn step(&mut self) -> Result<()> {
        let k = self.iteration;
        let ctx = self.context();
        let mut max_flops = 0;
        for node in &mut self.nodes {
            node.local_step(&ctx, k)?;
            max_flops = max_flops.max(node.take_flops());
        }
        self.synchronize(max_flops)
    }

    /// An iteration in which no node changes any coordinate; only messages move.
    pub fn step_idle(&mut self) -> Result<()> {
        for node in &mut self.nodes {
            node.idle_step();
        }
        self.synchronize(0)
    }

    fn synchronize(&mut self, max_flops: u64) -> Result<()> {
        let c = self.nodes.len();
        match self.config.protocol {
            Protocol::ReduceAll => {
                reduce_in_node_order(&self.nodes, &mut self.total);
                for node in &mut self.nodes {
                    node.ra_apply(&self.total, c);
                }
            }
            Protocol::AsyncRing => {
                let outgoing: Vec<Vec<F>> =
                    self.nodes.iter_mut().map(|n| n.asl_outgoing()).collect();
                for (l, msg) in outgoing.into_iter().enumerate() {
                    let succ = (l + 1) % c;
                    self.nodes[succ].asl_incoming(msg, self.config.asl_indexing)?;
                }
            }
        }
        self.sim_time += self.config.cost_model.iteration_seconds(
            max_flops,
            self.config.protocol,
            c,
            self.problem.n_rows(),
        );
        self.iteration += 1;
        Ok(())
    }
}

pub(crate) fn reduce_in_node_order<F: Scalar>(nodes: &[NodeState<F>], total: &mut [F]) {
    total.iter_mut().for_each(|v| *v = F::zero());
    for node in nodes {
        for (t, &d) in total.iter_mut().zip(node.last_delta()) {
            *t += d;
        }
    }
}

pub(crate) fn gather<'a, F: Scalar>(
    d: usize,
    parts: impl Iterator<Item = (&'a [usize], &'a [F])>,
) -> Vec<F> {
    let mut x = vec![F::zero(); d];
    for (block, xl) in parts {
        for (&i, &v) in block.iter().zip(xl) {
            x[i] = v;
        }
    }
    x
}

/// Evaluation schedule, stopping rules and the divergence guard shared by both drivers.
pub(crate) struct Monitor<F> {
    optimum: Option<F>,
    target_gap: Option<F>,
    initial: Option<F>,
    eval_every: u64,
    max_iters: u64,
    pub(crate) records: Vec<EvalRecord<F>>,
}

pub(crate) enum Flow {
    Continue,
    Stop(StopReason),
}

impl<F: Scalar> Monitor<F> {
    pub(crate) fn new(problem: &Problem<F>, config: &RunConfig<F>) -> Self {
        Self {
            optimum: problem.optimal_value(),
            target_gap: config.target_gap,
            initial: None,
            eval_every: config.eval_every,
            max_iters: config.max_iters,
            records: Vec::new(),
        }
    }

    /// Whether `L(x_k)` is recorded after completing iteration count `k`.
    pub(crate) fn is_eval_point(&self, k: u64) -> bool {
        k == 0 || k.is_multiple_of(self.eval_every) || k == self.max_iters
    }

    pub(crate) fn record(&mut self, k: u64, loss: F, messages: u64, elapsed: f64) -> Result<Flow> {
        let initial = *self.initial.get_or_insert(loss);
        let gap = self.optimum.map(|opt| loss - opt);
        self.records.push(EvalRecord {
            iteration: k,
            loss,
            gap,
            messages_sent: messages,
            elapsed_s: elapsed,
        });
        let diverged = !loss.is_finite() || (initial > F::zero() && loss > F::of(1e3) * initial);
        if diverged {
            return Err(Error::Divergence {
                iteration: k,
                loss: loss.as_f64(),
                initial: initial.as_f64(),
            });
        }
        if let (Some(g), Some(t)) = (gap, self.target_gap) {
            if g <= t {
                return Ok(Flow::Stop(StopReason::TargetGapReached));
            }
        }
        if k >= self.max_iters {
            return Ok(Flow::Stop(StopReason::IterationCap));
        }
        Ok(Flow::Continue)
    }
}

/// Runs the method from `x0 = 0` until the iteration cap or the gap target.
pub fn run<F: Scalar>(
    problem: &Problem<F>,
    partition: &Partition,
    config: &RunConfig<F>,
) -> Result<RunTrace<F>> {
    let x0 = vec![F::zero(); problem.dim()];
    run_from(problem, partition, config, &x0)
}

pub fn run_from<F: Scalar>(
    problem: &Problem<F>,
    partition: &Partition,
    config: &RunConfig<F>,
    x0: &[F],
) -> Result<RunTrace<F>> {
    match config.execution {
        Execution::Lockstep => run_lockstep(problem, partition, config, x0),
        Execution::Threaded => threaded::run_threaded(problem, partition, config, x0),
    }
}

fn run_lockstep<F: Scalar>(
    problem: &Problem<F>,
    partition: &Partition,
    config: &RunConfig<F>,
    x0: &[F],
) -> Result<RunTrace<F>> {
    let mut cluster = Cluster::with_start(problem, partition, config.clone(), x0)?;
    let mut monitor = Monitor::new(problem, config);
    let mut stop = match monitor.record(0, cluster.evaluate_loss()?, 0, 0.0)? {
        Flow::Stop(r) => Some(r),
        Flow::Continue => None,
    };
    while stop.is_none() {
        cluster.step()?;
        let k = cluster.iteration();
        if monitor.is_eval_point(k) {
            let flow = monitor.record(
                k,
                cluster.evaluate_loss()?,
                cluster.messages_sent(),
                cluster.simulated_seconds(),
            )?;
            if let Flow::Stop(r) = flow {
                stop = Some(r);
            }
        }
    }
    Ok(RunTrace {
        records: monitor.records,
        final_x: cluster.gather_x(),
        seed: config.seed,
        beta: config.beta,
        beta_source: config.beta_source,
        protocol: config.protocol,
        iterations: cluster.iteration(),
        stop: stop.expect("loop exits with a stop reason"),
    })
}

pub(crate) fn elapsed_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64()
}
