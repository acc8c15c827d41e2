//! One worker thread per node. Reduce-all goes through a coordinator that sums deltas
//! in node order; ring messages travel directly between neighbour threads. The
//! coordinator also collects the iterate at evaluation points and decides when to stop.

use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::Arc;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::matrix::Partition;
use crate::problem::Problem;
use crate::sampling::SamplingPlan;
use crate::scalar::Scalar;

use super::{
    elapsed_since, evaluate_loss_global, gather, Flow, Monitor, NodeState, Protocol, RunConfig,
    RunTrace, StepContext,
};

enum Up<F> {
    Delta {
        node: usize,
        delta: Vec<F>,
    },
    Report {
        node: usize,
        x: Vec<F>,
        g: Option<Vec<F>>,
        sent: u64,
    },
    Failed(Error),
}

enum Down<F> {
    Total(Arc<Vec<F>>),
    Continue,
    Stop,
}

struct Worker<'a, F> {
    state: NodeState<F>,
    ctx: StepContext<'a, F>,
    protocol: Protocol,
    config: &'a RunConfig<F>,
    up: Sender<Up<F>>,
    down: Receiver<Down<F>>,
    ring_out: Option<Sender<Vec<F>>>,
    ring_in: Option<Receiver<Vec<F>>>,
}

impl<F: Scalar> Worker<'_, F> {
    fn run(mut self, is_eval_point: impl Fn(u64) -> bool) {
        if let Err(e) = self.iterate(is_eval_point) {
            // a disconnect means the coordinator already gave up
            if !matches!(e, Error::Protocol(_)) {
                let _ = self.up.send(Up::Failed(e));
            }
        }
    }

    fn iterate(&mut self, is_eval_point: impl Fn(u64) -> bool) -> Result<()> {
        let nodes = self.ctx.plan.partition().nodes();
        let mut k = 0u64;
        loop {
            self.state.local_step(&self.ctx, k)?;
            self.state.take_flops();
            match self.protocol {
                Protocol::ReduceAll => {
                    self.send(Up::Delta {
                        node: self.state.id(),
                        delta: self.state.last_delta().to_vec(),
                    })?;
                    match self.recv()? {
                        Down::Total(total) => self.state.ra_apply(&total, nodes),
                        _ => return Err(disconnected("expected a reduced total")),
                    }
                }
                Protocol::AsyncRing => {
                    let msg = self.state.asl_outgoing();
                    self.ring_out
                        .as_ref()
                        .expect("ring sender")
                        .send(msg)
                        .map_err(|_| disconnected("ring successor"))?;
                    let incoming = self
                        .ring_in
                        .as_ref()
                        .expect("ring receiver")
                        .recv()
                        .map_err(|_| disconnected("ring predecessor"))?;
                    self.state
                        .asl_incoming(incoming, self.config.asl_indexing)?;
                }
            }
            k += 1;
            if is_eval_point(k) {
                let g = (self.state.id() == 0).then(|| self.state.residual().to_vec());
                self.send(Up::Report {
                    node: self.state.id(),
                    x: self.state.x_local().to_vec(),
                    g,
                    sent: self.state.counters().sent,
                })?;
                match self.recv()? {
                    Down::Continue => {}
                    Down::Stop => return Ok(()),
                    Down::Total(_) => return Err(disconnected("unexpected total")),
                }
            }
        }
    }

    fn send(&self, msg: Up<F>) -> Result<()> {
        self.up.send(msg).map_err(|_| disconnected("coordinator"))
    }

    fn recv(&self) -> Result<Down<F>> {
        self.down.recv().map_err(|_| disconnected("coordinator"))
    }
}

fn disconnected(what: &str) -> Error {
    Error::Protocol(format!("channel closed: {what}"))
}

pub(crate) fn run_threaded<F: Scalar>(
    problem: &Problem<F>,
    partition: &Partition,
    config: &RunConfig<F>,
    x0: &[F],
) -> Result<RunTrace<F>> {
    if partition.dim() != problem.dim() {
        return Err(Error::DimensionMismatch {
            what: "partition size vs problem dimension",
            expected: problem.dim(),
            got: partition.dim(),
        });
    }
    config.validate(partition)?;
    let c = partition.nodes();
    let g0 = problem.residual(x0)?;
    let ring = config.protocol == Protocol::AsyncRing;
    let ctx = StepContext {
        plan: SamplingPlan::new(partition, config.tau, config.seed)?,
        beta: config.beta,
        labels: problem.labels(),
        loss: problem.loss(),
        reg: problem.regularizer(),
    };

    let start = Instant::now();
    let mut monitor = Monitor::new(problem, config);
    let initial = evaluate_loss_global(problem, config.protocol, x0, g0.values())?;
    if let Flow::Stop(stop) = monitor.record(0, initial, 0, 0.0)? {
        return Ok(RunTrace {
            records: monitor.records,
            final_x: x0.to_vec(),
            seed: config.seed,
            beta: config.beta,
            beta_source: config.beta_source,
            protocol: config.protocol,
            iterations: 0,
            stop,
        });
    }

    let (up_tx, up_rx) = channel::<Up<F>>();
    let mut down_txs = Vec::with_capacity(c);
    let mut down_rxs = Vec::with_capacity(c);
    for _ in 0..c {
        let (tx, rx) = channel::<Down<F>>();
        down_txs.push(tx);
        down_rxs.push(rx);
    }
    // ring channel l carries messages from node l to node l+1
    let mut ring_tx: Vec<Option<Sender<Vec<F>>>> = Vec::with_capacity(c);
    let mut ring_rx: Vec<Option<Receiver<Vec<F>>>> = (0..c).map(|_| None).collect();
    for l in 0..c {
        if ring {
            let (tx, rx) = channel();
            ring_tx.push(Some(tx));
            ring_rx[(l + 1) % c] = Some(rx);
        } else {
            ring_tx.push(None);
        }
    }

    let max_iters = config.max_iters;
    let eval_every = config.eval_every;
    let is_eval_point = move |k: u64| k.is_multiple_of(eval_every) || k == max_iters;

    std::thread::scope(|scope| {
        for (l, (down, (out, inp))) in down_rxs
            .into_iter()
            .zip(ring_tx.into_iter().zip(ring_rx))
            .enumerate()
        {
            let worker = Worker {
                state: NodeState::new(
                    l,
                    partition,
                    problem.matrix(),
                    problem.m_diag(),
                    x0,
                    g0.values(),
                    ring,
                ),
                ctx,
                protocol: config.protocol,
                config,
                up: up_tx.clone(),
                down,
                ring_out: out,
                ring_in: inp,
            };
            scope.spawn(move || worker.run(is_eval_point));
        }
        drop(up_tx);
        // dropping `down_txs` on return releases every blocked worker
        coordinate(
            problem,
            partition,
            config,
            &mut monitor,
            up_rx,
            down_txs,
            start,
            is_eval_point,
        )
    })
    .map(|(final_x, iterations, stop)| RunTrace {
        records: monitor.records,
        final_x,
        seed: config.seed,
        beta: config.beta,
        beta_source: config.beta_source,
        protocol: config.protocol,
        iterations,
        stop,
    })
}

#[allow(clippy::too_many_arguments)]
fn coordinate<F: Scalar>(
    problem: &Problem<F>,
    partition: &Partition,
    config: &RunConfig<F>,
    monitor: &mut Monitor<F>,
    up: Receiver<Up<F>>,
    down: Vec<Sender<Down<F>>>,
    start: Instant,
    is_eval_point: impl Fn(u64) -> bool,
) -> Result<(Vec<F>, u64, super::StopReason)> {
    let c = partition.nodes();
    let n = problem.n_rows();
    let recv = || up.recv().map_err(|_| disconnected("all workers exited"));
    let broadcast = |make: &dyn Fn() -> Down<F>| -> Result<()> {
        for tx in &down {
            tx.send(make()).map_err(|_| disconnected("worker"))?;
        }
        Ok(())
    };

    let mut k = 0u64;
    loop {
        if config.protocol == Protocol::ReduceAll {
            let mut deltas: Vec<Option<Vec<F>>> = (0..c).map(|_| None).collect();
            for _ in 0..c {
                match recv()? {
                    Up::Delta { node, delta } => deltas[node] = Some(delta),
                    Up::Failed(e) => return Err(e),
                    Up::Report { .. } => {
                        return Err(Error::Protocol("report before reduction".into()))
                    }
                }
            }
            let mut total = vec![F::zero(); n];
            for d in deltas.iter().flatten() {
                for (t, &v) in total.iter_mut().zip(d) {
                    *t += v;
                }
            }
            let total = Arc::new(total);
            broadcast(&|| Down::Total(Arc::clone(&total)))?;
        }
        k += 1;
        if !is_eval_point(k) {
            continue;
        }
        let mut xs: Vec<Option<Vec<F>>> = (0..c).map(|_| None).collect();
        let mut g_root = None;
        let mut sent = 0;
        for _ in 0..c {
            match recv()? {
                Up::Report {
                    node,
                    x,
                    g,
                    sent: s,
                } => {
                    xs[node] = Some(x);
                    if g.is_some() {
                        g_root = g;
                    }
                    sent += s;
                }
                Up::Failed(e) => return Err(e),
                Up::Delta { .. } => return Err(Error::Protocol("delta during evaluation".into())),
            }
        }
        let x = gather(
            problem.dim(),
            xs.iter()
                .enumerate()
                .map(|(l, x)| (partition.block(l), x.as_deref().unwrap_or(&[]))),
        );
        let g = g_root.ok_or_else(|| Error::Protocol("missing residual from node 0".into()))?;
        let loss = evaluate_loss_global(problem, config.protocol, &x, &g)?;
        match monitor.record(k, loss, sent, elapsed_since(start))? {
            Flow::Continue => broadcast(&|| Down::Continue)?,
            Flow::Stop(reason) => {
                broadcast(&|| Down::Stop)?;
                return Ok((x, k, reason));
            }
        }
    }
}
