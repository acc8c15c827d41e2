use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::loss::{accumulate_delta, partial_derivative_col, LossKind};
use crate::matrix::{Partition, SparseMatrix};
use crate::regularizer::SeparableReg;
use crate::sampling::SamplingPlan;
use crate::scalar::Scalar;

use super::AslIndexing;

/// Read-only data every node needs for its local step.
#[derive(Debug, Clone, Copy)]
pub struct StepContext<'a, F> {
    pub plan: SamplingPlan<'a>,
    pub beta: F,
    pub labels: &'a [F],
    pub loss: LossKind,
    pub reg: &'a SeparableReg<F>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MessageCounters {
    pub sent: u64,
    pub received: u64,
    pub reduce_participations: u64,
}

/// State owned by one simulated node: its coordinates, their columns of `A`,
/// a replica of the residual and the protocol buffers.
#[derive(Debug, Clone)]
pub struct NodeState<F> {
    id: usize,
    block: Vec<usize>,
    x: Vec<F>,
    cols: SparseMatrix<F>,
    m_diag: Vec<F>,
    g: Vec<F>,
    /// `delta g_{k,l}` of the iteration in progress.
    delta: Vec<F>,
    /// `delta g_{t,l}` for `t` in `[k-c, k]`, oldest first (ASL only).
    history: VecDeque<Vec<F>>,
    /// Last `delta G` received from the ring predecessor.
    inbox: Vec<F>,
    updates: Vec<(usize, F)>,
    counters: MessageCounters,
    flops: u64,
}

impl<F: Scalar> NodeState<F> {
    pub(crate) fn new(
        id: usize,
        partition: &Partition,
        a: &SparseMatrix<F>,
        m_diag: &[F],
        x0: &[F],
        g0: &[F],
        ring: bool,
    ) -> Self {
        let block = partition.block(id).to_vec();
        let n = a.n_rows();
        let c = partition.nodes();
        let history = if ring {
            (0..=c).map(|_| vec![F::zero(); n]).collect()
        } else {
            VecDeque::new()
        };
        Self {
            id,
            x: block.iter().map(|&i| x0[i]).collect(),
            cols: a.select_columns(&block),
            m_diag: block.iter().map(|&i| m_diag[i]).collect(),
            block,
            g: g0.to_vec(),
            delta: vec![F::zero(); n],
            history,
            inbox: if ring { vec![F::zero(); n] } else { Vec::new() },
            updates: Vec::new(),
            counters: MessageCounters::default(),
            flops: 0,
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn block(&self) -> &[usize] {
        &self.block
    }

    /// Owned coordinates of the iterate, in block order.
    pub fn x_local(&self) -> &[F] {
        &self.x
    }

    /// This node's replica of the residual.
    pub fn residual(&self) -> &[F] {
        &self.g
    }

    /// `delta g_{k,l}` from the most recent local step.
    pub fn last_delta(&self) -> &[F] {
        &self.delta
    }

    /// `(i, h_i)` applied in the most recent local step.
    pub fn last_updates(&self) -> &[(usize, F)] {
        &self.updates
    }

    pub fn counters(&self) -> MessageCounters {
        self.counters
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    pub(crate) fn take_flops(&mut self) -> u64 {
        std::mem::take(&mut self.flops)
    }

    /// Sample, compute the closed-form updates, apply them to the owned coordinates and
    /// form `delta g_{k,l}`. The residual replica is not touched.
    pub fn local_step(&mut self, ctx: &StepContext<'_, F>, k: u64) -> Result<()> {
        let picks = ctx.plan.draw_local(self.id, k);
        self.updates.clear();
        for &p in &picks {
            let i = self.block[p];
            let col = self.cols.col(p);
            let fprime = partial_derivative_col(col, &self.g, ctx.labels, ctx.loss);
            let h = ctx
                .reg
                .prox_step(i, fprime, self.m_diag[p], ctx.beta, self.x[p])?;
            self.updates.push((p, h));
            self.flops += 4 * col.nnz() as u64;
        }
        self.delta.iter_mut().for_each(|v| *v = F::zero());
        for &(p, h) in &self.updates {
            self.x[p] += h;
            if h != F::zero() {
                accumulate_delta(self.cols.col(p), h, ctx.labels, ctx.loss, &mut self.delta);
            }
        }
        // report global coordinates
        for u in &mut self.updates {
            u.0 = self.block[u.0];
        }
        if let Some(j) = self.delta.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "residual delta",
                index: j,
            });
        }
        Ok(())
    }

    /// An update-free step: `delta g_{k,l} = 0`.
    pub(crate) fn idle_step(&mut self) {
        self.updates.clear();
        self.delta.iter_mut().for_each(|v| *v = F::zero());
    }

    /// Reduce-all: add the cluster-wide sum of deltas. Counts messages for a star
    /// reduction rooted at node 0 (gather then broadcast).
    pub(crate) fn ra_apply(&mut self, total: &[F], c: usize) {
        for (g, &t) in self.g.iter_mut().zip(total) {
            *g += t;
        }
        let peers = (c - 1) as u64;
        if self.id == 0 {
            self.counters.sent += peers;
            self.counters.received += peers;
        } else {
            self.counters.sent += 1;
            self.counters.received += 1;
        }
        self.counters.reduce_participations += 1;
    }

    /// ASL, first half: rotate the delta history and build
    /// `delta G_{k,l} = delta G_{k-1,l-} - delta g_{k-c,l} + delta g_{k,l}`.
    pub(crate) fn asl_outgoing(&mut self) -> Vec<F> {
        let mut recycled = self.history.pop_front().expect("ring history is non-empty");
        recycled.copy_from_slice(&self.delta);
        self.history.push_back(recycled);
        let oldest = &self.history[0];
        let out = self
            .inbox
            .iter()
            .zip(oldest)
            .zip(&self.delta)
            .map(|((&prev, &old), &cur)| prev - old + cur)
            .collect();
        self.counters.sent += 1;
        out
    }

    /// ASL, second half: fold in `delta G_{k,l-}` received from the predecessor.
    pub(crate) fn asl_incoming(&mut self, msg: Vec<F>, indexing: AslIndexing) -> Result<()> {
        if msg.len() != self.g.len() {
            return Err(Error::Protocol(format!(
                "node {} received a message of length {}, expected {}",
                self.id,
                msg.len(),
                self.g.len()
            )));
        }
        match indexing {
            AslIndexing::Immediate => {
                // g += delta g_{k,l} + delta G_{k,l-} - delta g_{k-c+1,l}
                let own = &self.history[1];
                for r in 0..self.g.len() {
                    self.g[r] += self.delta[r] + msg[r] - own[r];
                }
            }
            AslIndexing::Overlapped => {
                // g += delta g_{k,l} + delta G_{k-1,l-} - delta g_{k-c,l}
                let own = &self.history[0];
                for r in 0..self.g.len() {
                    self.g[r] += self.delta[r] + self.inbox[r] - own[r];
                }
            }
        }
        self.inbox = msg;
        self.counters.received += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::reduce_in_node_order;

    fn pair(ring: bool) -> Vec<NodeState<f64>> {
        let a = SparseMatrix::identity(2);
        let p = Partition::contiguous(2, 2).unwrap();
        (0..2)
            .map(|l| NodeState::new(l, &p, &a, &[1.0, 1.0], &[0.0, 0.0], &[0.0, 0.0], ring))
            .collect()
    }

    #[test]
    fn reduce_all_adds_every_delta() {
        let mut nodes = pair(false);
        nodes[0].delta = vec![1.0, 0.0];
        nodes[1].delta = vec![0.0, 1.0];
        let mut total = vec![0.0; 2];
        reduce_in_node_order(&nodes, &mut total);
        for node in &mut nodes {
            node.ra_apply(&total, 2);
            assert_eq!(node.residual(), &[1.0, 1.0]);
        }
        assert_eq!(nodes[0].counters().sent, 1);
        assert_eq!(nodes[1].counters().received, 1);
    }

    #[test]
    fn first_ring_message_is_the_own_delta() {
        let mut nodes = pair(true);
        assert_eq!(nodes[0].history_len(), 3);
        nodes[0].delta = vec![0.5, -2.0];
        assert_eq!(nodes[0].asl_outgoing(), vec![0.5, -2.0]);
    }

    #[test]
    fn short_ring_message_is_a_protocol_error() {
        let mut nodes = pair(true);
        nodes[1].asl_outgoing();
        let err = nodes[1]
            .asl_incoming(vec![0.0], AslIndexing::Overlapped)
            .unwrap_err();
        assert!(matches!(err, Error::Protocol(_)));
    }
}
