use hydra_core::engine::{run, BetaSource, Protocol, RunConfig};
use hydra_core::eso::{PowerIterOptions, SigmaMode, SigmaPrimeMode, StepsizeInfo};
use hydra_core::{LossKind, Partition, Problem32, SeparableReg32, SparseMatrix32};

fn instance() -> (SparseMatrix32, Vec<f32>) {
    let mut trip = Vec::new();
    for j in 0..16usize {
        trip.push((j, j, 1.0f32));
        trip.push(((j * 7 + 3) % 20, j, 0.5));
    }
    let a = SparseMatrix32::from_triplets(20, 16, trip).unwrap();
    let y: Vec<f32> = (0..20).map(|j| ((j % 5) as f32 - 2.0) * 0.5).collect();
    (a, y)
}

#[test]
fn single_precision_runs_decrease_the_objective() {
    let (a, y) = instance();
    let p = Partition::contiguous(16, 4).unwrap();
    let info = StepsizeInfo::<f32>::compute(
        &a,
        &p,
        2,
        SigmaMode::PowerIteration(PowerIterOptions::default()),
        SigmaPrimeMode::OmegaPrimeBound,
    )
    .unwrap();
    let problem = Problem32::new(
        a,
        y,
        LossKind::SquareLoss,
        SeparableReg32::l1(0.1, 16).unwrap(),
    )
    .unwrap();
    for protocol in [Protocol::ReduceAll, Protocol::AsyncRing] {
        let mut cfg = RunConfig::<f32>::new(2, info.beta, BetaSource::Auto);
        cfg.protocol = protocol;
        cfg.max_iters = 200;
        cfg.eval_every = 20;
        let trace = run(&problem, &p, &cfg).unwrap();
        let first = trace.records[0].loss;
        let last = trace.last().loss;
        assert!(
            last.is_finite() && last < 0.5 * first,
            "{protocol}: {first} -> {last}"
        );
    }
}
