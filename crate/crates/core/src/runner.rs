//! Practice-mode training and experiment orchestration.
//!
//! A practice run follows the deterministic schedule: an initial
//! full-network phase, then cycles alternating a full phase with a
//! selected-block phase. Adam is restarted at every phase change; its
//! learning rate keeps decaying by global epoch. Block selection evaluates
//! the full-pool gradient once per sub phase. While one block trains, the
//! other subnetworks' evaluations on the fixed pool are cached and reused.

use crate::composite::CompositeNetwork;
use crate::config::{ExperimentConfig, Mode, SamplingConfig};
use crate::cost::{self, ActiveSet, CostLedger};
use crate::driver::{
    run_theory, select_block, EpochRecord, QuadraticBlockObjective, RunTrace, Schedule,
    SelectionRule, TheoryParams,
};
use crate::error::Result;
use crate::galerkin::QuadraticProblem;
use crate::network::{BatchLoss, ParamBlock, PointEval};
use crate::numerics::{DenseMatrix, Seed};
use crate::optimizer::{adam_step, AdamConfig, AdamState};
use crate::pinn::{draw_batch, sample_pool, PinnBatch, PoissonProblem, SamplePool};
use std::ops::Range;
use std::path::Path;

/// Everything needed to run one practice-mode experiment.
pub struct PracticeRun {
    pub problem: PoissonProblem,
    pub cn: CompositeNetwork,
    pub schedule: Schedule,
    pub selection: SelectionRule,
    pub adam: AdamConfig,
    pub sampling: SamplingConfig,
}

/// A finished run: the trace plus an optional failure message when the run
/// aborted (non-finite loss); the trace then covers the epochs up to the
/// failure.
pub struct RunOutcome {
    pub trace: RunTrace,
    pub failure: Option<String>,
}

enum Phase {
    Full { epochs: usize },
    Sub { epochs: usize },
}

fn phases(schedule: &Schedule) -> Vec<Phase> {
    let mut out = Vec::new();
    if schedule.initial_full_epochs > 0 {
        out.push(Phase::Full { epochs: schedule.initial_full_epochs });
    }
    for _ in 0..schedule.cycles {
        if schedule.full_epochs_per_cycle > 0 {
            out.push(Phase::Full { epochs: schedule.full_epochs_per_cycle });
        }
        if schedule.sub_epochs_per_cycle > 0 {
            out.push(Phase::Sub { epochs: schedule.sub_epochs_per_cycle });
        }
    }
    out
}

/// Per-subnet pool evaluations, filled lazily and dropped whenever the
/// owning block is written.
struct EvalCache {
    pool_evals: Vec<Option<Vec<PointEval>>>,
    test_values: Vec<Option<Vec<f64>>>,
}

impl EvalCache {
    fn new(n_blocks: usize) -> Self {
        Self { pool_evals: vec![None; n_blocks], test_values: vec![None; n_blocks] }
    }

    fn invalidate_all(&mut self) {
        self.pool_evals.iter_mut().for_each(|e| *e = None);
        self.test_values.iter_mut().for_each(|e| *e = None);
    }

    fn ensure_pool(
        &mut self,
        cn: &CompositeNetwork,
        global: &[f64],
        i: usize,
        points: &[Vec<f64>],
    ) -> Result<()> {
        if self.pool_evals[i].is_none() {
            let params = ParamBlock(global[cn.block_range(i)].to_vec());
            let evals: Result<Vec<PointEval>> =
                points.iter().map(|z| cn.subnets()[i].eval(&params, z)).collect();
            self.pool_evals[i] = Some(evals?);
        }
        Ok(())
    }

    fn ensure_test(
        &mut self,
        cn: &CompositeNetwork,
        global: &[f64],
        i: usize,
        points: &[[f64; 2]],
    ) -> Result<()> {
        if self.test_values[i].is_none() {
            let params = ParamBlock(global[cn.block_range(i)].to_vec());
            let mut scratch = crate::network::ForwardScratch::default();
            let values: Result<Vec<f64>> = points
                .iter()
                .map(|z| cn.subnets()[i].forward_with(&params, z, &mut scratch))
                .collect();
            self.test_values[i] = Some(values?);
        }
        Ok(())
    }
}

/// Pool points in cache order: interior, then external, then internal.
fn pool_points(pool: &SamplePool) -> Vec<Vec<f64>> {
    let mut points =
        Vec::with_capacity(pool.interior.len() + pool.boundary_e.len() + pool.boundary_i.len());
    points.extend(pool.interior.iter().map(|z| z.to_vec()));
    points.extend(pool.boundary_e.iter().map(|bp| bp.z.to_vec()));
    points.extend(pool.boundary_i.iter().map(|bp| bp.z.to_vec()));
    points
}

/// Full-pool block gradient norms, evaluated in two passes so no tapes are
/// held for more than one point at a time.
pub fn pool_block_norms(
    problem: &PoissonProblem,
    cn: &CompositeNetwork,
    global: &[f64],
    pool: &SamplePool,
) -> Result<Vec<f64>> {
    let batch = PinnBatch::new(problem, &pool.interior, &pool.boundary_e, &pool.boundary_i)?;
    let points = batch.points();
    // Pass 1: per-point combined evaluations.
    let mut evals = Vec::with_capacity(points.len());
    for z in points {
        evals.push(cn.eval(global, z)?);
    }
    let (_, adjoints) = batch.value_and_adjoints(&evals);
    // Pass 2: per-block accumulation, point by point.
    let mut norms = Vec::with_capacity(cn.n_blocks());
    for (i, net) in cn.subnets().iter().enumerate() {
        let params = ParamBlock(global[cn.block_range(i)].to_vec());
        let mut grad = vec![0.0; net.param_count()];
        for (z, adjoint) in points.iter().zip(&adjoints) {
            let (_, tape) = net.eval_tape(&params, z)?;
            net.backprop(&params, &tape, adjoint, &mut grad)?;
        }
        norms.push(crate::numerics::norm2(&grad));
    }
    Ok(norms)
}

/// Loss and gradient of one mini-batch for the active set; inactive
/// subnetworks come from the cache.
#[allow(clippy::too_many_arguments)]
fn epoch_loss_and_gradient(
    problem: &PoissonProblem,
    cn: &CompositeNetwork,
    global: &[f64],
    pool: &SamplePool,
    batch_idx: &crate::pinn::Batch,
    cache: &mut EvalCache,
    active: ActiveSet,
    grad: &mut Vec<f64>,
) -> Result<crate::pinn::LossBreakdown> {
    let interior: Vec<[f64; 2]> =
        batch_idx.interior.iter().map(|&i| pool.interior[i]).collect();
    let external: Vec<_> = batch_idx.boundary_e.iter().map(|&i| pool.boundary_e[i]).collect();
    let internal: Vec<_> = batch_idx.boundary_i.iter().map(|&i| pool.boundary_i[i]).collect();
    let batch = PinnBatch::new(problem, &interior, &external, &internal)?;
    let points = batch.points();

    // Global pool indices aligned with the batch point order, for cache
    // lookups of inactive subnetworks.
    let n_int = pool.interior.len();
    let n_ext = pool.boundary_e.len();
    let mut pool_idx = Vec::with_capacity(points.len());
    pool_idx.extend(batch_idx.interior.iter().copied());
    pool_idx.extend(batch_idx.boundary_e.iter().map(|&i| n_int + i));
    pool_idx.extend(batch_idx.boundary_i.iter().map(|&i| n_int + n_ext + i));

    let active_blocks: Vec<usize> = match active {
        ActiveSet::Full => (0..cn.n_blocks()).collect(),
        ActiveSet::Block(i) => vec![i],
    };
    let inactive: Vec<usize> =
        (0..cn.n_blocks()).filter(|i| !active_blocks.contains(i)).collect();
    let all_pool_points = pool_points(pool);
    for &i in &inactive {
        cache.ensure_pool(cn, global, i, &all_pool_points)?;
    }

    // Forward: active subnets with tapes, inactive from cache.
    let mut evals: Vec<PointEval> = Vec::with_capacity(points.len());
    let mut tapes: Vec<Vec<crate::network::JetTape>> = Vec::with_capacity(points.len());
    let active_params: Vec<ParamBlock> = active_blocks
        .iter()
        .map(|&i| ParamBlock(global[cn.block_range(i)].to_vec()))
        .collect();
    for (j, z) in points.iter().enumerate() {
        let mut combined = PointEval::zeros(cn.input_dim());
        let mut point_tapes = Vec::with_capacity(active_blocks.len());
        for (a, &i) in active_blocks.iter().enumerate() {
            let (e, t) = cn.subnets()[i].eval_tape(&active_params[a], z)?;
            combined.add_assign(&e);
            point_tapes.push(t);
        }
        for &i in &inactive {
            let cached = self_cached(cache, i, pool_idx[j]);
            combined.add_assign(cached);
        }
        evals.push(combined);
        tapes.push(point_tapes);
    }

    let (_, adjoints) = batch.value_and_adjoints(&evals);
    let breakdown = batch.components(&evals);

    // Reverse only through the active blocks.
    let active_len: usize = active_blocks.iter().map(|&i| cn.block_range(i).len()).sum();
    grad.clear();
    grad.resize(active_len, 0.0);
    let mut offset = 0usize;
    for (a, &i) in active_blocks.iter().enumerate() {
        let net = &cn.subnets()[i];
        let len = net.param_count();
        let slice = &mut grad[offset..offset + len];
        for (point_tapes, adjoint) in tapes.iter().zip(&adjoints) {
            net.backprop(&active_params[a], &point_tapes[a], adjoint, slice)?;
        }
        offset += len;
    }
    Ok(breakdown)
}

fn self_cached(cache: &EvalCache, subnet: usize, pool_idx: usize) -> &PointEval {
    cache.pool_evals[subnet]
        .as_ref()
        .expect("cache filled for inactive subnet")
        .get(pool_idx)
        .expect("pool index in range")
}

/// MSE with cached inactive subnet values.
fn cached_mse(
    cn: &CompositeNetwork,
    global: &[f64],
    pool: &SamplePool,
    cache: &mut EvalCache,
    active_blocks: &[usize],
    exact: &crate::pinn::ExactSolution,
) -> Result<f64> {
    let inactive: Vec<usize> =
        (0..cn.n_blocks()).filter(|i| !active_blocks.contains(i)).collect();
    for &i in &inactive {
        cache.ensure_test(cn, global, i, &pool.test)?;
    }
    let active_params: Vec<(usize, ParamBlock)> = active_blocks
        .iter()
        .map(|&i| (i, ParamBlock(global[cn.block_range(i)].to_vec())))
        .collect();
    let mut scratch = crate::network::ForwardScratch::default();
    let mut sum = 0.0;
    for (t, z) in pool.test.iter().enumerate() {
        let mut y = 0.0;
        for (i, params) in &active_params {
            y += cn.subnets()[*i].forward_with(params, z, &mut scratch)?;
        }
        for &i in &inactive {
            y += cache.test_values[i].as_ref().expect("filled")[t];
        }
        let e = y - exact.value(z);
        sum += e * e;
    }
    Ok(sum / pool.test.len() as f64)
}

/// Runs one seeded practice-mode experiment.
pub fn run_practice(run: &PracticeRun, seed: Seed) -> Result<RunOutcome> {
    let cn = &run.cn;
    let pool = sample_pool(
        &run.problem,
        run.sampling.n_interior,
        run.sampling.n_boundary,
        run.sampling.n_test,
        seed,
    )?;
    let mut global = cn.init_params(seed);
    let mut batch_rng = seed.stream(20);
    let mut cache = EvalCache::new(cn.n_blocks());
    let mut ledger = CostLedger::new();
    let mut trace = RunTrace::new();
    let mut grad = Vec::new();
    let mut epoch: u64 = 0;
    let mut sub_phase_count = 0usize;
    let mut last_mse = f64::NAN;
    let batch_points =
        (run.sampling.batch_interior + 2 * run.sampling.batch_boundary) as u64;

    for phase in phases(&run.schedule) {
        let (active, epochs) = match phase {
            Phase::Full { epochs } => (ActiveSet::Full, epochs),
            Phase::Sub { epochs } => {
                // Step 1-2 of the outer loop: full-pool gradient, then pick
                // the block. Selection forwards are charged as FLOPs.
                let norms = pool_block_norms(&run.problem, cn, &global, &pool)?;
                let full_norm = norms.iter().map(|n| n * n).sum::<f64>().sqrt();
                let block = select_block(&norms, full_norm, &run.selection, sub_phase_count)?;
                sub_phase_count += 1;
                trace.push_selection(epoch, norms);
                let pool_total =
                    (pool.interior.len() + pool.boundary_e.len() + pool.boundary_i.len()) as u64;
                ledger.charge(
                    ActiveSet::Block(block),
                    0.0,
                    cost::composite_forward_flops(cn, pool_total),
                );
                (ActiveSet::Block(block), epochs)
            }
        };

        let (range, active_blocks): (Range<usize>, Vec<usize>) = match active {
            ActiveSet::Full => (0..cn.total_params(), (0..cn.n_blocks()).collect()),
            ActiveSet::Block(i) => (cn.block_range(i), vec![i]),
        };
        // Adam restarts from scratch at every subproblem change.
        let mut state = AdamState::new(range.len());
        let epoch_flops: u64 = active_blocks
            .iter()
            .map(|&i| cost::forward_flops(&cn.subnets()[i], batch_points))
            .sum();
        let epoch_units = cost::epoch_cost_units(cn, active);

        for _ in 0..epochs {
            let batch = draw_batch(
                &pool,
                run.sampling.batch_interior,
                run.sampling.batch_boundary,
                &mut batch_rng,
            )?;
            let breakdown = epoch_loss_and_gradient(
                &run.problem,
                cn,
                &global,
                &pool,
                &batch,
                &mut cache,
                active,
                &mut grad,
            )?;
            if !breakdown.total.is_finite() {
                return Ok(RunOutcome {
                    trace,
                    failure: Some(format!(
                        "non-finite loss {} at epoch {}",
                        breakdown.total,
                        epoch + 1
                    )),
                });
            }
            let lr = match adam_step(&mut state, &mut global, range.clone(), &grad, &run.adam, epoch)
            {
                Ok(lr) => lr,
                Err(e) => return Ok(RunOutcome { trace, failure: Some(e.to_string()) }),
            };
            // The active block changed; its cached evaluations are stale.
            match active {
                ActiveSet::Full => cache.invalidate_all(),
                ActiveSet::Block(i) => {
                    cache.pool_evals[i] = None;
                    cache.test_values[i] = None;
                }
            }
            epoch += 1;
            ledger.charge(active, epoch_units, epoch_flops);
            if let Some(exact) = &run.problem.exact {
                if epoch % run.sampling.mse_every as u64 == 0 || epoch == 1 {
                    last_mse = cached_mse(cn, &global, &pool, &mut cache, &active_blocks, exact)?;
                }
            }
            trace.push(EpochRecord {
                epoch,
                cost_units: ledger.units(),
                flops: ledger.flops(),
                loss: breakdown.total,
                loss_interior: breakdown.interior,
                loss_gamma_e: breakdown.gamma_e,
                loss_gamma_i: breakdown.gamma_i,
                mse: last_mse,
                active_block: active.trace_id(),
                lr,
            });
        }
    }
    Ok(RunOutcome { trace, failure: None })
}

/// Deterministic SPD two-level instance for theory mode.
pub fn seeded_quadratic(n1: usize, n2: usize, seed: Seed) -> QuadraticProblem {
    use rand::Rng;
    let mut rng = seed.stream(30);
    let m = DenseMatrix::from_rows(
        n1,
        n1,
        (0..n1 * n1).map(|_| rng.random_range(-1.0..1.0)).collect(),
    );
    let mut a = m.matmul(&m.transpose());
    for i in 0..n1 {
        a.set(i, i, a.get(i, i) + 1.0);
    }
    let b: Vec<f64> = (0..n1).map(|_| rng.random_range(-1.0..1.0)).collect();
    let p = DenseMatrix::from_rows(
        n1,
        n2,
        (0..n1 * n2).map(|_| rng.random_range(-1.0..1.0)).collect(),
    );
    QuadraticProblem::new(a, b, p).expect("construction is valid for the SPD recipe")
}

/// Runs one seed of a config in any mode, returning the trace.
pub fn run_config_seed(config: &ExperimentConfig, seed: u64) -> Result<RunOutcome> {
    match config.mode {
        Mode::Theory => {
            let qp = seeded_quadratic(config.problem.n1, config.problem.n2, Seed(seed));
            let obj = QuadraticBlockObjective::from_two_level(&qp);
            let lip = obj.lipschitz_constant();
            let params = TheoryParams::new(
                config.problem.alpha_frac / lip,
                config.problem.tau,
                config.problem.eps,
            );
            use rand::Rng;
            let mut rng = Seed(seed).stream(31);
            let x0: Vec<f64> = (0..obj.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let outcome = run_theory(&obj, &x0, &params)?;
            Ok(RunOutcome { trace: outcome.trace, failure: None })
        }
        Mode::Single => {
            let run = PracticeRun {
                problem: config.build_problem()?,
                cn: config.architecture_spec()?.build()?,
                schedule: config.schedule()?,
                selection: SelectionRule::MaxRatio,
                adam: config.adam_config(),
                sampling: config.sampling(),
            };
            run_practice(&run, Seed(seed))
        }
        Mode::Faml | Mode::Hierarchical => {
            let run = PracticeRun {
                problem: config.build_problem()?,
                cn: config.architecture_spec()?.build()?,
                schedule: config.schedule()?,
                selection: config.selection_rule()?,
                adam: config.adam_config(),
                sampling: config.sampling(),
            };
            run_practice(&run, Seed(seed))
        }
    }
}

/// Trace filename convention: `<label>__<problem>__seed<k>.csv`.
pub fn trace_filename(label: &str, problem: &str, seed: u64) -> String {
    format!("{label}__{problem}__seed{seed}.csv")
}

/// Runs every seed of a config, writing one trace per seed into `out_dir`.
/// Seeds fan out over `threads` workers. A failed run writes its partial
/// trace plus a `.failed` marker and is reported in the summary.
pub fn cmd_run(
    config: &ExperimentConfig,
    out_dir: &Path,
    seeds_override: Option<Vec<u64>>,
    threads: usize,
) -> Result<Vec<(u64, Option<String>)>> {
    std::fs::create_dir_all(out_dir)?;
    let seeds = seeds_override.unwrap_or_else(|| config.run.seeds.clone());
    let label = config.label();
    let problem_name = config.problem.name.clone();
    let threads = threads.max(1).min(seeds.len().max(1));

    let results = std::sync::Mutex::new(Vec::new());
    let next = std::sync::atomic::AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if k >= seeds.len() {
                    break;
                }
                let seed = seeds[k];
                let result = run_config_seed(config, seed);
                results.lock().unwrap().push((seed, result));
            });
        }
    });

    let mut summary = Vec::new();
    let mut runs = results.into_inner().unwrap();
    runs.sort_by_key(|(seed, _)| *seed);
    for (seed, result) in runs {
        let path = out_dir.join(trace_filename(&label, &problem_name, seed));
        match result {
            Ok(outcome) => {
                let file = std::fs::File::create(&path)?;
                crate::trace::write_trace(&outcome.trace, std::io::BufWriter::new(file))?;
                if let Some(failure) = &outcome.failure {
                    std::fs::write(path.with_extension("failed"), failure)?;
                }
                summary.push((seed, outcome.failure));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(summary)
}
