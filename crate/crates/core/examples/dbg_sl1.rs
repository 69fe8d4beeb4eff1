use mlbcd::architectures;
use mlbcd::network::BatchLoss;
use mlbcd::numerics::Seed;
use mlbcd::pinn::{make_hier_problem, sample_pool, PinnBatch};
use rand::Rng;

fn main() {
    let spec = architectures::named("SL1").unwrap();
    let problem = make_hier_problem(2, 4).unwrap();
    for seed in 1..=5u64 {
        let cn = spec.build().unwrap();
        let global = cn.init_params(Seed(seed));
        let pool = sample_pool(&problem, 16, 8, 4, Seed(seed)).unwrap();
        let batch = PinnBatch::new(&problem, &pool.interior[..8], &pool.boundary_e[..4], &pool.boundary_i[..4]).unwrap();
        let bg = cn.block_gradients(&global, &batch).unwrap();
        let full = bg.concatenated(cn.total_params());
        let loss_at = |params: &[f64]| -> f64 {
            let evals: Vec<_> = batch.points().iter().map(|z| cn.eval(params, z).unwrap()).collect();
            batch.value_and_adjoints(&evals).0
        };
        let mut rng = Seed(seed).stream(41);
        for probe_i in 0..6 {
            let dir: Vec<f64> = {
                let v: Vec<f64> = (0..cn.total_params()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let n = mlbcd::numerics::norm2(&v);
                v.into_iter().map(|x| x / n).collect()
            };
            let probe = |h: f64| -> f64 {
                let mut pp = global.to_vec();
                let mut pm = global.to_vec();
                for i in 0..dir.len() { pp[i] += h * dir[i]; pm[i] -= h * dir[i]; }
                (loss_at(&pp) - loss_at(&pm)) / (2.0 * h)
            };
            let fd5 = probe(1e-5);
            let fd6 = probe(5e-6);
            let fd4 = probe(1e-4);
            let an = mlbcd::numerics::dot(&full, &dir);
            let rel = (an - fd5).abs() / an.abs().max(fd5.abs()).max(1e-6);
            if rel > 1e-5 {
                println!("seed {seed} probe {probe_i}: analytic {an:.10e}");
                println!("   fd(1e-4) {fd4:.10e}\n   fd(1e-5) {fd5:.10e}\n   fd(5e-6) {fd6:.10e}  rel {rel:.2e}");
            }
        }
    }
}
