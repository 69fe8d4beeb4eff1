//! FLOP and cost-unit accounting.
//!
//! One cost unit is the price of optimizing the complete composite network
//! for one epoch; a subnetwork epoch costs its parameter fraction. FLOPs
//! count forward-pass matrix-vector products with the first layer weighted
//! by 2d, replicating the reference formula as printed (the asymmetry
//! between the first and later layers is kept for comparability).

use crate::composite::CompositeNetwork;
use crate::driver::Schedule;
use crate::network::SubNetwork;
use std::collections::BTreeMap;

/// Forward-pass FLOPs of one subnetwork over `n` points:
/// n * (2 d0 d1 + sum_j d_j d_{j+1} + d_last * out), with SFM doubling
/// applied to the effective widths.
pub fn forward_flops(net: &SubNetwork, n: u64) -> u64 {
    let mut per_point = 0u64;
    for (j, layer) in net.layers().iter().enumerate() {
        let weight = if j == 0 { 2 } else { 1 };
        per_point += weight * (layer.in_dim as u64) * (layer.width as u64);
    }
    n * per_point
}

/// Composite forward FLOPs are the sum over subnetworks.
pub fn composite_forward_flops(cn: &CompositeNetwork, n: u64) -> u64 {
    cn.subnets().iter().map(|s| forward_flops(s, n)).sum()
}

/// The epoch being trained: the whole composite or one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActiveSet {
    Full,
    Block(usize),
}

impl ActiveSet {
    pub fn trace_id(&self) -> i64 {
        match self {
            ActiveSet::Full => -1,
            ActiveSet::Block(i) => *i as i64,
        }
    }
}

/// Cost units of one epoch on the given active set.
pub fn epoch_cost_units(cn: &CompositeNetwork, active: ActiveSet) -> f64 {
    match active {
        ActiveSet::Full => 1.0,
        ActiveSet::Block(i) => cn.block_fraction(i),
    }
}

/// Total cost units of a schedule when every sub phase trains a block of
/// the given parameter fraction.
pub fn schedule_cost(schedule: &Schedule, block_fraction: f64) -> f64 {
    schedule.initial_full_epochs as f64
        + schedule.cycles as f64
            * (schedule.full_epochs_per_cycle as f64
                + schedule.sub_epochs_per_cycle as f64 * block_fraction)
}

/// Running totals plus a per-active-set breakdown that always sums to them.
#[derive(Debug, Clone, Default)]
pub struct CostLedger {
    units: f64,
    flops: u64,
    breakdown: BTreeMap<i64, (f64, u64)>,
}

impl CostLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge(&mut self, active: ActiveSet, units: f64, flops: u64) {
        assert!(units >= 0.0, "cost increments are non-negative");
        self.units += units;
        self.flops += flops;
        let entry = self.breakdown.entry(active.trace_id()).or_insert((0.0, 0));
        entry.0 += units;
        entry.1 += flops;
    }

    pub fn units(&self) -> f64 {
        self.units
    }

    pub fn flops(&self) -> u64 {
        self.flops
    }

    pub fn breakdown(&self) -> &BTreeMap<i64, (f64, u64)> {
        &self.breakdown
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Activation, InputScaling};

    fn plain(widths: Vec<usize>) -> SubNetwork {
        let mut acts = vec![Activation::Tanh; widths.len()];
        acts.push(Activation::Identity);
        SubNetwork::new(2, widths, 1, acts, InputScaling::None).unwrap()
    }

    #[test]
    fn zero_points_cost_nothing() {
        assert_eq!(forward_flops(&plain(vec![100, 100]), 0), 0);
    }

    #[test]
    fn reference_two_hidden_layer_formula() {
        // d=2, d_h=100, N=1000: N * (2*2*100 + 100^2 + 100) = 10_500_000.
        let net = plain(vec![100, 100]);
        assert_eq!(forward_flops(&net, 1000), 10_500_000);
    }

    #[test]
    fn composite_flops_add_up() {
        let a = plain(vec![100, 100]);
        let b = plain(vec![50, 50]);
        let cn = CompositeNetwork::new(vec![a.clone(), b.clone()]).unwrap();
        assert_eq!(
            composite_forward_flops(&cn, 7),
            forward_flops(&a, 7) + forward_flops(&b, 7)
        );
    }

    #[test]
    fn sfm_doubles_effective_width_in_flops() {
        let sfm = SubNetwork::new(
            2,
            vec![100, 100],
            1,
            vec![Activation::Sfm { relax: 0.5 }, Activation::Tanh, Activation::Identity],
            InputScaling::None,
        )
        .unwrap();
        // First layer 2*2*100, second 200*100 (doubled input), output 100.
        assert_eq!(forward_flops(&sfm, 1), 400 + 20_000 + 100);
    }

    #[test]
    fn four_equal_subnets_cost_a_quarter() {
        let cn = CompositeNetwork::new((0..4).map(|_| plain(vec![20, 20, 20])).collect()).unwrap();
        assert_eq!(epoch_cost_units(&cn, ActiveSet::Full), 1.0);
        assert_eq!(epoch_cost_units(&cn, ActiveSet::Block(2)), 0.25);
    }

    #[test]
    fn single_subnet_block_costs_one() {
        let cn = CompositeNetwork::new(vec![plain(vec![10])]).unwrap();
        assert_eq!(epoch_cost_units(&cn, ActiveSet::Block(0)), 1.0);
    }

    #[test]
    fn uneven_blocks_cost_their_fraction() {
        // n1 = 3 n2: block 2 costs 0.25. Widths chosen so the parameter
        // counts are exactly 3:1.
        let big = SubNetwork::new(3, vec![], 3, vec![Activation::Identity], InputScaling::None)
            .unwrap();
        let small = SubNetwork::new(3, vec![], 1, vec![Activation::Identity], InputScaling::None)
            .unwrap();
        assert_eq!(big.param_count(), 3 * small.param_count());
        let cn = CompositeNetwork::new(vec![big, small]).unwrap();
        assert_eq!(epoch_cost_units(&cn, ActiveSet::Block(1)), 0.25);
    }

    #[test]
    fn reference_schedule_costs_19000_units() {
        let schedule = Schedule {
            initial_full_epochs: 1000,
            cycles: 9,
            full_epochs_per_cycle: 1000,
            sub_epochs_per_cycle: 4000,
        };
        assert_eq!(schedule_cost(&schedule, 0.25), 19_000.0);
        let no_cycles = Schedule { cycles: 0, ..schedule };
        assert_eq!(schedule_cost(&no_cycles, 0.25), 1000.0);
    }

    #[test]
    fn hierarchical_alternation_cost() {
        // Equal fine and coarse blocks: a cycle of 2000 full epochs plus
        // 2000 coarse epochs costs 2000 + 2000 * 0.5 = 3000 units.
        let schedule = Schedule {
            initial_full_epochs: 0,
            cycles: 1,
            full_epochs_per_cycle: 2000,
            sub_epochs_per_cycle: 2000,
        };
        assert_eq!(schedule_cost(&schedule, 0.5), 3000.0);
    }

    #[test]
    fn ledger_breakdown_sums_to_totals() {
        let mut ledger = CostLedger::new();
        ledger.charge(ActiveSet::Full, 1.0, 100);
        ledger.charge(ActiveSet::Block(0), 0.25, 25);
        ledger.charge(ActiveSet::Block(0), 0.25, 25);
        ledger.charge(ActiveSet::Block(1), 0.5, 50);
        let (u, f): (f64, u64) =
            ledger.breakdown().values().fold((0.0, 0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
        assert_eq!(u, ledger.units());
        assert_eq!(f, ledger.flops());
        assert_eq!(ledger.units(), 2.0);
        assert_eq!(ledger.flops(), 200);
    }
}
