//! Run reports shared by both descent methods.

use crate::cost::{total_cost, CostBreakdown};
use crate::dynamics::{integrate_forward, ControlTrajectory, StatePath};
use crate::error::Result;
use crate::systems::ControlAffineSystem;

/// What produced an iteration record.
#[derive(Debug, Clone, PartialEq)]
pub enum StepDetail {
    /// Cost of the initial control, before any update.
    Init,
    /// An accepted PMP convex-combination step with its backtracked `eta`.
    Pmp { eta: f64 },
    /// An accepted sample-and-hold sweep and the forward solves it spent
    /// on probes.
    Monotone { probe_solves: usize },
}

/// One accepted iterate.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    /// 0 for the initial control, then 1, 2, ... for accepted updates.
    pub iter: usize,
    pub cost: CostBreakdown,
    /// Wall time spent producing this iterate, in milliseconds (0 for the
    /// initial record).
    pub wall_ms: f64,
    pub detail: StepDetail,
    /// The control that produced `cost`, kept so the report can be
    /// re-audited against a fresh evaluation.
    pub control: ControlTrajectory,
}

/// A smoothed variant of the final control with its separately evaluated
/// cost (the monotonicity guarantee applies to the unsmoothed iterate).
#[derive(Debug, Clone)]
pub struct SmoothedOutput<S> {
    pub control: ControlTrajectory,
    pub path: StatePath<S>,
    pub cost: CostBreakdown,
}

/// Everything a descent run produces.
#[derive(Debug, Clone)]
pub struct DescentReport<S> {
    /// Records for the initial control and every accepted iterate, in
    /// order.
    pub records: Vec<IterationRecord>,
    /// The final (best) control.
    pub control: ControlTrajectory,
    /// The state path of the final control.
    pub path: StatePath<S>,
    /// Present when a posteriori smoothing was requested.
    pub smoothed: Option<SmoothedOutput<S>>,
}

impl<S> DescentReport<S> {
    /// Cost of the final iterate.
    pub fn final_cost(&self) -> CostBreakdown {
        self.records
            .last()
            .expect("reports always carry the initial record")
            .cost
    }

    /// Number of accepted update iterations (excluding the initial record).
    pub fn accepted_iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    /// Whether the recorded cost sequence is nonincreasing within `slack`.
    pub fn monotone_ok(&self, slack: f64) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].cost.total <= w[0].cost.total + slack)
    }

    /// Largest deviation between recorded costs and a fresh recomputation
    /// from the stored controls.  An honest report keeps this at roundoff.
    pub fn recomputation_error<Sys>(&self, system: &Sys, x_init: &Sys::State) -> Result<f64>
    where
        Sys: ControlAffineSystem<State = S>,
        S: crate::systems::StateVector,
    {
        let mut worst = 0.0f64;
        for rec in &self.records {
            let grid = rec.control.grid();
            let path = integrate_forward(system, x_init, &rec.control, 0, grid.steps())?;
            let fresh = total_cost(system, &path, &rec.control)?;
            worst = worst.max((fresh.total - rec.cost.total).abs());
        }
        Ok(worst)
    }
}
