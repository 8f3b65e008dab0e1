//! Iteration of holomorphic self-maps: orbits, Denjoy–Wolff behaviour,
//! commuting pairs and their limit retracts.

mod commuting;
mod maps;
mod orbit;

pub use commuting::{
    check_pair, commuting_return, default_n_max, lipschitz_audit, retract_approx, schedule_from,
    segment_grid, selector_bound_audit, LipschitzAudit, RetractReport, ReturnRow, ReturnTable,
    SelectorAudit,
};
pub use maps::{interior_samples, HoloMap, MapSpec, COMMUTE_TOL, VALIDATION_SAMPLES};
pub use orbit::{
    classify_orbit, denjoy_wolff, iterate, same_verdict, OrbitClassification, OrbitTrace, Verdict,
    DIVERGENCE_FACTOR,
};
