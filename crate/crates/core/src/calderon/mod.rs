//! Checks on the Calderon side: Schrodinger DN maps and their conformal
//! gauge, holomorphic boundary traces, the boundary Carleman inequality,
//! the WKB ansatz and homology periods on the annulus.

mod carleman;
mod dn;
mod holo;
mod periods;
mod wkb;

pub use carleman::{
    carleman_terms, carleman_verify, conjugated, random_waves, CarlemanReport, CarlemanTerms, ConjugatedHarmonic, Jet,
    TestField, Wave, Weight, CARLEMAN_RESOLUTION,
};
pub use dn::{
    default_gauge, gauge_check, sample_coefficients, schrodinger_dn, schrodinger_operator, GaugeLevel, GaugeReport,
};
pub use holo::{holo_trace_batch, holo_trace_test, holomorphic_trace, random_polynomials, HoloTraceReport};
pub use periods::{homology_periods, period_checks, ring_radii, Annulus, PeriodReport, Projection};
pub use wkb::{wkb_ansatz, wkb_residual, wkb_terms, WkbReport, WKB_MIN_DERIVATIVE, WKB_TAPER_CENTER, WKB_TAPER_WIDTH};
