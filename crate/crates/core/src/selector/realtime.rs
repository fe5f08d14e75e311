use crate::model::UseCase;
use crate::selector::{Calibration, Fabric};

/// Real-time budget: one simulation step of simulated time (50 µs) per step.
pub const REAL_TIME_STEP_SECONDS: f64 = 50e-6;

/// Largest network each fabric simulates in real time, from the shipped
/// measurements. `None` means no size is real-time capable.
///
/// Gap-junction cases use the nearest measured density (25/50/75/100 %);
/// density 0 maps to the 25 % row.
pub fn rt_max_network_default(fabric: Fabric, use_case: UseCase, density: f64) -> Option<usize> {
    let bucket = (density.clamp(0.0, 1.0) * 4.0).round().max(1.0) / 4.0;
    match (fabric, use_case) {
        (Fabric::Dfe, UseCase::Rgj) => Some(310),
        (Fabric::Dfe, UseCase::Sgj) => Some(400),
        (Fabric::Dfe, UseCase::Ngj) => Some(7680),
        (Fabric::Phi, UseCase::Ngj) => Some(96),
        (Fabric::Gpu, UseCase::Ngj) => Some(500),
        (Fabric::Gpu, UseCase::Sgj) if bucket <= 0.5 => Some(96),
        _ => None,
    }
}

/// Largest calibrated grid size whose interpolated step time fits the
/// real-time budget. Falls back to [`rt_max_network_default`] when no
/// calibration is given or it holds no series for this fabric and use case.
pub fn rt_max_network(fabric: Fabric, use_case: UseCase, density: f64, calibration: Option<&Calibration>) -> Option<usize> {
    match calibration {
        Some(cal) if cal.has_series(fabric, use_case) => cal
            .grid(fabric, use_case, density)
            .into_iter()
            .filter(|&n| {
                cal.sec_per_step(fabric, use_case, density, n)
                    .is_some_and(|t| t <= REAL_TIME_STEP_SECONDS)
            })
            .max(),
        _ => rt_max_network_default(fabric, use_case, density),
    }
}
