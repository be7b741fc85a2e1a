//! Float intrinsics routed through `libm` so the crate stays `no_std`.

pub(crate) use libm::{atan2, cos, exp, fabs as abs, log, sin, sqrt};

