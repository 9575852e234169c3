//! Room-layout estimation from equirectangular panoramas by warping a
//! reference layout with a thin-plate spline.

pub mod error;
pub mod fit;
pub mod io;
pub mod layout;
pub mod metrics;
pub mod pipeline;
pub mod polygon;
pub mod postproc;
pub mod raster;
pub mod synth;
pub mod tps;
pub mod warp;

pub use error::{Error, ErrorCategory, Result};
pub use fit::{fit_tps, FitConfig, FitTrace};
pub use layout::{reference_layout, render_maps, CornerAnnotation, RenderStyle, RoomLayout};
pub use metrics::MetricsReport;
pub use raster::{LayoutMaps, Raster};
pub use tps::{ControlGrid, SamplingGrid, TpsCoefficients};
pub use pipeline::{Mode, Resolution, RunConfig, Settings};
