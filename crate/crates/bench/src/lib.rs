//! Benchmark inputs shared by the criterion targets.

use hazekit::synthesis::generate_scene;
use hazekit::PlanarImage;

/// Hazy procedural scene of the given size, fixed seed.
pub fn hazy_scene(size: usize) -> PlanarImage {
    generate_scene(size, size, 1, Some(1.2), None).expect("valid scene size").hazy
}
