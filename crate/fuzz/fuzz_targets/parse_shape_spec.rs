#![no_main]

use fourier_contour::corpus::{generate, ShapeSpec};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = ShapeSpec::from_json_str(text) {
        // Keep iterations cheap: only small shapes are generated.
        let small = match &spec {
            ShapeSpec::Circle { vertices, .. }
            | ShapeSpec::Ellipse { vertices, .. }
            | ShapeSpec::RandomConvex { vertices, .. }
            | ShapeSpec::RandomStarShaped { vertices, .. } => *vertices <= 512,
            ShapeSpec::RegularPolygon { sides, .. } => *sides <= 512,
            ShapeSpec::Star { spikes, .. } => *spikes <= 256,
        };
        if small {
            let _ = generate(&spec, 1, 0);
        }
    }
});
