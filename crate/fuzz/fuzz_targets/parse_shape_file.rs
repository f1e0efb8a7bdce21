#![no_main]

use fourier_contour::codec::{parse_shape_file, shape_file_to_string};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(shapes) = parse_shape_file(text) {
        for shape in &shapes {
            let _ = shape.code.decode_points();
        }
        let again = parse_shape_file(&shape_file_to_string(&shapes)).expect("re-parse");
        assert_eq!(again.len(), shapes.len());
    }
});
