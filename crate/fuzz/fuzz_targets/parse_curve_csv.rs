#![no_main]

use fourier_contour::evalcurve::{curve_csv_string, parse_curve_csv};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(curve) = parse_curve_csv(text) {
        let again = parse_curve_csv(&curve_csv_string(&curve)).expect("re-parse");
        assert_eq!(again.len(), curve.len());
    }
});
