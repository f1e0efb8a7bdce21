#![no_main]

use fourier_contour::corpus::{annotations_to_string, parse_annotations};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(report) = parse_annotations(text) {
        // Whatever loads must serialize and load again unchanged.
        let again = parse_annotations(&annotations_to_string(&report.instances)).expect("re-parse");
        assert_eq!(again.instances.len(), report.instances.len());
        assert!(again.rejected.is_empty());
    }
});
