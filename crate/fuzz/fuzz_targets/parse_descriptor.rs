#![no_main]

use fourier_contour::codec::FourierDescriptor;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(desc) = FourierDescriptor::from_json_str(text) {
        let decoded = desc.decode_real();
        assert_eq!(decoded.len(), desc.n_points());
        let _ = desc.backpropagate(&decoded);
        let back = FourierDescriptor::from_json_str(&desc.to_json_string()).expect("re-parse");
        assert_eq!(back.parameters().len(), desc.parameters().len());
    }
});
