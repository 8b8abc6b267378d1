#![no_main]

use fedsim_core::data::{assemble_idx, parse_idx_images};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(images) = parse_idx_images(data) {
        assert_eq!(images.pixels.len(), images.count * images.rows * images.cols);
        let labels = vec![0u8; images.count];
        if let Ok(ds) = assemble_idx(&images, &labels, &[0]) {
            assert_eq!(ds.len(), images.count);
        }
    }
});
