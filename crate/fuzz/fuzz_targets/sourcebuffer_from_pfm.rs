#![no_main]

use libfuzzer_sys::fuzz_target;
use stereosynth::io::sourcebuffer_from_pfm;
use stereosynth::Eye;

fuzz_target!(|data: &[u8]| {
    for eye in [Eye::Left, Eye::Right] {
        if let Ok(b) = sourcebuffer_from_pfm(data, eye) {
            let (w, h) = b.dims();
            assert!(w > 0 && h > 0);
        }
    }
});
