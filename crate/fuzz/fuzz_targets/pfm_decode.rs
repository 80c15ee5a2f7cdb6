#![no_main]

use libfuzzer_sys::fuzz_target;
use stereosynth::io::{decode_pfm, encode_pfm};

fuzz_target!(|data: &[u8]| {
    if let Ok(p) = decode_pfm(data) {
        assert_eq!(p.data.len(), p.width * p.height * p.channels);
        let again = decode_pfm(&encode_pfm(&p).unwrap()).unwrap();
        assert_eq!((again.width, again.height, again.channels), (p.width, p.height, p.channels));
    }
});
