#![no_main]

use libfuzzer_sys::fuzz_target;
use qmelab::{Distribution, KernelFamily, ReferenceRule};

// Distribution, reference and kernel strings as accepted on the command line.
// Whatever parses must print back to a string that parses to the same value.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(d) = text.parse::<Distribution>() {
        assert_eq!(d.to_string().parse::<Distribution>().ok(), Some(d));
    }
    if let Ok(r) = text.parse::<ReferenceRule>() {
        assert_eq!(r.to_string().parse::<ReferenceRule>().ok(), Some(r));
    }
    if let Ok(k) = text.parse::<KernelFamily>() {
        assert_eq!(k.to_string().parse::<KernelFamily>().ok(), Some(k));
    }
});
