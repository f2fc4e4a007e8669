#![no_main]

use libfuzzer_sys::fuzz_target;
use qmelab::PureState;

// Accepted states are unit-norm and survive a write/read cycle unchanged.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(state) = PureState::from_json(text) {
        assert!((state.norm() - 1.0).abs() <= 1e-10);
        let again = PureState::from_json(&state.to_json()).expect("own output parses");
        assert_eq!(state, again);
    }
});
