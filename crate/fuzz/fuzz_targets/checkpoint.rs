#![no_main]

use libfuzzer_sys::fuzz_target;
use sharecast_autodiff::Checkpoint;

fuzz_target!(|data: &[u8]| {
    if let Ok(ckpt) = Checkpoint::from_bytes(data) {
        let again = Checkpoint::from_bytes(&ckpt.to_bytes()).expect("written checkpoint reads back");
        assert_eq!(again.to_bytes(), ckpt.to_bytes());
    }
});
