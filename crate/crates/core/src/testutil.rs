pub use crate::synth::{clustered_edges, random_edges, random_vector};

/// Per-component relative check `|got - want| <= rel * |want|`.
#[track_caller]
pub fn assert_close(got: &[f64], want: &[f64], rel: f64) {
    assert_eq!(got.len(), want.len(), "length");
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        assert!(
            (g - w).abs() <= rel * w.abs(),
            "component {i}: got {g}, want {w} (rel {rel})"
        );
    }
}
