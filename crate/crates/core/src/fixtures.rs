//! Small hand-built instances shared by tests, examples and benchmarks.

use crate::model::{Instance, InstanceSpec};

/// The four-by-four SMTI instance
///
/// ```text
/// m1: (w1 w3) w2      w1: m1 m3 m2
/// m2: w1 w2 w4        w2: (m2 m4) m1
/// m3: w1              w3: m1
/// m4: w2              w4: m2
/// ```
pub fn toy() -> Instance {
    Instance::new(InstanceSpec::smti(
        vec![
            vec![vec![0, 2], vec![1]],
            vec![vec![0], vec![1], vec![3]],
            vec![vec![0]],
            vec![vec![1]],
        ],
        vec![
            vec![vec![0], vec![2], vec![1]],
            vec![vec![1, 3], vec![0]],
            vec![vec![0]],
            vec![vec![1]],
        ],
    ))
    .expect("toy instance is valid")
}

/// Same instance in the text file format.
pub const TOY_TEXT: &str = "\
SMTI 4 4
U 1: (1 3) 2
U 2: 1 2 4
U 3: 1
U 4: 2
W 1: 1 3 2
W 2: (2 4) 1
W 3: 1
W 4: 2
";
