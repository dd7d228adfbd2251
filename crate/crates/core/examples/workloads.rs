//! Execute the built-in tasks through the registry, using their wire codecs.
//!
//! cargo run --release --example workloads

use std::time::Instant;

use forage::workloads::{decode_f64, decode_u64, encode_matrix, encode_prime_index, Matrix, TaskRegistry, MATRIX_DETERMINANT, NTH_PRIME};

fn main() {
    let registry = TaskRegistry::with_builtin();
    println!("tasks: {:?}", registry.names().collect::<Vec<_>>());

    for n in [25u64, 10_000, 100_000] {
        let start = Instant::now();
        let out = registry.execute(NTH_PRIME, &encode_prime_index(n)).unwrap();
        println!("prime #{n} = {} ({:?})", decode_u64(&out).unwrap(), start.elapsed());
    }

    for dim in [3usize, 6, 9] {
        let m = Matrix::random(dim, dim as u64);
        let start = Instant::now();
        let out = registry.execute(MATRIX_DETERMINANT, &encode_matrix(&m)).unwrap();
        println!("det of random {dim}x{dim} = {:.6} ({:?})", decode_f64(&out).unwrap(), start.elapsed());
    }

    // Inputs outside the task limits are errors, not hangs.
    println!("{}", registry.execute(NTH_PRIME, &encode_prime_index(0)).unwrap_err());
    println!("{}", registry.execute(MATRIX_DETERMINANT, &encode_matrix(&Matrix::identity(12))).unwrap_err());
}
