//! Benchmark tasks and their byte codecs.
//!
//! Two tasks are built in, registered under the names their application
//! descriptors use:
//!
//! * `"Nth Prime Number"`: input is an 8-byte big-endian `u64` `n`, output
//!   the `n`th prime (1-indexed) as an 8-byte big-endian `u64`.
//! * `"Matrix Determinant"`: input is a 4-byte big-endian `u32` dimension `N`
//!   followed by `N²` big-endian IEEE-754 doubles in row-major order; output
//!   is the determinant as one big-endian double.
//!
//! Both are deterministic, so the same input bytes give the same output
//! bytes on any host.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub const NTH_PRIME: &str = "Nth Prime Number";
pub const MATRIX_DETERMINANT: &str = "Matrix Determinant";

pub const DEFAULT_MAX_PRIME_INDEX: u64 = 10_000_000;
pub const DEFAULT_MAX_MATRIX_DIM: usize = 11;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaskError {
    #[error("{what} {value} is outside the supported range {min}..={max}")]
    OutOfRange {
        what: &'static str,
        value: u64,
        min: u64,
        max: u64,
    },
    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("matrix dimension {dim} exceeds the limit of {max}")]
    TooLarge { dim: usize, max: usize },
    #[error("codec error: {0}")]
    Codec(String),
    #[error("unknown task {0:?}")]
    UnknownTask(String),
}

/// The `n`th prime, 1-indexed, by trial division against the primes found
/// so far.
pub fn nth_prime(n: u64, max_index: u64) -> Result<u64, TaskError> {
    if n == 0 || n > max_index {
        return Err(TaskError::OutOfRange {
            what: "prime index",
            value: n,
            min: 1,
            max: max_index,
        });
    }
    if n == 1 {
        return Ok(2);
    }
    let mut primes: Vec<u64> = vec![2];
    let mut candidate = 3u64;
    loop {
        let is_prime = primes
            .iter()
            .skip(1)
            .take_while(|&&p| p * p <= candidate)
            .all(|&p| !candidate.is_multiple_of(p));
        if is_prime {
            primes.push(candidate);
            if primes.len() as u64 == n {
                return Ok(candidate);
            }
        }
        candidate += 2;
    }
}

/// Square matrix of doubles in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    entries: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, TaskError> {
        let dim = rows.len();
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(TaskError::NotSquare {
                row,
                len: r.len(),
                expected: dim,
            });
        }
        Ok(Self {
            dim,
            entries: rows.concat(),
        })
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![0.0; dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = 1.0;
        }
        Self { dim, entries }
    }

    /// Entries drawn uniformly from `[-1, 1)` with a seeded ChaCha8 stream.
    pub fn random(dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries = (0..dim * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.dim + col]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim.max(1)).map(<[f64]>::to_vec).collect()
    }
}

/// Determinant by cofactor expansion along the first row, which takes on
/// the order of `N!` steps.
pub fn matrix_determinant(m: &Matrix, max_dim: usize) -> Result<f64, TaskError> {
    if m.dim == 0 {
        return Err(TaskError::Codec("matrix dimension must be at least 1".into()));
    }
    if m.dim > max_dim {
        return Err(TaskError::TooLarge {
            dim: m.dim,
            max: max_dim,
        });
    }
    let mut cols: Vec<usize> = (0..m.dim).collect();
    Ok(cofactor(m, 0, &mut cols))
}

// Determinant of the minor made of rows `row..` and the columns in `cols`.
fn cofactor(m: &Matrix, row: usize, cols: &mut Vec<usize>) -> f64 {
    if cols.len() == 1 {
        return m.get(row, cols[0]);
    }
    let mut det = 0.0;
    let mut sign = 1.0;
    for k in 0..cols.len() {
        let col = cols.remove(k);
        det += sign * m.get(row, col) * cofactor(m, row + 1, cols);
        cols.insert(k, col);
        sign = -sign;
    }
    det
}

pub fn encode_prime_index(n: u64) -> Vec<u8> {
    n.to_be_bytes().to_vec()
}

pub fn decode_u64(bytes: &[u8]) -> Result<u64, TaskError> {
    let arr: [u8; 8] = bytes
        .try_into()
        .map_err(|_| TaskError::Codec(format!("expected 8 bytes, got {}", bytes.len())))?;
    Ok(u64::from_be_bytes(arr))
}

pub fn encode_matrix(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 8 * m.entries.len());
    out.extend_from_slice(&(m.dim as u32).to_be_bytes());
    for v in &m.entries {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out
}

pub fn decode_matrix(bytes: &[u8]) -> Result<Matrix, TaskError> {
    let (header, body) = bytes
        .split_first_chunk::<4>()
        .ok_or_else(|| TaskError::Codec("matrix header truncated".into()))?;
    let dim = u32::from_be_bytes(*header) as usize;
    let expected = dim
        .checked_mul(dim)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| TaskError::Codec(format!("matrix dimension {dim} overflows")))?;
    if body.len() != expected {
        return Err(TaskError::Codec(format!(
            "matrix of dimension {dim} needs {expected} payload bytes, got {}",
            body.len()
        )));
    }
    let entries = body
        .chunks_exact(8)
        .map(|c| f64::from_be_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(Matrix { dim, entries })
}

pub fn encode_f64(v: f64) -> Vec<u8> {
    v.to_be_bytes().to_vec()
}

pub fn decode_f64(bytes: &[u8]) -> Result<f64, TaskError> {
    decode_u64(bytes).map(f64::from_bits)
}

/// A task that can run on either side of the link.
pub trait Task: Send + Sync {
    fn name(&self) -> &str;

    fn execute(&self, input: &[u8]) -> Result<Vec<u8>, TaskError>;

    /// Value substituted for `N` in the task's `Order` expression.
    fn input_value(&self, input: &[u8]) -> Result<f64, TaskError>;

    /// Input bytes charged to the link, before comparison with the
    /// descriptor's base input size.
    fn input_bytes(&self, input: &[u8]) -> Result<f64, TaskError>;
}

#[derive(Debug, Clone, Copy)]
pub struct NthPrimeTask {
    pub max_index: u64,
}

impl Default for NthPrimeTask {
    fn default() -> Self {
        Self {
            max_index: DEFAULT_MAX_PRIME_INDEX,
        }
    }
}

impl Task for NthPrimeTask {
    fn name(&self) -> &str {
        NTH_PRIME
    }

    fn execute(&self, input: &[u8]) -> Result<Vec<u8>, TaskError> {
        let n = decode_u64(input)?;
        nth_prime(n, self.max_index).map(|p| p.to_be_bytes().to_vec())
    }

    fn input_value(&self, input: &[u8]) -> Result<f64, TaskError> {
        decode_u64(input).map(|n| n as f64)
    }

    fn input_bytes(&self, input: &[u8]) -> Result<f64, TaskError> {
        decode_u64(input).map(|_| 8.0)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MatrixDeterminantTask {
    pub max_dim: usize,
}

impl Default for MatrixDeterminantTask {
    fn default() -> Self {
        Self {
            max_dim: DEFAULT_MAX_MATRIX_DIM,
        }
    }
}

impl Task for MatrixDeterminantTask {
    fn name(&self) -> &str {
        MATRIX_DETERMINANT
    }

    fn execute(&self, input: &[u8]) -> Result<Vec<u8>, TaskError> {
        let m = decode_matrix(input)?;
        matrix_determinant(&m, self.max_dim).map(encode_f64)
    }

    fn input_value(&self, input: &[u8]) -> Result<f64, TaskError> {
        decode_matrix(input).map(|m| m.dim as f64)
    }

    // The matrix entries; the dimension header is framing.
    fn input_bytes(&self, input: &[u8]) -> Result<f64, TaskError> {
        decode_matrix(input).map(|m| (8 * m.entries.len()) as f64)
    }
}

/// Tasks keyed by application name. Cheap to clone and safe to share.
#[derive(Clone, Default)]
pub struct TaskRegistry {
    tasks: BTreeMap<String, Arc<dyn Task>>,
}

impl TaskRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry holding the nth-prime and determinant tasks.
    pub fn with_builtin() -> Self {
        let mut registry = Self::new();
        registry.register(NthPrimeTask::default());
        registry.register(MatrixDeterminantTask::default());
        registry
    }

    pub fn register(&mut self, task: impl Task + 'static) {
        self.tasks.insert(task.name().to_string(), Arc::new(task));
    }

    pub fn get(&self, name: &str) -> Result<&dyn Task, TaskError> {
        self.tasks
            .get(name)
            .map(|t| t.as_ref())
            .ok_or_else(|| TaskError::UnknownTask(name.to_string()))
    }

    pub fn execute(&self, name: &str, input: &[u8]) -> Result<Vec<u8>, TaskError> {
        self.get(name)?.execute(input)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tasks.keys().map(String::as_str)
    }
}

impl std::fmt::Debug for TaskRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.tasks.keys()).finish()
    }
}

/// Deterministic input payload for a named task at sweep value `n`.
pub fn sample_input(task: &str, n: u64) -> Result<Vec<u8>, TaskError> {
    match task {
        NTH_PRIME => Ok(encode_prime_index(n)),
        MATRIX_DETERMINANT => Ok(encode_matrix(&Matrix::random(n as usize, n))),
        other => Err(TaskError::UnknownTask(other.to_string())),
    }
}
