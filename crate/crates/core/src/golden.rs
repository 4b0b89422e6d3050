//! Incidence matrices of the published reference codes, transcribed row by
//! row (row `i` = pool `i`).

use crate::code::{GrayCode, IncidenceMatrix};

/// The maximal, perfectly balanced (5, 2, 10) code.
pub const EXAMPLE1_ROWS: [[u8; 10]; 5] = [
    [0, 1, 1, 0, 0, 0, 0, 0, 1, 1],
    [1, 0, 0, 1, 0, 0, 1, 0, 0, 1],
    [1, 1, 0, 0, 1, 1, 0, 0, 0, 0],
    [0, 0, 1, 1, 1, 0, 0, 1, 0, 0],
    [0, 0, 0, 0, 0, 1, 1, 1, 1, 0],
];

/// A (5, 1, 5) code joined in front of [`EXAMPLE1_ROWS`].
pub const EXAMPLE2_FIRST_ROWS: [[u8; 5]; 5] = [
    [1, 0, 0, 0, 0],
    [0, 0, 1, 0, 0],
    [0, 0, 0, 0, 1],
    [0, 0, 0, 1, 0],
    [0, 1, 0, 0, 0],
];

/// The (6, 2, 15) result of joining the two codes above.
pub const EXAMPLE2_COMBINED_ROWS: [[u8; 15]; 6] = [
    [1, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 1, 1],
    [0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1, 0, 0, 1],
    [0, 0, 0, 0, 1, 1, 1, 0, 0, 1, 1, 0, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 0, 1, 1, 1, 0, 0, 1, 0, 0],
    [0, 1, 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 0],
    [1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0],
];

pub fn matrix<const N: usize>(rows: &[[u8; N]]) -> IncidenceMatrix {
    let rows: Vec<Vec<u8>> = rows.iter().map(|r| r.to_vec()).collect();
    IncidenceMatrix::from_int_rows(&rows).expect("reference matrix is binary and rectangular")
}

pub fn example1() -> GrayCode {
    GrayCode::from_incidence(&matrix(&EXAMPLE1_ROWS)).expect("reference code")
}

pub fn example2_first() -> GrayCode {
    GrayCode::from_incidence(&matrix(&EXAMPLE2_FIRST_ROWS)).expect("reference code")
}

pub fn example2_combined() -> GrayCode {
    GrayCode::from_incidence(&matrix(&EXAMPLE2_COMBINED_ROWS)).expect("reference code")
}
