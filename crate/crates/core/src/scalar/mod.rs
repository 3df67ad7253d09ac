//! Exact scalars and linear algebra.

mod cyclotomic;
mod lattice;
mod linalg;

pub use cyclotomic::{
    cyclotomic_polynomial, embed_root, field, format_rational, parse_rational, totient,
    CycField, CycNumber, MAX_ORDER,
};
pub use lattice::{integer_lattice_kernel, LatticeKernel};
pub use linalg::{gram_schmidt, inner_product, orthogonal_complement, rank_of, CycMatrix, CycVector};

/// Least common multiple of a list of positive orders (1 for an empty list).
pub fn lcm_orders<I: IntoIterator<Item = u32>>(orders: I) -> u32 {
    use num_integer::Integer;
    orders.into_iter().fold(1, |acc, o| acc.lcm(&o.max(1)))
}
