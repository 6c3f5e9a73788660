//! Exact counting of k-free values of `f(x, y) = x*y^k + C`.
//!
//! The crate counts the pairs `1 <= x, y <= H` (or prime pairs) at which `f`
//! is k-free, evaluates the local densities and the Euler products that give
//! the leading constants of those counts, and enumerates the Diophantine
//! equations `v^l e^k - u^l d^k = h` that control the error term.
//!
//! Modules, bottom-up:
//!
//! * [`arith`]: gcd, modular powers and inverses, factorization, `mu_k`.
//! * [`sieves`]: prime, Möbius and segmented k-free tables (KFSV files).
//! * [`local_density`]: `rho(m)`, `rho'(m)` and the progression counter.
//! * [`euler_product`]: certified enclosures of `c_f` and `c'_f`.
//! * [`box_counting`]: `S(H)`, `S'(H)`, `S(m, H)` and the truncated Möbius sum.
//! * [`dioph`]: dyadic-box solution counts and the matching upper bound.
//! * [`experiments`]: scaling runs, exponent fits and predicted exponents.

pub mod arith;
pub mod box_counting;
pub mod dioph;
pub mod error;
pub mod euler_product;
pub mod experiments;
mod interval;
pub mod local_density;
pub mod sieves;

pub use error::{Error, Result};
pub use local_density::PolySpec;
