//! Parametric games: strategies as polynomial variables, symbolic
//! utilities and their Nash equilibria.

mod ne;
mod polynomial;
mod psmas;
mod symbolic;
mod utility;

pub use ne::{best_response, solve_ne, verify_ne, NeOptions, NeReport, NeSolution};
pub use polynomial::{parse_polynomial, variables, Monomial, Polynomial};
pub use psmas::{build_psmas, Admissibility, Block, Evaluation, Param, Poly, Psmas};
pub use symbolic::{
    all_histories, symbolic_expected_payoff, symbolic_responsibility, symbolic_sat_probability, GRID_POINTS,
    MAX_CANDIDATES, MAX_GRID,
};
pub use utility::{
    utility, NumericUtilities, ParamSpace, Payoffs, PolyUtilities, SpaceBlock, Utilities, UtilityFunction,
};
