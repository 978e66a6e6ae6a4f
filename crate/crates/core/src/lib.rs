//! Least-cost abduction on weighted AND/OR graphs and most-probable
//! explanations on Bayesian networks, both solved as 0-1 integer programs.

pub mod bayes;
pub mod compare;
pub mod constraint;
pub mod generate;
pub mod lp;
pub mod solver;
pub mod waodag;
