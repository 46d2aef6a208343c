//! Periodic unfolding and homogenization of integral functionals with
//! Orlicz growth.

pub mod cell;
pub mod field;
pub mod harness;
pub mod integrand;
pub mod optim;
pub mod seed;
pub mod sum;
pub mod unfold;
pub mod young;
