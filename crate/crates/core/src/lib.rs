//! Exchangeable ("mu-mixed") renewal processes.
//!
//! A mu-mixed renewal process counts events whose inter-arrival times form an
//! exchangeable sequence: conditionally i.i.d. given a latent distribution drawn
//! from a mixing law. This crate provides
//!
//! - elementary distributions and signed Erlang mixtures ([`distributions`]),
//! - samplers and moment formulas for the exchangeable hierarchies ([`exchangeable`]),
//! - mixed renewal functions by closed form, series and Monte Carlo ([`renewal`]),
//! - a solver for general mixed renewal equations ([`renewal_equation`]),
//! - the Dirichlet-process renewal series built on the Ewens formula ([`dirichlet`]),
//! - maximum-likelihood fitting for multi-sequence failure data ([`inference`]).

pub mod dirichlet;
pub mod distributions;
mod error;
pub mod exchangeable;
pub mod inference;
pub mod latent;
pub mod quadrature;
pub mod renewal;
pub mod renewal_equation;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
