//! Posterior computation (in progress).
