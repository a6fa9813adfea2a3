//! Excursion sets (in progress).
