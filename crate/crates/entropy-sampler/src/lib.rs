//! Support library for the `entropy-sampler` binary.
//!
//! Only the table formats live here: the writers' float and unit-list
//! formatting plus the readers that parse every output file back. Scripts
//! and the integration tests share these readers, so the text formats have a
//! single definition.

pub mod table;
