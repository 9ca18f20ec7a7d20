//! Quantum proper time for spin-1/2 particles in weak static gravitational
//! fields: an exact operator algebra that carries out the Foldy–Wouthuysen
//! reduction and checks the tempo-operator identities, plus a spinor
//! wavepacket engine that accumulates proper time numerically.

pub mod opcore;
pub mod fw;
pub mod geometry;
pub mod dynamics;
