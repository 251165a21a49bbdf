pub mod featurize;
pub mod fock;
pub mod interferometer;
pub mod pipeline;
pub mod qml;
pub mod seed;
pub mod simulator;
