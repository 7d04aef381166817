pub mod bspline;
pub mod error;
pub mod frontier;
pub mod geom;
pub mod optim;
pub mod path;
pub mod state;
pub mod voxel_map;
pub mod world;
pub mod atsp;
pub mod tour;
pub mod heading;
pub mod config;
pub mod fsm;
pub mod sim;
pub mod bench;
