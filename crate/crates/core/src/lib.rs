pub mod gi;
pub mod harness;
pub mod kinematics;
pub mod noise;
pub mod planners;
pub mod trajectories;
